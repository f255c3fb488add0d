#pragma once

#include <cmath>

namespace critiq::detail {

// Exponentially scaled modified Bessel function of the first kind, order 1:
// i1e(z) = e^{-z} I1(z), z >= 0. Power series below the switch point,
// scaled asymptotic expansion above it. The switch at z = 20 keeps both
// routes comfortably below 1e-11 relative error (the asymptotic tail term
// ratio at z = 20 is still < 0.3 at the truncation order used here).
inline constexpr double kI1SeriesCutoff = 20.0;

// Asymptotic coefficients: I1(z) ~ e^z/sqrt(2 pi z) * sum_k c_k z^{-k} with
// c_k = (-1)^k prod_{j<=k}(4-(2j-1)^2) / (k! 8^k).
inline constexpr double kI1AsymCoef[] = {
    1.0,
    -3.0 / 8.0,
    -15.0 / 128.0,
    -105.0 / 1024.0,
    -4725.0 / 32768.0,
    -72765.0 / 262144.0,
    -2837835.0 / 4194304.0,
    -66891825.0 / 33554432.0,
    -14783093325.0 / 2147483648.0,
    -468131288625.0 / 17179869184.0,
    -33424574007825.0 / 274877906944.0,
};
inline constexpr int kI1AsymTerms = 11;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// e^{-z} I1(z)/z, with the removable limit 1/2 at z = 0. This is the natural
// building block here: the critical M/M/1 busy-period density in the walk
// variable z = 2*lambda*t is exactly this function.
inline double i1e_over_z(double z) {
    if (z < kI1SeriesCutoff) {
        // I1(z)/z = (1/2) sum_k (z^2/4)^k / (k! (k+1)!)
        const double q = 0.25 * z * z;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<double>(k) * (k + 1));
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return 0.5 * sum * std::exp(-z);
    }
    double poly = 0.0;
    double zk = 1.0;
    for (int k = 0; k < kI1AsymTerms; ++k) {
        poly += kI1AsymCoef[k] * zk;
        zk /= z;
    }
    return poly / (std::sqrt(kTwoPi * z) * z);
}

inline double i1e(double z) { return i1e_over_z(z) * z; }

}  // namespace critiq::detail
