#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "critiq/detail/bessel.hpp"
#include "critiq/detail/quadrature.hpp"
#include "critiq/dists.hpp"
#include "critiq/errors.hpp"

namespace critiq::theory {

inline constexpr double kPi = 3.141592653589793238462643383279;

// var(D(t))/E[D(t)] limit at criticality.
inline double bravo_limit(double ca2, double cs2) {
    return (ca2 + cs2) * (1.0 - 2.0 / kPi);
}

// v-bar: lim var(D(t))/t at criticality.
inline double asymptotic_variance(double lambda, double ca2, double cs2) {
    return lambda * bravo_limit(ca2, cs2);
}

// P(B > x) ~ C x^{-1/2} tail constants. The general form takes the mean idle
// period; the M/G/1, G/M/1 and M/M/1 forms are its closed-form
// specializations (E[I] = 1/lambda, resp. (ca2+1)/(2 lambda)).
inline double tail_constant_general(double lambda, double ca2, double cs2, double mean_idle) {
    return mean_idle * std::sqrt(2.0 * lambda / (kPi * (ca2 + cs2)));
}

inline double tail_constant_mg1(double lambda, double cs2) {
    return std::sqrt(2.0 / ((1.0 + cs2) * kPi) / lambda);
}

inline double tail_constant_gm1(double lambda, double ca2) {
    return std::sqrt((ca2 + 1.0) / (2.0 * kPi) / lambda);
}

inline double tail_constant_mm1(double lambda) {
    return 1.0 / std::sqrt(kPi * lambda);
}

// P(N > n) ~ C n^{-1/2}.
inline double nstop_tail_constant(double lambda, double ca2, double cs2, double mean_idle) {
    return mean_idle * std::sqrt(2.0 * lambda * lambda / (kPi * (ca2 + cs2)));
}

inline double mean_idle_mg1(double lambda) { return 1.0 / lambda; }

inline double mean_idle_gm1(double lambda, double ca2) { return (ca2 + 1.0) / (2.0 * lambda); }

struct TheoryReport {
    double lambda{1.0};
    double ca2{1.0};
    double cs2{1.0};
    double bravo_limit{0.0};
    double asymptotic_variance{0.0};
    double tail_constant_mm1{0.0};
    double tail_constant_mg1{0.0};
    double tail_constant_gm1{0.0};
    double mean_idle_mg1{0.0};
    double mean_idle_gm1{0.0};
    std::optional<double> mean_idle;              // supplied or implied by the model
    std::optional<double> tail_constant_general;  // needs mean_idle
};

// All closed-form constants for a critical model. mean_idle may be supplied
// (e.g. a Monte-Carlo estimate); when absent it is implied for models with an
// exponential arrival (M/G/1) or service (G/M/1) side.
inline TheoryReport constants(const QueueModel& model,
                              std::optional<double> mean_idle = std::nullopt) {
    if (!model.critical())
        throw CriticalityError("theory constants require rho = 1, got rho = " +
                               std::to_string(model.rho));
    if (model.degenerate())
        throw DegenerateModelError("sigma^2 = 0: tail/idle constants are undefined");

    TheoryReport r;
    r.lambda = model.lambda;
    r.ca2 = model.ca2();
    r.cs2 = model.cs2();
    r.bravo_limit = bravo_limit(r.ca2, r.cs2);
    r.asymptotic_variance = asymptotic_variance(r.lambda, r.ca2, r.cs2);
    r.tail_constant_mm1 = tail_constant_mm1(r.lambda);
    r.tail_constant_mg1 = tail_constant_mg1(r.lambda, r.cs2);
    r.tail_constant_gm1 = tail_constant_gm1(r.lambda, r.ca2);
    r.mean_idle_mg1 = mean_idle_mg1(r.lambda);
    r.mean_idle_gm1 = mean_idle_gm1(r.lambda, r.ca2);

    if (mean_idle) r.mean_idle = mean_idle;
    else if (model.arrival.family == Family::exponential) r.mean_idle = r.mean_idle_mg1;
    else if (model.service.family == Family::exponential) r.mean_idle = r.mean_idle_gm1;

    if (r.mean_idle)
        r.tail_constant_general = tail_constant_general(r.lambda, r.ca2, r.cs2, *r.mean_idle);
    return r;
}

// Critical M/M/1 busy-period density f(t) = e^{-2 lambda t} I1(2 lambda t)/t.
inline double mm1_busy_density(double lambda, double t) {
    if (lambda <= 0.0) throw ParameterError("lambda must be > 0");
    if (t < 0.0) throw std::domain_error("busy-period density needs t >= 0");
    return 2.0 * lambda * detail::i1e_over_z(2.0 * lambda * t);
}

// Exact P(B > x) for critical M/M/1, by quadrature of the density. In the
// walk variable z = 2 lambda t the integrand is e^{-z} I1(z)/z; the finite
// part is integrated adaptively and the remainder beyond z = 512 comes from
// the term-by-term integral of the asymptotic expansion. Relative accuracy
// is ~1e-10, well inside the 1e-8 contract.
inline double mm1_busy_survival(double lambda, double x) {
    if (lambda <= 0.0) throw ParameterError("lambda must be > 0");
    if (x < 0.0) throw std::domain_error("busy-period survival needs x >= 0");

    constexpr double kTailCut = 512.0;
    const double w = 2.0 * lambda * x;

    const auto tail_beyond = [](double W) {
        // int_W^inf z^{-(k+3/2)} dz termwise on I1's asymptotic series
        double sum = 0.0;
        double wk = std::pow(W, -0.5);
        for (int k = 0; k < detail::kI1AsymTerms; ++k) {
            sum += detail::kI1AsymCoef[k] * wk / (k + 0.5);
            wk /= W;
        }
        return sum / std::sqrt(detail::kTwoPi);
    };

    if (w >= kTailCut) return tail_beyond(w);
    const double finite =
        detail::integrate_adaptive([](double z) { return detail::i1e_over_z(z); }, w, kTailCut,
                                   1e-13);
    return finite + tail_beyond(kTailCut);
}

}  // namespace critiq::theory
