#pragma once

#include <cmath>
#include <cstdint>

namespace critiq::detail {

// Adaptive Simpson with Richardson error control. The integrands used here
// are smooth and positive, so the classical |S2 - S1|/15 estimate is sound.
template <class F>
double simpson_recurse(const F& f, double a, double fa, double b, double fb, double m, double fm,
                       double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate_adaptive(const F& f, double a, double b, double tol, int max_depth = 48) {
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_recurse(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace critiq::detail
