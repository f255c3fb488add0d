#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "critiq/dists.hpp"
#include "critiq/errors.hpp"
#include "critiq/rwalk.hpp"
#include "critiq/theory.hpp"

namespace critiq::stats {

// log-spaced grid with `points` entries from lo to hi inclusive.
inline std::vector<double> log_spaced_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo)) throw ParameterError("grid needs 0 < lo < hi");
    if (points < 2) throw ParameterError("grid needs >= 2 points");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < points; ++i)
        g[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * static_cast<double>(i) / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

// Ordinary least squares y = intercept + slope*x with the residual-based
// standard error of the slope.
struct LinearFit {
    double slope{0.0};
    double intercept{0.0};
    double slope_se{0.0};
};

inline LinearFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    if (m != y.size() || m < 2) throw ParameterError("ols needs >= 2 paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw ParameterError("ols: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ssr += r * r;
    }
    f.slope_se = m > 2 ? std::sqrt(ssr / (static_cast<double>(m) - 2.0) / sxx) : 0.0;
    return f;
}

struct SurvivalCurve {
    std::vector<double> x;
    std::vector<double> survival;          // P(B > x)
    std::vector<double> se;                // binomial standard error
    std::vector<std::int64_t> n_exceed;    // numerator counts
    std::vector<std::int64_t> n_at_risk;   // denominator per point
    std::vector<std::int64_t> n_excluded;  // censored samples excluded at this x
};

// Survival from exceedance counts (the streaming path). A censored sample is
// informative only below its accumulated busy time: above it, it is excluded
// from both numerator and denominator.
inline SurvivalCurve survival_from_counts(const std::vector<double>& grid,
                                          const std::vector<std::int64_t>& exceed,
                                          const std::vector<std::int64_t>& excluded,
                                          std::int64_t n_total) {
    SurvivalCurve c;
    c.x = grid;
    const std::size_t m = grid.size();
    c.survival.resize(m);
    c.se.resize(m);
    c.n_exceed = exceed;
    c.n_at_risk.resize(m);
    c.n_excluded = excluded;
    for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t at_risk = n_total - excluded[i];
        c.n_at_risk[i] = at_risk;
        if (at_risk <= 0) {
            c.survival[i] = std::numeric_limits<double>::quiet_NaN();
            c.se[i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double p = static_cast<double>(exceed[i]) / static_cast<double>(at_risk);
        c.survival[i] = p;
        c.se[i] = std::sqrt(p * (1.0 - p) / static_cast<double>(at_risk));
    }
    return c;
}

inline SurvivalCurve empirical_survival(const std::vector<rwalk::BusyCycleSample>& samples,
                                        const std::vector<double>& grid) {
    if (samples.empty()) throw FitError("empirical_survival: empty sample set");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw ParameterError("x grid must be strictly increasing");

    std::vector<std::int64_t> exceed(grid.size(), 0), excluded(grid.size(), 0);
    bool any_uncensored_above_min = false;
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (s.busy > grid[i]) {
                ++exceed[i];
            } else if (s.censored) {
                ++excluded[i];
            }
        }
        if (!s.censored && !grid.empty() && s.busy > grid.front())
            any_uncensored_above_min = true;
    }
    if (!grid.empty() && !any_uncensored_above_min)
        throw FitError("empirical_survival: no uncensored sample above the smallest grid point");
    return survival_from_counts(grid, exceed, excluded,
                                static_cast<std::int64_t>(samples.size()));
}

// Power-law tail fit on a log-spaced grid inside [lo, hi]. The free-slope
// exponent (expected near -1/2) and the fixed-index constant
// mean(sqrt(x) P(B>x)) are estimated separately so the two checks fail
// independently.
struct TailFit {
    double exponent{0.0};
    double exponent_se{0.0};
    double constant{0.0};
    double constant_se{0.0};
    double window_lo{0.0};
    double window_hi{0.0};
    std::int64_t n_tail{0};  // samples with B > window_lo
    bool power_law{false};   // |exponent + 1/2| <= 0.15
};

struct TailWindow {
    double lo{0.0};
    double hi{0.0};
};

inline constexpr std::int64_t kMinTailSamples = 200;

inline TailFit fit_tail_from_curve(const SurvivalCurve& curve, TailWindow window) {
    std::vector<double> lx, lp, sqrtxp;
    std::int64_t n_tail = 0;
    bool have_lo = false;
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        const double x = curve.x[i];
        if (x < window.lo || x > window.hi) continue;
        if (!have_lo) {
            n_tail = curve.n_exceed[i];
            have_lo = true;
        }
        const double p = curve.survival[i];
        if (!(p > 0.0)) continue;
        lx.push_back(std::log(x));
        lp.push_back(std::log(p));
        sqrtxp.push_back(std::sqrt(x) * p);
    }
    if (lx.size() < 3)
        throw FitError("fit_tail: fewer than 3 positive survival points inside the window");
    if (n_tail < kMinTailSamples)
        throw FitError("fit_tail: needs >= " + std::to_string(kMinTailSamples) +
                       " samples above the window lower bound, have " + std::to_string(n_tail));

    const std::size_t m = lx.size();
    const LinearFit line = ols(lx, lp);

    TailFit fit;
    fit.exponent = line.slope;
    fit.exponent_se = line.slope_se;
    double mc = 0.0;
    for (const double v : sqrtxp) mc += v;
    mc /= static_cast<double>(m);
    double vc = 0.0;
    for (const double v : sqrtxp) vc += (v - mc) * (v - mc);
    fit.constant = mc;
    // Grid points share samples, so this spread-based s.e. is indicative only.
    fit.constant_se =
        m > 1 ? std::sqrt(vc / (static_cast<double>(m) - 1.0) / static_cast<double>(m)) : 0.0;
    fit.window_lo = window.lo;
    fit.window_hi = window.hi;
    fit.n_tail = n_tail;
    fit.power_law = std::abs(fit.exponent + 0.5) <= 0.15;
    return fit;
}

// Window guard shared by the vector and streaming paths. censor_safe_hi is
// the largest x at which step-cap censoring cannot bias the curve; the cycle
// sampler's convention is step_cap/(10 lambda). +inf for censor-free data.
inline void validate_tail_window(TailWindow window, double max_uncensored_busy,
                                 double censor_safe_hi) {
    if (!(window.lo > 0.0) || !(window.hi > window.lo))
        throw ParameterError("fit_tail: window needs 0 < lo < hi");
    if (window.hi > 0.5 * max_uncensored_busy)
        throw FitError("fit_tail: window upper bound exceeds half the largest uncensored B");
    if (window.hi > censor_safe_hi)
        throw FitError("fit_tail: window upper bound exceeds the censoring-safe range");
}

inline double censor_safe_bound(std::int64_t step_cap, double lambda) {
    return static_cast<double>(step_cap) / (10.0 * lambda);
}

inline TailFit fit_tail(const std::vector<rwalk::BusyCycleSample>& samples, TailWindow window,
                        int grid_points = 25,
                        double censor_safe_hi = std::numeric_limits<double>::infinity()) {
    if (samples.empty()) throw FitError("fit_tail: empty sample set");
    double max_uncensored = 0.0;
    for (const auto& s : samples)
        if (!s.censored && s.busy > max_uncensored) max_uncensored = s.busy;
    validate_tail_window(window, max_uncensored, censor_safe_hi);

    const auto grid = log_spaced_grid(window.lo, window.hi, grid_points);
    return fit_tail_from_curve(empirical_survival(samples, grid), window);
}

struct TheoryComparison {
    double c_theory{0.0};
    double rel_err{0.0};
    double tolerance{0.0};
    bool pass{false};
};

// Checks the fitted constant against E[I] sqrt(2 lambda / (pi (ca2+cs2)))
// with E[I] estimated from the same model run.
inline TheoryComparison compare_to_theory(const TailFit& fit, const QueueModel& model,
                                          double mean_idle, double tolerance = 0.10) {
    if (model.degenerate())
        throw DegenerateModelError("sigma^2 = 0: the tail constant is undefined");
    TheoryComparison cmp;
    cmp.c_theory = theory::tail_constant_general(model.lambda, model.ca2(), model.cs2(), mean_idle);
    cmp.rel_err = std::abs(fit.constant - cmp.c_theory) / cmp.c_theory;
    cmp.tolerance = tolerance;
    cmp.pass = cmp.rel_err <= tolerance;
    return cmp;
}

inline TheoryComparison compare_to_theory(const TailFit& fit, const QueueModel& model,
                                          const rwalk::ConstantsEstimate& constants,
                                          double tolerance = 0.10) {
    return compare_to_theory(fit, model, constants.mean_idle, tolerance);
}

}  // namespace critiq::stats
