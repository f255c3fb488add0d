#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "critiq/dists.hpp"
#include "critiq/errors.hpp"
#include "critiq/parallel.hpp"
#include "critiq/rng.hpp"

namespace critiq::rwalk {

// One regenerative cycle of the embedded walk S_n = sum(V_i - U_i):
// N = first n >= 1 with S_n <= 0 (boundary inclusive), B = sum of the N
// services, I = -S_N. A cycle that has not crossed by `step_cap` steps is
// censored: n_served = cap, busy = services accumulated so far, idle = NaN.
struct BusyCycleSample {
    std::int64_t n_served{0};
    double busy{0.0};
    double idle{0.0};
    bool censored{false};
};

inline constexpr double kCensoredIdle = std::numeric_limits<double>::quiet_NaN();

inline BusyCycleSample sample_cycle(const QueueModel& model, RngStream& rng,
                                    std::int64_t step_cap) {
    double s = 0.0;
    double busy = 0.0;
    for (std::int64_t n = 1; n <= step_cap; ++n) {
        const double v = model.service.sample(rng);
        const double u = model.arrival.sample(rng);
        busy += v;
        s += v - u;
        if (s <= 0.0) return {n, busy, -s, false};
    }
    return {step_cap, busy, kCensoredIdle, true};
}

// Streaming statistics over many cycles. Grids are optional; when set,
// exceedance counts are tallied so survival curves can be built without
// materializing the samples. Censored cycles count as B > x only while x is
// below their accumulated busy time (otherwise excluded), and as N > n for
// every grid n (grids are required to sit below the step cap).
struct CycleStats {
    std::vector<double> busy_grid;
    std::vector<std::int64_t> nserved_grid;

    std::int64_t n_cycles{0};
    std::int64_t n_censored{0};
    std::int64_t idle_n{0};
    double idle_sum{0.0};
    double idle_sumsq{0.0};
    double max_uncensored_busy{0.0};
    std::vector<std::int64_t> busy_exceed;
    std::vector<std::int64_t> busy_excluded;
    std::vector<std::int64_t> nserved_exceed;

    CycleStats() = default;
    CycleStats(std::vector<double> bgrid, std::vector<std::int64_t> ngrid)
        : busy_grid(std::move(bgrid)),
          nserved_grid(std::move(ngrid)),
          busy_exceed(busy_grid.size(), 0),
          busy_excluded(busy_grid.size(), 0),
          nserved_exceed(nserved_grid.size(), 0) {}

    void observe(const BusyCycleSample& c) {
        ++n_cycles;
        if (c.censored) {
            ++n_censored;
            for (std::size_t i = 0; i < busy_grid.size(); ++i) {
                if (c.busy > busy_grid[i]) ++busy_exceed[i];
                else ++busy_excluded[i];
            }
            for (std::size_t i = 0; i < nserved_grid.size(); ++i) ++nserved_exceed[i];
            return;
        }
        ++idle_n;
        idle_sum += c.idle;
        idle_sumsq += c.idle * c.idle;
        if (c.busy > max_uncensored_busy) max_uncensored_busy = c.busy;
        for (std::size_t i = 0; i < busy_grid.size(); ++i)
            if (c.busy > busy_grid[i]) ++busy_exceed[i];
        for (std::size_t i = 0; i < nserved_grid.size(); ++i)
            if (c.n_served > nserved_grid[i]) ++nserved_exceed[i];
    }

    // Associative merge; callers combine partials in block order so float
    // sums are reproducible.
    void merge(const CycleStats& o) {
        n_cycles += o.n_cycles;
        n_censored += o.n_censored;
        idle_n += o.idle_n;
        idle_sum += o.idle_sum;
        idle_sumsq += o.idle_sumsq;
        if (o.max_uncensored_busy > max_uncensored_busy)
            max_uncensored_busy = o.max_uncensored_busy;
        for (std::size_t i = 0; i < busy_exceed.size(); ++i) {
            busy_exceed[i] += o.busy_exceed[i];
            busy_excluded[i] += o.busy_excluded[i];
        }
        for (std::size_t i = 0; i < nserved_exceed.size(); ++i)
            nserved_exceed[i] += o.nserved_exceed[i];
    }

    double mean_idle() const { return idle_sum / static_cast<double>(idle_n); }
    double se_idle() const {
        const double n = static_cast<double>(idle_n);
        const double var = (idle_sumsq - idle_sum * idle_sum / n) / (n - 1.0);
        return std::sqrt(var / n);
    }
    double censored_fraction() const {
        return static_cast<double>(n_censored) / static_cast<double>(n_cycles);
    }
};

// Cycles are sampled on deterministic substreams keyed by (seed, cycle
// index); per-block partials (fixed block size) are merged in index order, so
// the result is bit-identical for any thread count.
inline constexpr std::int64_t kCycleBlock = 4096;

inline CycleStats run_cycles(const QueueModel& model, std::uint64_t seed, std::int64_t n_cycles,
                             std::int64_t step_cap, std::vector<double> busy_grid,
                             std::vector<std::int64_t> nserved_grid, int threads = 0) {
    if (n_cycles < 1) throw ParameterError("n_cycles must be >= 1");
    if (step_cap < 1) throw ParameterError("step_cap must be >= 1");
    for (const auto n : nserved_grid)
        if (n < 0 || n >= step_cap)
            throw ParameterError("n_served grid must lie in [0, step_cap)");

    const std::int64_t n_blocks = (n_cycles + kCycleBlock - 1) / kCycleBlock;
    std::vector<CycleStats> partial(static_cast<std::size_t>(n_blocks));
    parallel_blocks(n_cycles, kCycleBlock, threads,
                    [&](std::int64_t begin, std::int64_t end, std::int64_t block) {
                        CycleStats local(busy_grid, nserved_grid);
                        for (std::int64_t i = begin; i < end; ++i) {
                            RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(i));
                            local.observe(sample_cycle(model, rng, step_cap));
                        }
                        partial[static_cast<std::size_t>(block)] = std::move(local);
                    });
    CycleStats total(std::move(busy_grid), std::move(nserved_grid));
    for (auto& p : partial) total.merge(p);
    return total;
}

// Materialized variant (per-cycle CSV emission, small studies). Sample i is
// identical to what run_cycles observes for the same (seed, i).
inline std::vector<BusyCycleSample> sample_cycles(const QueueModel& model, std::uint64_t seed,
                                                  std::int64_t n_cycles, std::int64_t step_cap,
                                                  int threads = 0) {
    std::vector<BusyCycleSample> out(static_cast<std::size_t>(n_cycles));
    parallel_blocks(n_cycles, kCycleBlock, threads,
                    [&](std::int64_t begin, std::int64_t end, std::int64_t) {
                        for (std::int64_t i = begin; i < end; ++i) {
                            RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(i));
                            out[static_cast<std::size_t>(i)] = sample_cycle(model, rng, step_cap);
                        }
                    });
    return out;
}

// Estimates of the constants in E[I] = (sigma/sqrt(2)) e^{-b}. b_from_idle
// inverts that identity on the Monte-Carlo idle mean and is the operational
// estimate; the two series variants (raw terms, and 1/n-weighted terms of
// P(S_n < 0) - 1/2) are reported alongside it as partial-sum sequences.
struct ConstantsEstimate {
    double mean_idle{0.0};
    double se_idle{0.0};
    double b_from_idle{0.0};
    std::vector<double> b_series_literal;
    std::vector<double> b_series_weighted;
    std::int64_t n_cycles{0};
    std::int64_t n_censored{0};
    double censored_fraction{0.0};
    std::int64_t series_reps{0};
};

namespace detail {
inline constexpr std::uint64_t kSeriesTag = 0x5e12e5u;
}

// Build the estimate from an existing cycle pass; the series part runs its
// own fresh walk replications under a derived seed.
inline ConstantsEstimate constants_from_stats(const QueueModel& model, const CycleStats& stats,
                                              std::uint64_t seed, int series_depth,
                                              std::int64_t series_reps, int threads = 0) {
    if (model.degenerate())
        throw DegenerateModelError("sigma^2 = 0: idle/b constants are undefined");
    if (series_depth < 1) throw ParameterError("series_depth must be >= 1");
    if (series_reps < 1) throw ParameterError("series_reps must be >= 1");
    if (stats.idle_n == 0) throw FitError("all cycles censored; raise step_cap");

    ConstantsEstimate est;
    est.n_cycles = stats.n_cycles;
    est.n_censored = stats.n_censored;
    est.censored_fraction = stats.censored_fraction();
    est.mean_idle = stats.mean_idle();
    est.se_idle = stats.se_idle();
    est.b_from_idle = std::log(model.sigma() / (std::sqrt(2.0) * est.mean_idle));
    est.series_reps = series_reps;

    // P(S_n < 0) for n = 1..depth from fresh walk replications, independent
    // of the cycle samples above.
    const std::uint64_t series_seed = derive_seed(seed, detail::kSeriesTag);
    const std::size_t depth = static_cast<std::size_t>(series_depth);
    const std::int64_t n_blocks = (series_reps + kCycleBlock - 1) / kCycleBlock;
    std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(n_blocks));
    parallel_blocks(series_reps, kCycleBlock, threads,
                    [&](std::int64_t begin, std::int64_t end, std::int64_t block) {
                        std::vector<std::int64_t> local(depth, 0);
                        for (std::int64_t r = begin; r < end; ++r) {
                            RngStream rng =
                                RngStream::substream(series_seed, static_cast<std::uint64_t>(r));
                            double s = 0.0;
                            for (std::size_t n = 0; n < depth; ++n) {
                                const double v = model.service.sample(rng);
                                const double u = model.arrival.sample(rng);
                                s += v - u;
                                if (s < 0.0) ++local[n];
                            }
                        }
                        counts[static_cast<std::size_t>(block)] = std::move(local);
                    });
    std::vector<std::int64_t> neg(depth, 0);
    for (const auto& c : counts)
        for (std::size_t n = 0; n < depth; ++n) neg[n] += c[n];

    est.b_series_literal.resize(depth);
    est.b_series_weighted.resize(depth);
    double lit = 0.0, wgt = 0.0;
    for (std::size_t n = 0; n < depth; ++n) {
        const double term =
            static_cast<double>(neg[n]) / static_cast<double>(series_reps) - 0.5;
        lit += term;
        wgt += term / static_cast<double>(n + 1);
        est.b_series_literal[n] = lit;
        est.b_series_weighted[n] = wgt;
    }
    return est;
}

inline ConstantsEstimate estimate_constants(const QueueModel& model, std::uint64_t seed,
                                            std::int64_t n_cycles, int series_depth,
                                            std::int64_t series_reps,
                                            std::int64_t step_cap = 10'000'000, int threads = 0) {
    if (n_cycles < 1000) throw ParameterError("estimate_constants needs n_cycles >= 1000");
    const CycleStats stats = run_cycles(model, seed, n_cycles, step_cap, {}, {}, threads);
    return constants_from_stats(model, stats, seed, series_depth, series_reps, threads);
}

// Empirical tail of the stopping time N at the given n values.
struct NSurvival {
    std::vector<std::int64_t> n;
    std::vector<double> survival;
    std::vector<double> se;
    std::int64_t n_cycles{0};
};

inline NSurvival survival_N(const QueueModel& model, std::uint64_t seed, std::int64_t n_cycles,
                            const std::vector<std::int64_t>& grid,
                            std::int64_t step_cap = 10'000'000, int threads = 0) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw ParameterError("n grid must be strictly increasing");

    const CycleStats stats = run_cycles(model, seed, n_cycles, step_cap, {}, grid, threads);
    NSurvival out;
    out.n = grid;
    out.n_cycles = stats.n_cycles;
    out.survival.resize(grid.size());
    out.se.resize(grid.size());
    const double total = static_cast<double>(stats.n_cycles);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = static_cast<double>(stats.nserved_exceed[i]) / total;
        out.survival[i] = p;
        out.se[i] = std::sqrt(p * (1.0 - p) / total);
    }
    return out;
}

}  // namespace critiq::rwalk
