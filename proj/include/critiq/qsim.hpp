#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "critiq/dists.hpp"
#include "critiq/errors.hpp"
#include "critiq/parallel.hpp"
#include "critiq/rng.hpp"

namespace critiq::qsim {

// Incremental FIFO single-server path. Construction places an arrival into
// the empty system at time 0 whose service starts immediately. Events are
// processed in time order; a departure that coincides with an arrival is
// processed first (this keeps the D/D/1 trace at Q == 1 and matches the
// walk's inclusive stopping rule S_n <= 0).
class QueuePath {
  public:
    struct Event {
        double time{0.0};
        bool is_departure{false};
        bool completed_period{false};      // departure that emptied the system
        std::int64_t period_n_served{0};   // N of the completed busy period
    };

    QueuePath(const QueueModel& model, RngStream& rng) : model_(model), rng_(rng) {
        pending_.push_back({0.0, model_.service.sample(rng_)});
        next_arrival_ = model_.arrival.sample(rng_);
    }

    double next_event_time() const { return std::min(next_departure_time(), next_arrival_); }

    Event step() {
        const double td = next_departure_time();
        if (td <= next_arrival_) {
            last_departure_ = td;
            pending_.pop_front();
            ++departures_;
            ++served_in_period_;
            Event ev{td, true, pending_.empty(), 0};
            if (ev.completed_period) {
                ev.period_n_served = served_in_period_;
                served_in_period_ = 0;
            }
            return ev;
        }
        const double ta = next_arrival_;
        pending_.push_back({ta, model_.service.sample(rng_)});
        next_arrival_ = ta + model_.arrival.sample(rng_);
        ++arrivals_;
        return {ta, false, false, 0};
    }

    std::int64_t arrivals() const { return arrivals_; }  // post-time-0 arrivals
    std::int64_t departures() const { return departures_; }
    std::int64_t queue_len() const { return static_cast<std::int64_t>(pending_.size()); }

  private:
    struct Customer {
        double arrival;
        double service;
    };

    double next_departure_time() const {
        if (pending_.empty()) return std::numeric_limits<double>::infinity();
        return std::max(last_departure_, pending_.front().arrival) + pending_.front().service;
    }

    const QueueModel& model_;
    RngStream& rng_;
    std::deque<Customer> pending_;
    double last_departure_{0.0};
    double next_arrival_{0.0};
    std::int64_t arrivals_{0};
    std::int64_t departures_{0};
    std::int64_t served_in_period_{0};
};

struct PathSample {
    std::vector<double> grid;
    std::vector<std::int64_t> arrivals;
    std::vector<std::int64_t> departures;
    std::vector<std::int64_t> queue_len;  // 1 + A(t) - D(t)
    std::vector<double> queue_len_sq_over_t;
};

inline void validate_time_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ParameterError("time grid must be nonempty");
    if (!(grid.front() > 0.0)) throw ParameterError("time grid must start at t > 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw ParameterError("time grid must be strictly increasing");
}

inline PathSample simulate_path(const QueueModel& model, RngStream& rng,
                                const std::vector<double>& grid) {
    validate_time_grid(grid);
    PathSample out;
    out.grid = grid;
    out.arrivals.reserve(grid.size());
    out.departures.reserve(grid.size());
    out.queue_len.reserve(grid.size());
    out.queue_len_sq_over_t.reserve(grid.size());

    QueuePath path(model, rng);
    for (const double t : grid) {
        while (path.next_event_time() <= t) path.step();
        out.arrivals.push_back(path.arrivals());
        out.departures.push_back(path.departures());
        const std::int64_t q = path.queue_len();
        out.queue_len.push_back(q);
        out.queue_len_sq_over_t.push_back(static_cast<double>(q) * static_cast<double>(q) / t);
    }
    return out;
}

// N per completed busy period, from the full event mechanics (used to
// cross-check the embedded-walk sampler against the queue itself).
inline std::vector<std::int64_t> busy_period_counts(const QueueModel& model, RngStream& rng,
                                                    std::int64_t n_periods) {
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(n_periods));
    QueuePath path(model, rng);
    while (static_cast<std::int64_t>(out.size()) < n_periods) {
        const auto ev = path.step();
        if (ev.completed_period) out.push_back(ev.period_n_served);
    }
    return out;
}

// Replicated grid counts: row r holds replication r, simulated on substream
// (seed, r). Rows are filled in disjoint fixed-size blocks, so the matrix is
// identical for any thread count.
struct GridCounts {
    std::vector<double> grid;
    std::int64_t n_reps{0};
    std::vector<std::uint32_t> arrivals;   // n_reps x grid.size(), row-major
    std::vector<std::uint32_t> departures;
    std::vector<std::uint32_t> queue_len;

    std::size_t idx(std::int64_t rep, std::size_t g) const {
        return static_cast<std::size_t>(rep) * grid.size() + g;
    }
};

inline constexpr std::int64_t kRepBlock = 8;

inline GridCounts run_grid_reps(const QueueModel& model, std::uint64_t seed,
                                const std::vector<double>& grid, std::int64_t n_reps,
                                int threads = 0) {
    validate_time_grid(grid);
    if (n_reps < 1) throw ParameterError("n_reps must be >= 1");
    GridCounts gc;
    gc.grid = grid;
    gc.n_reps = n_reps;
    const std::size_t cells = static_cast<std::size_t>(n_reps) * grid.size();
    gc.arrivals.resize(cells);
    gc.departures.resize(cells);
    gc.queue_len.resize(cells);

    parallel_blocks(n_reps, kRepBlock, threads,
                    [&](std::int64_t begin, std::int64_t end, std::int64_t) {
                        for (std::int64_t r = begin; r < end; ++r) {
                            RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(r));
                            const PathSample p = simulate_path(model, rng, grid);
                            for (std::size_t g = 0; g < grid.size(); ++g) {
                                gc.arrivals[gc.idx(r, g)] = static_cast<std::uint32_t>(p.arrivals[g]);
                                gc.departures[gc.idx(r, g)] =
                                    static_cast<std::uint32_t>(p.departures[g]);
                                gc.queue_len[gc.idx(r, g)] =
                                    static_cast<std::uint32_t>(p.queue_len[g]);
                            }
                        }
                    });
    return gc;
}

enum class CountProcess { departures, arrivals };

// Across-replication mean and variance of the counting process at each grid
// time, the variance/mean ratio, and a delta-method 95% half-width for it.
struct BravoCurve {
    std::vector<double> grid;
    std::vector<double> mean_count;
    std::vector<double> var_count;
    std::vector<double> ratio;
    std::vector<double> ci_half;
    std::int64_t n_reps{0};
};

inline BravoCurve bravo_from_counts(const GridCounts& gc, CountProcess which) {
    const std::vector<std::uint32_t>& counts =
        which == CountProcess::departures ? gc.departures : gc.arrivals;
    const std::size_t G = gc.grid.size();
    const double n = static_cast<double>(gc.n_reps);

    BravoCurve curve;
    curve.grid = gc.grid;
    curve.n_reps = gc.n_reps;
    curve.mean_count.resize(G);
    curve.var_count.resize(G);
    curve.ratio.resize(G);
    curve.ci_half.resize(G);

    for (std::size_t g = 0; g < G; ++g) {
        std::int64_t sum = 0;
        for (std::int64_t r = 0; r < gc.n_reps; ++r)
            sum += counts[gc.idx(r, g)];
        const double mean = static_cast<double>(sum) / n;
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (std::int64_t r = 0; r < gc.n_reps; ++r) {
            const double d = static_cast<double>(counts[gc.idx(r, g)]) - mean;
            const double d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        const double mu2 = m2 / n;
        const double mu3 = m3 / n;
        const double mu4 = m4 / n;
        const double var = m2 / (n - 1.0);
        curve.mean_count[g] = mean;
        curve.var_count[g] = var;
        curve.ratio[g] = var / mean;
        // delta method on (mean, variance) with Cov terms
        const double var_ratio =
            ((mu4 - mu2 * mu2) / (mean * mean) + mu2 * mu2 * mu2 / std::pow(mean, 4) -
             2.0 * mu2 * mu3 / std::pow(mean, 3)) /
            n;
        curve.ci_half[g] = 1.959963984540054 * std::sqrt(std::max(0.0, var_ratio));
    }
    return curve;
}

inline BravoCurve bravo_curve(const QueueModel& model, std::uint64_t seed,
                              const std::vector<double>& grid, std::int64_t n_reps,
                              int threads = 0,
                              CountProcess which = CountProcess::departures) {
    if (n_reps < 100) throw ParameterError("bravo_curve needs n_reps >= 100");
    return bravo_from_counts(run_grid_reps(model, seed, grid, n_reps, threads), which);
}

// Load sweep: rescale the service mean to each rho and report the final-time
// variance/mean ratio of departures. Each load point runs under its own
// derived seed.
struct SweepRow {
    double rho{0.0};
    double t_horizon{0.0};
    double ratio{0.0};
    double ci_half{0.0};
};

inline std::vector<SweepRow> load_sweep(const DistributionSpec& arrival,
                                        const DistributionSpec& service, double lambda,
                                        const std::vector<double>& rho_grid, double t_horizon,
                                        std::int64_t n_reps, std::uint64_t seed,
                                        int threads = 0) {
    if (rho_grid.empty()) throw ParameterError("rho grid must be nonempty");
    std::vector<SweepRow> rows;
    rows.reserve(rho_grid.size());
    for (std::size_t j = 0; j < rho_grid.size(); ++j) {
        const QueueModel m = calibrate(arrival, service, lambda, rho_grid[j]);
        const BravoCurve c = bravo_curve(m, derive_seed(seed, j), {t_horizon}, n_reps, threads);
        rows.push_back({rho_grid[j], t_horizon, c.ratio.back(), c.ci_half.back()});
    }
    return rows;
}

// Empirical boundedness check on Q(t)^2/t: across-replication mean and 99th
// percentile at each grid time, plus the running max of the mean.
struct UiDiagnostic {
    std::vector<double> grid;
    std::vector<double> mean_q2_over_t;
    std::vector<double> p99_q2_over_t;
    double running_max_mean{0.0};
    std::int64_t n_reps{0};
};

inline UiDiagnostic ui_diagnostic_from_counts(const GridCounts& gc) {
    const std::size_t G = gc.grid.size();
    UiDiagnostic ui;
    ui.grid = gc.grid;
    ui.n_reps = gc.n_reps;
    ui.mean_q2_over_t.resize(G);
    ui.p99_q2_over_t.resize(G);
    std::vector<double> column(static_cast<std::size_t>(gc.n_reps));
    for (std::size_t g = 0; g < G; ++g) {
        const double t = gc.grid[g];
        double sum = 0.0;
        for (std::int64_t r = 0; r < gc.n_reps; ++r) {
            const double q = static_cast<double>(gc.queue_len[gc.idx(r, g)]);
            column[static_cast<std::size_t>(r)] = q * q / t;
            sum += q * q / t;
        }
        ui.mean_q2_over_t[g] = sum / static_cast<double>(gc.n_reps);
        const std::size_t k =
            std::min(column.size() - 1,
                     static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(column.size()))) -
                         1);
        std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(k),
                         column.end());
        ui.p99_q2_over_t[g] = column[k];
        ui.running_max_mean = std::max(ui.running_max_mean, ui.mean_q2_over_t[g]);
    }
    return ui;
}

inline UiDiagnostic ui_diagnostic(const QueueModel& model, std::uint64_t seed,
                                  const std::vector<double>& grid, std::int64_t n_reps,
                                  int threads = 0) {
    return ui_diagnostic_from_counts(run_grid_reps(model, seed, grid, n_reps, threads));
}

}  // namespace critiq::qsim
