#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "critiq/dists.hpp"
#include "critiq/errors.hpp"
#include "critiq/io.hpp"
#include "critiq/qsim.hpp"
#include "critiq/rwalk.hpp"
#include "critiq/stats.hpp"
#include "critiq/theory.hpp"

namespace critiq::cli {

// Exit codes: 0 success, 2 config/usage error, 3 tolerance failure under
// --check.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCheckFailed = 3;

// Every run is fully determined by (config, seed): reruns with the same
// config produce identical output bytes.
struct ExperimentConfig {
    std::string subcommand;

    std::string arrival{"exp:1"};
    std::string service{"exp:1"};
    double lambda{1.0};
    double rho{1.0};

    double n_cycles{1e5};
    double n_reps{1000};
    std::string grid{"1e2:1e4:2"};  // lo:hi:points-per-decade, or comma list
    double step_cap{1e7};
    std::uint64_t seed{12345};
    int threads{0};  // 0 = hardware
    std::string out_dir{"."};
    bool check{false};
    double tol{0.10};

    // busy-tail
    double window_lo{1e2};
    double window_hi{1e4};
    int fit_grid_points{25};
    int series_depth{64};
    double series_reps{1e5};
    std::string cycles_out;  // per-cycle CSV, only when requested

    // bravo
    std::string measure{"departures"};

    // sweep
    std::string rho_list{"0.5,0.8,1.0,1.25,2.0"};
    double t_horizon{1e4};

    // nstat
    std::string n_grid{"1e2,1e3,1e4"};

    // constants
    double mean_idle{-1.0};  // < 0 means unset
};

namespace detail {

inline std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ParameterError("bad numeric value '" + tok + "' in list '" + text + "'");
        }
    }
    if (out.empty()) throw ParameterError("empty numeric list '" + text + "'");
    return out;
}

inline std::vector<std::int64_t> parse_int_list(const std::string& text) {
    std::vector<std::int64_t> out;
    for (const double v : parse_double_list(text)) out.push_back(std::llround(v));
    return out;
}

// "lo:hi:ppd" = geometric grid with ppd points per decade; plain comma lists
// pass through unchanged.
inline std::vector<double> parse_time_grid(const std::string& text) {
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) return parse_double_list(text);
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw ParameterError("grid spec must be lo:hi:points-per-decade or a comma list");
    double lo, hi, ppd;
    try {
        lo = std::stod(text.substr(0, c1));
        hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        ppd = std::stod(text.substr(c2 + 1));
    } catch (const std::exception&) {
        throw ParameterError("bad grid spec '" + text + "'");
    }
    if (!(lo > 0.0) || !(hi > lo) || !(ppd > 0.0))
        throw ParameterError("grid spec needs 0 < lo < hi and points-per-decade > 0");
    const double decades = std::log10(hi / lo);
    const auto steps = static_cast<int>(std::llround(decades * ppd));
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) g.push_back(lo * std::pow(10.0, static_cast<double>(i) / ppd));
    g.back() = hi;
    return g;
}

inline std::int64_t as_count(double v, const char* what) {
    if (!(v >= 1.0) || v > 9.2e18) throw ParameterError(std::string(what) + " must be >= 1");
    return std::llround(v);
}

inline QueueModel build_model(const ExperimentConfig& cfg) {
    return calibrate(parse_distribution(cfg.arrival), parse_distribution(cfg.service), cfg.lambda,
                     cfg.rho);
}

inline void require_critical(const QueueModel& m, const std::string& what) {
    if (!m.critical())
        throw CriticalityError(what + " requires rho = 1 (got rho = " + std::to_string(m.rho) +
                               ")");
}

inline std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline io::json config_json(const ExperimentConfig& cfg) {
    io::json j;
    j["subcommand"] = cfg.subcommand;
    j["arrival"] = cfg.arrival;
    j["service"] = cfg.service;
    j["lambda"] = cfg.lambda;
    j["rho"] = cfg.rho;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    return j;
}

inline int finish(const ExperimentConfig& cfg, io::json summary, std::optional<bool> pass) {
    summary["config"] = config_json(cfg);
    if (pass) summary["pass"] = *pass;
    io::write_text_file(out_path(cfg, "summary.json"), summary.dump(2) + "\n");
    if (pass && !*pass) return kExitCheckFailed;
    return kExitOk;
}

}  // namespace detail

// busy-tail: regenerative cycles -> empirical B survival on a log grid inside
// the fit window -> power-law fit -> comparison against
// E[I] sqrt(2 lambda / (pi (ca2+cs2))) with E[I] from the same run.
inline int run_busy_tail(const ExperimentConfig& cfg) {
    const QueueModel model = detail::build_model(cfg);
    detail::require_critical(model, "busy-tail");
    if (model.degenerate()) throw DegenerateModelError("busy-tail: sigma^2 = 0 model");

    const std::int64_t n_cycles = detail::as_count(cfg.n_cycles, "cycles");
    const std::int64_t step_cap = detail::as_count(cfg.step_cap, "step-cap");
    const stats::TailWindow window{cfg.window_lo, cfg.window_hi};
    const auto grid = stats::log_spaced_grid(window.lo, window.hi, cfg.fit_grid_points);

    const rwalk::CycleStats cycles =
        rwalk::run_cycles(model, cfg.seed, n_cycles, step_cap, grid, {}, cfg.threads);
    const rwalk::ConstantsEstimate est = rwalk::constants_from_stats(
        model, cycles, cfg.seed, cfg.series_depth,
        detail::as_count(cfg.series_reps, "series-reps"), cfg.threads);

    stats::validate_tail_window(window, cycles.max_uncensored_busy,
                                stats::censor_safe_bound(step_cap, model.lambda));
    const stats::SurvivalCurve curve = stats::survival_from_counts(
        grid, cycles.busy_exceed, cycles.busy_excluded, cycles.n_cycles);
    const stats::TailFit fit = stats::fit_tail_from_curve(curve, window);
    const stats::TheoryComparison cmp = stats::compare_to_theory(fit, model, est, cfg.tol);

    {
        std::ofstream os(detail::out_path(cfg, "survival.csv"), std::ios::binary);
        io::write_survival_csv(os, curve);
    }
    io::write_text_file(detail::out_path(cfg, "fit.json"),
                        io::tail_fit_json(fit, cmp).dump(2) + "\n");
    if (!cfg.cycles_out.empty()) {
        const auto samples =
            rwalk::sample_cycles(model, cfg.seed, n_cycles, step_cap, cfg.threads);
        std::ofstream os(cfg.cycles_out, std::ios::binary);
        io::write_cycles_csv(os, samples);
    }

    io::json summary = io::constants_estimate_json(est);
    summary["fit"] = io::tail_fit_json(fit, cmp);

    std::optional<bool> pass;
    if (cfg.check) pass = cmp.pass && std::abs(fit.exponent + 0.5) <= 0.05;
    return detail::finish(cfg, std::move(summary), pass);
}

// nstat: empirical tail of the per-cycle stopping time N against
// E[I] sqrt(2 lambda^2 / (pi (ca2+cs2))) n^{-1/2}.
inline int run_nstat(const ExperimentConfig& cfg) {
    const QueueModel model = detail::build_model(cfg);
    detail::require_critical(model, "nstat");
    if (model.degenerate()) throw DegenerateModelError("nstat: sigma^2 = 0 model");

    const std::int64_t n_cycles = detail::as_count(cfg.n_cycles, "cycles");
    const std::int64_t step_cap = detail::as_count(cfg.step_cap, "step-cap");
    const auto n_grid = detail::parse_int_list(cfg.n_grid);
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw ParameterError("n-grid must be strictly increasing");

    const rwalk::CycleStats cycles =
        rwalk::run_cycles(model, cfg.seed, n_cycles, step_cap, {}, n_grid, cfg.threads);
    if (cycles.idle_n == 0) throw FitError("all cycles censored; raise step-cap");

    rwalk::NSurvival surv;
    surv.n = n_grid;
    surv.n_cycles = cycles.n_cycles;
    const double total = static_cast<double>(cycles.n_cycles);
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        const double p = static_cast<double>(cycles.nserved_exceed[i]) / total;
        surv.survival.push_back(p);
        surv.se.push_back(std::sqrt(p * (1.0 - p) / total));
    }
    {
        std::ofstream os(detail::out_path(cfg, "nstat.csv"), std::ios::binary);
        io::write_nstat_csv(os, surv);
    }

    const double mean_idle = cycles.mean_idle();
    const double target =
        theory::nstop_tail_constant(model.lambda, model.ca2(), model.cs2(), mean_idle);
    io::json summary;
    summary["mean_idle"] = mean_idle;
    summary["se_idle"] = cycles.se_idle();
    summary["censored_fraction"] = cycles.censored_fraction();
    summary["n_tail_constant_theory"] = target;

    std::optional<bool> pass;
    if (cfg.check) {
        // tail estimates only trust grid points <= cap/10
        for (const auto n : n_grid)
            if (n > step_cap / 10)
                throw ParameterError("--check requires n-grid points <= step-cap/10");
        bool ok = true;
        for (std::size_t i = 0; i < n_grid.size(); ++i) {
            const double plateau =
                std::sqrt(static_cast<double>(n_grid[i])) * surv.survival[i];
            if (std::abs(plateau - target) > cfg.tol * target) ok = false;
        }
        pass = ok;
    }
    return detail::finish(cfg, std::move(summary), pass);
}

// bravo: across-replication variance/mean of the counting process on a time
// grid; with --check the final ratio is held against the theory limit.
inline int run_bravo(const ExperimentConfig& cfg) {
    const QueueModel model = detail::build_model(cfg);
    const auto grid = detail::parse_time_grid(cfg.grid);
    const std::int64_t n_reps = detail::as_count(cfg.n_reps, "reps");

    qsim::CountProcess which;
    if (cfg.measure == "departures") which = qsim::CountProcess::departures;
    else if (cfg.measure == "arrivals") which = qsim::CountProcess::arrivals;
    else throw ParameterError("--measure must be departures or arrivals");

    const qsim::BravoCurve curve =
        qsim::bravo_curve(model, cfg.seed, grid, n_reps, cfg.threads, which);
    {
        std::ofstream os(detail::out_path(cfg, "bravo.csv"), std::ios::binary);
        io::write_bravo_csv(os, curve);
    }

    io::json summary;
    summary["final_ratio"] = curve.ratio.back();
    summary["final_ci_half"] = curve.ci_half.back();
    summary["n_reps"] = curve.n_reps;
    summary["measure"] = cfg.measure;

    std::optional<bool> pass;
    if (cfg.check) {
        double target;
        if (which == qsim::CountProcess::departures) {
            detail::require_critical(model, "bravo --check on departures");
            if (model.degenerate()) throw DegenerateModelError("bravo: sigma^2 = 0 model");
            target = theory::bravo_limit(model.ca2(), model.cs2());
        } else {
            // a renewal stream's variance/mean ratio tends to its scv
            target = model.ca2();
        }
        summary["target"] = target;
        pass = std::abs(curve.ratio.back() - target) <= cfg.tol * target;
    }
    return detail::finish(cfg, std::move(summary), pass);
}

// sweep: final-time ratio across loads; with --check the rho = 1 point must
// sit strictly below every other point with 95% CI separation.
inline int run_sweep(const ExperimentConfig& cfg) {
    const auto rhos = detail::parse_double_list(cfg.rho_list);
    const auto rows = qsim::load_sweep(parse_distribution(cfg.arrival),
                                       parse_distribution(cfg.service), cfg.lambda, rhos,
                                       cfg.t_horizon, detail::as_count(cfg.n_reps, "reps"),
                                       cfg.seed, cfg.threads);
    {
        std::ofstream os(detail::out_path(cfg, "sweep.csv"), std::ios::binary);
        io::write_sweep_csv(os, rows);
    }

    io::json summary;
    for (const auto& r : rows)
        summary["ratio"][io::fmt(r.rho)] = r.ratio;

    std::optional<bool> pass;
    if (cfg.check) {
        std::ptrdiff_t at_one = -1;
        for (std::size_t j = 0; j < rows.size(); ++j)
            if (std::abs(rows[j].rho - 1.0) <= 1e-12) at_one = static_cast<std::ptrdiff_t>(j);
        if (at_one < 0) throw ParameterError("--check requires rho = 1 in the sweep grid");
        bool ok = true;
        const auto& c = rows[static_cast<std::size_t>(at_one)];
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (static_cast<std::ptrdiff_t>(j) == at_one) continue;
            if (!(c.ratio + c.ci_half < rows[j].ratio - rows[j].ci_half)) ok = false;
        }
        pass = ok;
    }
    return detail::finish(cfg, std::move(summary), pass);
}

// ui-check: mean of Q(t)^2/t across replications must show no upward trend in
// log t (bounded second moment of the diffusion-scaled queue).
inline int run_ui_check(const ExperimentConfig& cfg) {
    const QueueModel model = detail::build_model(cfg);
    const auto grid = detail::parse_time_grid(cfg.grid);
    const qsim::UiDiagnostic ui = qsim::ui_diagnostic(model, cfg.seed, grid,
                                                      detail::as_count(cfg.n_reps, "reps"),
                                                      cfg.threads);
    {
        std::ofstream os(detail::out_path(cfg, "ui.csv"), std::ios::binary);
        io::write_ui_csv(os, ui);
    }

    std::vector<double> logt;
    logt.reserve(grid.size());
    for (const double t : grid) logt.push_back(std::log(t));
    const stats::LinearFit line = stats::ols(logt, ui.mean_q2_over_t);

    io::json summary;
    summary["running_max_mean"] = ui.running_max_mean;
    summary["trend_slope"] = line.slope;
    summary["trend_slope_se"] = line.slope_se;

    std::optional<bool> pass;
    if (cfg.check) pass = line.slope - 1.959963984540054 * line.slope_se <= 0.0;
    return detail::finish(cfg, std::move(summary), pass);
}

// constants: the closed-form theory report as JSON (stdout + file).
inline int run_constants(const ExperimentConfig& cfg) {
    const QueueModel model = detail::build_model(cfg);
    std::optional<double> mean_idle;
    if (cfg.mean_idle >= 0.0) mean_idle = cfg.mean_idle;
    const theory::TheoryReport report = theory::constants(model, mean_idle);
    const std::string text = io::theory_report_json(report).dump(2) + "\n";
    std::cout << text;
    io::write_text_file(detail::out_path(cfg, "constants.json"), text);
    return detail::finish(cfg, io::theory_report_json(report), std::nullopt);
}

inline int run(const ExperimentConfig& cfg) {
    if (cfg.subcommand == "busy-tail") return run_busy_tail(cfg);
    if (cfg.subcommand == "nstat") return run_nstat(cfg);
    if (cfg.subcommand == "bravo") return run_bravo(cfg);
    if (cfg.subcommand == "sweep") return run_sweep(cfg);
    if (cfg.subcommand == "ui-check") return run_ui_check(cfg);
    if (cfg.subcommand == "constants") return run_constants(cfg);
    throw ParameterError("unknown subcommand '" + cfg.subcommand + "'");
}

// Builds the CLI11 app over an ExperimentConfig. Flags override config-file
// keys, which override defaults.
inline void attach_options(CLI::App& app, ExperimentConfig& cfg) {
    app.set_config("--config", "", "config file of key = value lines");
    const auto model_opts = [&](CLI::App* sub, bool with_rho = true) {
        sub->add_option("--arrival", cfg.arrival, "arrival distribution, family:p1,p2,...")
            ->capture_default_str();
        sub->add_option("--service", cfg.service, "service distribution, family:p1,p2,...")
            ->capture_default_str();
        sub->add_option("--lambda", cfg.lambda, "arrival rate")->capture_default_str();
        if (with_rho)
            sub->add_option("--rho", cfg.rho, "load E[V]/E[U]")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
        sub->add_option("--threads", cfg.threads, "worker threads (0 = hardware)")
            ->envname("CRITIQ_THREADS")
            ->capture_default_str();
        sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
        sub->add_flag("--check", cfg.check, "exit 3 unless results meet --tol");
        sub->add_option("--tol", cfg.tol, "relative tolerance for --check")
            ->capture_default_str();
    };

    auto* busy = app.add_subcommand("busy-tail", "busy-period tail: survival, fit, theory check");
    model_opts(busy);
    busy->add_option("--cycles", cfg.n_cycles, "regenerative cycles")->capture_default_str();
    busy->add_option("--step-cap", cfg.step_cap, "per-cycle step cap")->capture_default_str();
    busy->add_option("--window-lo", cfg.window_lo, "fit window lower x")->capture_default_str();
    busy->add_option("--window-hi", cfg.window_hi, "fit window upper x")->capture_default_str();
    busy->add_option("--grid-points", cfg.fit_grid_points, "log-grid points in window")
        ->capture_default_str();
    busy->add_option("--series-depth", cfg.series_depth, "depth of the b-series estimates")
        ->capture_default_str();
    busy->add_option("--series-reps", cfg.series_reps, "walk replications per series")
        ->capture_default_str();
    busy->add_option("--cycles-out", cfg.cycles_out, "write per-cycle CSV to this path");

    auto* nstat = app.add_subcommand("nstat", "tail of customers-served-per-cycle N");
    model_opts(nstat);
    nstat->add_option("--cycles", cfg.n_cycles, "regenerative cycles")->capture_default_str();
    nstat->add_option("--step-cap", cfg.step_cap, "per-cycle step cap")->capture_default_str();
    nstat->add_option("--n-grid", cfg.n_grid, "comma list of n values")
        ->join(',')
        ->capture_default_str();

    auto* bravo = app.add_subcommand("bravo", "var(D(t))/E[D(t)] across replications");
    model_opts(bravo);
    bravo->add_option("--reps", cfg.n_reps, "independent replications")->capture_default_str();
    bravo->add_option("--grid", cfg.grid, "time grid, lo:hi:per-decade or comma list")
        ->join(',')
        ->capture_default_str();
    bravo->add_option("--measure", cfg.measure, "departures|arrivals")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "final ratio across loads (BRAVO dip)");
    model_opts(sweep, /*with_rho=*/false);
    sweep->add_option("--reps", cfg.n_reps, "replications per load")->capture_default_str();
    sweep->add_option("--rho", cfg.rho_list, "comma list of loads")
        ->join(',')
        ->capture_default_str();
    sweep->add_option("--horizon", cfg.t_horizon, "time horizon")->capture_default_str();

    auto* ui = app.add_subcommand("ui-check", "boundedness of Q(t)^2/t");
    model_opts(ui);
    ui->add_option("--reps", cfg.n_reps, "independent replications")->capture_default_str();
    ui->add_option("--grid", cfg.grid, "time grid, lo:hi:per-decade or comma list")
        ->join(',')
        ->capture_default_str();

    auto* cons = app.add_subcommand("constants", "closed-form theory constants as JSON");
    model_opts(cons);
    cons->add_option("--mean-idle", cfg.mean_idle,
                     "measured E[I] for the general tail constant")
        ->capture_default_str();

    app.require_subcommand(1);
}

inline int run_main(int argc, const char* const* argv) {
    ExperimentConfig cfg;
    CLI::App app{"critiq: critical GI/G/1 simulation and verification toolkit"};
    attach_options(app, cfg);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    try {
        return run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace critiq::cli
