#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "critiq/qsim.hpp"
#include "critiq/rwalk.hpp"
#include "critiq/stats.hpp"
#include "critiq/theory.hpp"

namespace critiq::io {

using json = nlohmann::ordered_json;

// Shortest round-trippable decimal; output bytes are reproducible for a
// given build, which is what the seeded-rerun contract asks for.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_cycles_csv(std::ostream& os, const std::vector<rwalk::BusyCycleSample>& cycles) {
    os << "cycle_id,n_served,busy,idle,censored\n";
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        const auto& c = cycles[i];
        os << i << ',' << c.n_served << ',' << fmt(c.busy) << ',' << fmt(c.idle) << ','
           << (c.censored ? 1 : 0) << '\n';
    }
}

inline void write_survival_csv(std::ostream& os, const stats::SurvivalCurve& c) {
    os << "x,survival,se,sqrtx_survival\n";
    for (std::size_t i = 0; i < c.x.size(); ++i)
        os << fmt(c.x[i]) << ',' << fmt(c.survival[i]) << ',' << fmt(c.se[i]) << ','
           << fmt(std::sqrt(c.x[i]) * c.survival[i]) << '\n';
}

inline void write_nstat_csv(std::ostream& os, const rwalk::NSurvival& s) {
    os << "n,survival,se,sqrtn_survival\n";
    for (std::size_t i = 0; i < s.n.size(); ++i)
        os << s.n[i] << ',' << fmt(s.survival[i]) << ',' << fmt(s.se[i]) << ','
           << fmt(std::sqrt(static_cast<double>(s.n[i])) * s.survival[i]) << '\n';
}

inline void write_bravo_csv(std::ostream& os, const qsim::BravoCurve& c) {
    os << "t,mean_D,var_D,ratio,ci_half\n";
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        os << fmt(c.grid[i]) << ',' << fmt(c.mean_count[i]) << ',' << fmt(c.var_count[i]) << ','
           << fmt(c.ratio[i]) << ',' << fmt(c.ci_half[i]) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<qsim::SweepRow>& rows) {
    os << "rho,t_horizon,ratio,ci_half\n";
    for (const auto& r : rows)
        os << fmt(r.rho) << ',' << fmt(r.t_horizon) << ',' << fmt(r.ratio) << ','
           << fmt(r.ci_half) << '\n';
}

inline void write_ui_csv(std::ostream& os, const qsim::UiDiagnostic& ui) {
    os << "t,mean_q2_over_t,p99_q2_over_t\n";
    for (std::size_t i = 0; i < ui.grid.size(); ++i)
        os << fmt(ui.grid[i]) << ',' << fmt(ui.mean_q2_over_t[i]) << ','
           << fmt(ui.p99_q2_over_t[i]) << '\n';
}

inline json constants_estimate_json(const rwalk::ConstantsEstimate& est) {
    json j;
    j["mean_idle"] = est.mean_idle;
    j["se_idle"] = est.se_idle;
    j["b_from_idle"] = est.b_from_idle;
    j["b_series_literal"] = est.b_series_literal.empty() ? 0.0 : est.b_series_literal.back();
    j["b_series_weighted"] = est.b_series_weighted.empty() ? 0.0 : est.b_series_weighted.back();
    j["censored_fraction"] = est.censored_fraction;
    j["n_cycles"] = est.n_cycles;
    j["n_censored"] = est.n_censored;
    j["series_reps"] = est.series_reps;
    j["b_series_literal_partials"] = est.b_series_literal;
    j["b_series_weighted_partials"] = est.b_series_weighted;
    return j;
}

inline json tail_fit_json(const stats::TailFit& fit, const stats::TheoryComparison& cmp) {
    json j;
    j["exponent"] = fit.exponent;
    j["exponent_se"] = fit.exponent_se;
    j["constant"] = fit.constant;
    j["constant_se"] = fit.constant_se;
    j["c_theory"] = cmp.c_theory;
    j["rel_err"] = cmp.rel_err;
    j["pass"] = cmp.pass;
    j["window_lo"] = fit.window_lo;
    j["window_hi"] = fit.window_hi;
    j["n_tail"] = fit.n_tail;
    j["power_law"] = fit.power_law;
    return j;
}

inline json theory_report_json(const theory::TheoryReport& r) {
    json j;
    j["lambda"] = r.lambda;
    j["ca2"] = r.ca2;
    j["cs2"] = r.cs2;
    j["bravo_limit"] = r.bravo_limit;
    j["asymptotic_variance"] = r.asymptotic_variance;
    j["tail_constant_mm1"] = r.tail_constant_mm1;
    j["tail_constant_mg1"] = r.tail_constant_mg1;
    j["tail_constant_gm1"] = r.tail_constant_gm1;
    j["mean_idle_mg1"] = r.mean_idle_mg1;
    j["mean_idle_gm1"] = r.mean_idle_gm1;
    if (r.mean_idle) j["mean_idle"] = *r.mean_idle;
    else j["mean_idle"] = nullptr;
    if (r.tail_constant_general) j["tail_constant_general"] = *r.tail_constant_general;
    else j["tail_constant_general"] = nullptr;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    os << text;
}

}  // namespace critiq::io
