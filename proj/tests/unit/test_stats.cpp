#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "critiq/stats.hpp"

using namespace critiq;

namespace {

rwalk::BusyCycleSample uncensored(double busy) { return {1, busy, 0.0, false}; }
rwalk::BusyCycleSample censored_at(double busy) {
    return {100, busy, rwalk::kCensoredIdle, true};
}

// index-1/2 Pareto: P(X > x) = x^{-1/2} for x >= 1, sampled by X = U^{-2}
std::vector<rwalk::BusyCycleSample> pareto_half(std::int64_t n, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<rwalk::BusyCycleSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        out.push_back(uncensored(1.0 / (u * u)));
    }
    return out;
}

}  // namespace

TEST_CASE("empirical survival counting") {
    const std::vector<rwalk::BusyCycleSample> samples = {uncensored(1.0), uncensored(2.0),
                                                         uncensored(3.0)};
    const auto c = stats::empirical_survival(samples, {0.0, 2.0});
    CHECK(c.survival[0] == 1.0);  // B > 0 always
    CHECK(c.survival[1] == Catch::Approx(1.0 / 3.0));
    CHECK(c.n_at_risk[1] == 3);
}

TEST_CASE("censored samples are lower bounds only") {
    const std::vector<rwalk::BusyCycleSample> samples = {uncensored(1.0), uncensored(10.0),
                                                         censored_at(5.0)};
    const auto c = stats::empirical_survival(samples, {2.0, 7.0});
    // x=2: censored busy 5 > 2 counts as exceed; at risk 3
    CHECK(c.n_exceed[0] == 2);
    CHECK(c.n_at_risk[0] == 3);
    CHECK(c.survival[0] == Catch::Approx(2.0 / 3.0));
    // x=7: censored sample is uninformative, excluded from both sides
    CHECK(c.n_exceed[1] == 1);
    CHECK(c.n_at_risk[1] == 2);
    CHECK(c.n_excluded[1] == 1);
    CHECK(c.survival[1] == Catch::Approx(0.5));
}

TEST_CASE("empirical survival input errors") {
    CHECK_THROWS_AS(stats::empirical_survival({}, {1.0}), FitError);
    const std::vector<rwalk::BusyCycleSample> samples = {uncensored(0.5)};
    CHECK_THROWS_AS(stats::empirical_survival(samples, {1.0, 0.5}), ParameterError);
    // no uncensored sample above the smallest grid point
    CHECK_THROWS_AS(stats::empirical_survival(samples, {1.0, 2.0}), FitError);
}

TEST_CASE("survival curve is nonincreasing and within [0,1]") {
    const auto samples = pareto_half(20'000, 5);
    const auto grid = stats::log_spaced_grid(1.0, 1e4, 40);
    const auto c = stats::empirical_survival(samples, grid);
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        CHECK(c.survival[i] >= 0.0);
        CHECK(c.survival[i] <= 1.0);
        if (i > 0) CHECK(c.survival[i] <= c.survival[i - 1]);
    }
}

TEST_CASE("fit_tail recovers the exact index-1/2 power law, 10 seeds") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto samples = pareto_half(400'000, seed);
        const auto fit = stats::fit_tail(samples, {1e2, 1e4});
        INFO("seed " << seed);
        CHECK(fit.exponent == Catch::Approx(-0.5).margin(0.02));
        CHECK(fit.constant == Catch::Approx(1.0).epsilon(0.05));
        CHECK(fit.power_law);
    }
}

TEST_CASE("fit_tail flags light tails as non-power-law") {
    RngStream rng(17);
    std::vector<rwalk::BusyCycleSample> samples;
    for (int i = 0; i < 400'000; ++i) samples.push_back(uncensored(-std::log(rng.uniform())));
    const auto fit = stats::fit_tail(samples, {1.0, 6.0});
    CHECK(fit.exponent < -0.8);
    CHECK_FALSE(fit.power_law);
}

TEST_CASE("fixed-index constant is scale covariant") {
    const auto base = pareto_half(300'000, 23);
    std::vector<rwalk::BusyCycleSample> scaled = base;
    const double c = 4.0;
    for (auto& s : scaled) s.busy *= c;
    const auto f0 = stats::fit_tail(base, {1e2, 1e4});
    const auto f1 = stats::fit_tail(scaled, {c * 1e2, c * 1e4});
    CHECK(f1.constant == Catch::Approx(std::sqrt(c) * f0.constant).epsilon(1e-6));
}

TEST_CASE("fit_tail guards its window") {
    const auto samples = pareto_half(50'000, 3);
    double max_busy = 0.0;
    for (const auto& s : samples) max_busy = std::max(max_busy, s.busy);
    CHECK_THROWS_AS(stats::fit_tail(samples, {1e2, max_busy}), FitError);
    CHECK_THROWS_AS(stats::fit_tail(samples, {1e2, 1e4}, 25, /*censor_safe_hi=*/1e3), FitError);
    CHECK_THROWS_AS(stats::fit_tail(samples, {0.0, 1e3}), ParameterError);
    // insufficient tail mass names the required count
    auto few = pareto_half(300, 9);
    few.push_back(uncensored(1e7));  // keep the max-B window guard satisfied
    try {
        stats::fit_tail(few, {50.0, 1e3});
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find("200") != std::string::npos);
    }
}

TEST_CASE("compare_to_theory wires the general constant") {
    const auto e = make_distribution(Family::exponential, {1.0});
    const auto model = calibrate(e, e, 1.0, 1.0);
    stats::TailFit fit;
    fit.constant = 0.56418958354775629;
    const auto cmp = stats::compare_to_theory(fit, model, 1.0, 0.10);
    CHECK(cmp.c_theory == Catch::Approx(0.56418958354775629).epsilon(1e-12));
    CHECK(cmp.rel_err < 1e-12);
    CHECK(cmp.pass);

    // G/M/1 reference point: erlang:2 arrivals
    const auto gm1 = calibrate(make_distribution(Family::erlang, {2.0, 2.0}), e, 1.0, 1.0);
    fit.constant = 0.40;
    const auto cmp2 = stats::compare_to_theory(fit, gm1, 0.75, 0.10);
    CHECK(cmp2.c_theory == Catch::Approx(0.48860251190291992).epsilon(1e-12));
    CHECK_FALSE(cmp2.pass);

    const auto d = make_distribution(Family::deterministic, {1.0});
    CHECK_THROWS_AS(stats::compare_to_theory(fit, calibrate(d, d, 1.0, 1.0), 1.0, 0.1),
                    DegenerateModelError);
}

TEST_CASE("tail constant matches theory across the model zoo") {
    // M/M/1, M/G/1 (erlang + hyperexp services), G/M/1 (erlang + hyperexp
    // arrivals), and a general G/G/1; each fit against the constant implied
    // by its own measured mean idle period.
    const auto e = make_distribution(Family::exponential, {1.0});
    const auto erl = make_distribution(Family::erlang, {2.0, 2.0});
    const double p = 0.7886751345948129;
    const auto hyper =
        make_distribution(Family::hyperexponential, {p, 2.0 * p, 2.0 * (1.0 - p)});

    const std::vector<std::pair<const char*, QueueModel>> zoo = {
        {"M/M/1", calibrate(e, e, 1.0, 1.0)},
        {"M/G/1 erlang", calibrate(e, erl, 1.0, 1.0)},
        {"M/G/1 hyper", calibrate(e, hyper, 1.0, 1.0)},
        {"G/M/1 erlang", calibrate(erl, e, 1.0, 1.0)},
        {"G/M/1 hyper", calibrate(hyper, e, 1.0, 1.0)},
        {"G/G/1", calibrate(erl, hyper, 1.0, 1.0)},
    };

    const std::int64_t n_cycles = 300'000, cap = 1'000'000;
    const auto grid = stats::log_spaced_grid(1e2, 1e4, 25);
    std::uint64_t seed = 60'000;
    for (const auto& [name, model] : zoo) {
        INFO(name);
        const auto run = rwalk::run_cycles(model, seed++, n_cycles, cap, grid, {}, 0);
        const auto curve =
            stats::survival_from_counts(grid, run.busy_exceed, run.busy_excluded, run.n_cycles);
        const auto fit = stats::fit_tail_from_curve(curve, {1e2, 1e4});
        const auto cmp = stats::compare_to_theory(fit, model, run.mean_idle(), 0.10);
        CHECK(cmp.pass);
        CHECK(fit.exponent == Catch::Approx(-0.5).margin(0.05));
        // exponential-side models also pin E[I] in closed form
        if (model.arrival.family == Family::exponential)
            CHECK(run.mean_idle() ==
                  Catch::Approx(theory::mean_idle_mg1(1.0)).margin(5.0 * run.se_idle()));
        if (model.service.family == Family::exponential &&
            model.arrival.family != Family::exponential)
            CHECK(run.mean_idle() ==
                  Catch::Approx(theory::mean_idle_gm1(1.0, model.ca2()))
                      .margin(5.0 * run.se_idle()));
    }
}

TEST_CASE("idle-mean standard error shrinks like n^{-1/2}") {
    const auto e = make_distribution(Family::exponential, {1.0});
    const auto model = calibrate(e, e, 1.0, 1.0);
    const auto small = rwalk::run_cycles(model, 505, 20'000, 50'000, {}, {}, 0);
    const auto large = rwalk::run_cycles(model, 505, 80'000, 50'000, {}, {}, 0);
    CHECK(small.se_idle() / large.se_idle() == Catch::Approx(2.0).epsilon(0.10));
}

TEST_CASE("ols recovers an exact line") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> y;
    for (const double v : x) y.push_back(3.0 - 2.0 * v);
    const auto f = stats::ols(x, y);
    CHECK(f.slope == Catch::Approx(-2.0).epsilon(1e-14));
    CHECK(f.intercept == Catch::Approx(3.0).epsilon(1e-14));
    CHECK(f.slope_se == Catch::Approx(0.0).margin(1e-12));
    CHECK_THROWS_AS(stats::ols({1.0}, {1.0}), ParameterError);
}

TEST_CASE("log_spaced_grid endpoints and monotonicity") {
    const auto g = stats::log_spaced_grid(1e2, 1e4, 25);
    CHECK(g.front() == 1e2);
    CHECK(g.back() == 1e4);
    CHECK(g.size() == 25);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK_THROWS_AS(stats::log_spaced_grid(0.0, 1.0, 5), ParameterError);
}
