#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "critiq/rwalk.hpp"
#include "critiq/stats.hpp"
#include "critiq/theory.hpp"

using namespace critiq;

namespace {

QueueModel mm1() {
    const auto e = make_distribution(Family::exponential, {1.0});
    return calibrate(e, e, 1.0, 1.0);
}

QueueModel gm1_erlang2() {
    return calibrate(make_distribution(Family::erlang, {2.0, 2.0}),
                     make_distribution(Family::exponential, {1.0}), 1.0, 1.0);
}

}  // namespace

TEST_CASE("D/D/1 stops at N = 1 with zero idle (boundary inclusive)") {
    const auto d = make_distribution(Family::deterministic, {1.0});
    const auto model = calibrate(d, d, 1.0, 1.0);
    RngStream rng(1);
    const auto c = rwalk::sample_cycle(model, rng, 100);
    CHECK(c.n_served == 1);
    CHECK(c.busy == 1.0);
    CHECK(c.idle == 0.0);
    CHECK_FALSE(c.censored);
}

TEST_CASE("censored cycle carries cap, accumulated busy, NaN idle") {
    // rho = 2 walk drifts up and never crosses in 50 steps
    const auto e = make_distribution(Family::exponential, {1.0});
    const auto model = calibrate(e, make_distribution(Family::deterministic, {1.0}), 1.0, 4.0);
    RngStream rng(3);
    const auto c = rwalk::sample_cycle(model, rng, 50);
    REQUIRE(c.censored);
    CHECK(c.n_served == 50);
    CHECK(c.busy == Catch::Approx(50 * 4.0));
    CHECK(std::isnan(c.idle));
}

TEST_CASE("M/M/1 mean idle is 1/lambda within 3 s.e.") {
    const auto stats = rwalk::run_cycles(mm1(), 2024, 100'000, 100'000, {}, {}, 0);
    CHECK(std::abs(stats.mean_idle() - 1.0) <= 3.0 * stats.se_idle());
    CHECK(stats.censored_fraction() < 0.01);
}

TEST_CASE("G/M/1 erlang:2 mean idle hits (ca2+1)/(2 lambda) = 0.75") {
    const auto stats = rwalk::run_cycles(gm1_erlang2(), 555, 100'000, 100'000, {}, {}, 0);
    CHECK(std::abs(stats.mean_idle() - 0.75) <= 4.0 * stats.se_idle());
}

TEST_CASE("estimate_constants: M/M/1 has b near 0 and exact inversion") {
    const auto model = mm1();
    const auto est = rwalk::estimate_constants(model, 77, 100'000, 64, 100'000, 100'000, 0);
    CHECK(std::abs(est.b_from_idle) < 0.03);
    // symmetric continuous increments: P(S_n < 0) = 1/2, both series ~ 0
    CHECK(std::abs(est.b_series_literal.back()) < 0.07);
    CHECK(std::abs(est.b_series_weighted.back()) < 0.012);
    // algebraic inversion holds to floating precision
    const double reconstructed = model.sigma() / std::sqrt(2.0) * std::exp(-est.b_from_idle);
    CHECK(reconstructed == Catch::Approx(est.mean_idle).epsilon(1e-13));
}

TEST_CASE("estimate_constants: G/M/1 has b > 0 consistent with E[I]") {
    const auto model = gm1_erlang2();
    const auto est = rwalk::estimate_constants(model, 78, 50'000, 48, 50'000, 100'000, 0);
    // sigma = sqrt(1.5); E[I] = 0.75 => b = log(sigma/(sqrt2*0.75)) ~ 0.1438
    CHECK(est.b_from_idle == Catch::Approx(0.1438).margin(0.02));
    CHECK(est.b_from_idle > 0.0);
}

TEST_CASE("estimate_constants rejects degenerate and tiny runs") {
    const auto d = make_distribution(Family::deterministic, {1.0});
    CHECK_THROWS_AS(rwalk::estimate_constants(calibrate(d, d, 1.0, 1.0), 1, 2000, 8, 1000),
                    DegenerateModelError);
    CHECK_THROWS_AS(rwalk::estimate_constants(mm1(), 1, 500, 8, 1000), ParameterError);
}

TEST_CASE("mean idle from estimate_constants equals the blocked direct average") {
    const auto model = mm1();
    const std::uint64_t seed = 4242;
    const std::int64_t n = 20'000, cap = 50'000;
    const auto est = rwalk::estimate_constants(model, seed, n, 8, 1000, cap, 0);

    // same seed -> same cycles; reduce them with the library's block layout
    const auto samples = rwalk::sample_cycles(model, seed, n, cap);
    rwalk::CycleStats direct({}, {});
    std::vector<rwalk::CycleStats> blocks;
    for (std::int64_t b = 0; b * rwalk::kCycleBlock < n; ++b) {
        rwalk::CycleStats local({}, {});
        for (std::int64_t i = b * rwalk::kCycleBlock;
             i < std::min(n, (b + 1) * rwalk::kCycleBlock); ++i)
            local.observe(samples[static_cast<std::size_t>(i)]);
        blocks.push_back(local);
    }
    for (const auto& blk : blocks) direct.merge(blk);
    CHECK(est.mean_idle == direct.mean_idle());  // exact, same reduction order

    // plain sequential average agrees to rounding
    double sum = 0.0;
    std::int64_t k = 0;
    for (const auto& s : samples)
        if (!s.censored) {
            sum += s.idle;
            ++k;
        }
    CHECK(est.mean_idle == Catch::Approx(sum / static_cast<double>(k)).epsilon(1e-12));
}

TEST_CASE("run_cycles is independent of thread count") {
    const auto model = gm1_erlang2();
    const std::vector<double> bgrid = {1.0, 10.0, 100.0};
    const std::vector<std::int64_t> ngrid = {10, 100};
    const auto s1 = rwalk::run_cycles(model, 99, 30'000, 10'000, bgrid, ngrid, 1);
    const auto s2 = rwalk::run_cycles(model, 99, 30'000, 10'000, bgrid, ngrid, 2);
    const auto s4 = rwalk::run_cycles(model, 99, 30'000, 10'000, bgrid, ngrid, 4);
    CHECK(s1.idle_sum == s2.idle_sum);
    CHECK(s1.idle_sum == s4.idle_sum);
    CHECK(s1.idle_sumsq == s4.idle_sumsq);
    CHECK(s1.busy_exceed == s4.busy_exceed);
    CHECK(s1.nserved_exceed == s4.nserved_exceed);
    CHECK(s1.n_censored == s4.n_censored);
}

TEST_CASE("censored fraction at the default cap is below 1e-3 for M/M/1") {
    const auto stats = rwalk::run_cycles(mm1(), 1914, 100'000, 10'000'000, {}, {}, 0);
    CHECK(stats.censored_fraction() < 1e-3);
    CHECK(stats.n_censored > 0);  // the n^{-1/2} tail does reach the cap
}

TEST_CASE("censoring is pathwise monotone in the step cap") {
    const auto model = mm1();
    const auto a = rwalk::run_cycles(model, 31, 20'000, 1'000, {}, {}, 0);
    const auto b = rwalk::run_cycles(model, 31, 20'000, 10'000, {}, {}, 0);
    const auto c = rwalk::run_cycles(model, 31, 20'000, 100'000, {}, {}, 0);
    CHECK(a.n_censored >= b.n_censored);
    CHECK(b.n_censored >= c.n_censored);
    CHECK(a.n_censored > c.n_censored);  // strictly, at this scale
}

TEST_CASE("busy duration dominates n_served times the minimum service support") {
    // uniform service has positive minimum support
    const auto model = calibrate(make_distribution(Family::exponential, {1.0}),
                                 make_distribution(Family::uniform, {0.5, 1.5}), 1.0, 1.0);
    const double min_v = model.service.min_support;
    REQUIRE(min_v > 0.0);
    for (const auto& c : rwalk::sample_cycles(model, 2718, 5'000, 10'000)) {
        CHECK(c.busy >= static_cast<double>(c.n_served) * min_v);
        if (!c.censored) {
            CHECK(c.n_served >= 1);
            CHECK(c.idle >= 0.0);
            CHECK(c.busy > 0.0);
        }
    }
}

TEST_CASE("survival_N basics") {
    const auto model = mm1();
    const auto s = rwalk::survival_N(model, 12, 5'000, {0, 10}, 10'000, 0);
    CHECK(s.survival[0] == 1.0);  // N >= 1 always
    CHECK(s.survival[1] < 1.0);
    CHECK_THROWS_AS(rwalk::survival_N(model, 12, 5'000, {10, 10}, 10'000, 0), ParameterError);
    CHECK_THROWS_AS(rwalk::survival_N(model, 12, 5'000, {10, 20'000}, 10'000, 0),
                    ParameterError);
}

TEST_CASE("sqrt(n) P(N>n) plateaus at the theory constant for M/M/1") {
    const auto model = mm1();
    const std::int64_t n_cycles = 200'000;
    const auto s = rwalk::survival_N(model, 808, n_cycles, {100, 1000, 10000}, 100'000, 0);
    const auto cyc = rwalk::run_cycles(model, 808, n_cycles, 100'000, {}, {}, 0);
    const double target = theory::nstop_tail_constant(1.0, 1.0, 1.0, cyc.mean_idle());
    CHECK(target == Catch::Approx(0.5642 * cyc.mean_idle()).epsilon(1e-3));
    for (std::size_t i = 0; i < s.n.size(); ++i) {
        const double plateau = std::sqrt(static_cast<double>(s.n[i])) * s.survival[i];
        INFO("n=" << s.n[i]);
        CHECK(plateau == Catch::Approx(target).epsilon(0.10));
    }
}

TEST_CASE("log-log slope of P(N>n) is -1/2 over the window") {
    const auto model = gm1_erlang2();
    const std::int64_t n_cycles = 200'000;
    std::vector<std::int64_t> grid;
    for (double x = 100.0; x <= 10'000.0 * 1.0001; x *= std::sqrt(10.0))
        grid.push_back(std::llround(x));
    const auto s = rwalk::survival_N(model, 909, n_cycles, grid, 100'000, 0);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        lx.push_back(std::log(static_cast<double>(s.n[i])));
        ly.push_back(std::log(s.survival[i]));
    }
    const auto line = stats::ols(lx, ly);
    CHECK(line.slope == Catch::Approx(-0.5).margin(0.05));
}
