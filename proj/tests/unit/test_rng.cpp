#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "critiq/rng.hpp"

using namespace critiq;

TEST_CASE("same seed reproduces the same stream") {
    RngStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams with distinct indices differ") {
    auto a = RngStream::substream(42, 0);
    auto b = RngStream::substream(42, 1);
    auto c = RngStream::substream(43, 0);
    int equal_ab = 0, equal_ac = 0;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        equal_ab += va == b.next_u64();
        equal_ac += va == c.next_u64();
    }
    CHECK(equal_ab == 0);
    CHECK(equal_ac == 0);
}

TEST_CASE("uniform lies strictly inside (0,1)") {
    RngStream rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 1e-4);
    CHECK(hi > 1.0 - 1e-4);
}

TEST_CASE("normal has mean 0 and unit variance") {
    RngStream rng(11);
    const int n = 400000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("derive_seed separates tagged sub-experiments") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t tag = 0; tag < 100; ++tag) seen.insert(derive_seed(99, tag));
    CHECK(seen.size() == 100);
    CHECK(derive_seed(99, 0) != derive_seed(100, 0));
}
