#include <catch2/catch_amalgamated.hpp>

#include "lhs/rng.hpp"

using namespace lhs;

TEST_CASE("identical stream keys produce identical draws") {
    RngStream a(42, 7, RngTag::kScene);
    RngStream b(42, 7, RngTag::kScene);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("streams differ across seed, index, and tag") {
    RngStream base(42, 7, RngTag::kScene);
    RngStream other_seed(43, 7, RngTag::kScene);
    RngStream other_index(42, 8, RngTag::kScene);
    RngStream other_tag(42, 7, RngTag::kMask);
    const auto v = base.next_u64();
    REQUIRE(v != other_seed.next_u64());
    REQUIRE(v != other_index.next_u64());
    REQUIRE(v != other_tag.next_u64());
}

TEST_CASE("split children are independent of the parent counter") {
    RngStream a(1, 2, RngTag::kScene);
    RngStream c1 = a.split(5);
    a.next_u64();
    a.next_u64();
    RngStream c2 = a.split(5);
    REQUIRE(c1.next_u64() == c2.next_u64());
}

TEST_CASE("uniform is in range with a sane mean") {
    RngStream rng(3);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    REQUIRE_THAT(sum / n, Catch::Matchers::WithinAbs(0.5, 0.01));
}

TEST_CASE("normal moments") {
    RngStream rng(4);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    REQUIRE_THAT(sum / n, Catch::Matchers::WithinAbs(0.0, 0.01));
    REQUIRE_THAT(sq / n, Catch::Matchers::WithinAbs(1.0, 0.02));
}
