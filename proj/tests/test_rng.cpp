#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "tf2/error.hpp"
#include "tf2/rng.hpp"

TEST_CASE("engine output matches the standard's reference value") {
    // The 10000th draw of a default-seeded mt19937_64 is fixed by the standard.
    std::mt19937_64 ref;
    ref.discard(9999);
    CHECK(ref() == 9981545732273789042ULL);

    tf2::Rng a(5489);
    for (int i = 0; i < 9999; ++i) {
        a.next();
    }
    CHECK(a.next() == 9981545732273789042ULL);
}

TEST_CASE("splitmix64 reference output") {
    CHECK(tf2::splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("below stays in range and hits every residue") {
    tf2::Rng rng(7);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.below(6);
        REQUIRE(v < 6);
        seen.insert(v);
    }
    CHECK(seen.size() == 6);
    CHECK_THROWS_AS(rng.below(0), tf2::ValidationError);
}

TEST_CASE("unit is in [0, 1)") {
    tf2::Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("shuffle is a permutation and seed-determined") {
    std::vector<int> base(50);
    std::iota(base.begin(), base.end(), 0);
    auto a = base;
    auto b = base;
    tf2::Rng(42).shuffle(a);
    tf2::Rng(42).shuffle(b);
    CHECK(a == b);
    CHECK(a != base);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == base);

    auto c = base;
    tf2::Rng(43).shuffle(c);
    CHECK(c != a);
}

TEST_CASE("sample_indices draws distinct indices") {
    tf2::Rng rng(3);
    for (std::size_t pop : {1u, 5u, 100u}) {
        for (std::size_t k = 0; k <= pop; k += std::max<std::size_t>(1, pop / 4)) {
            auto s = rng.sample_indices(pop, k);
            REQUIRE(s.size() == k);
            std::set<std::size_t> uniq(s.begin(), s.end());
            CHECK(uniq.size() == k);
            CHECK(std::all_of(s.begin(), s.end(), [&](auto i) { return i < pop; }));
        }
    }
    CHECK_THROWS_AS(rng.sample_indices(3, 4), tf2::ValidationError);
}

TEST_CASE("sampling is roughly uniform") {
    // 10000 draws of 1 from 10: each bucket within 20% of 1000.
    tf2::Rng rng(99);
    std::vector<int> hits(10, 0);
    for (int i = 0; i < 10000; ++i) {
        ++hits[rng.sample_indices(10, 1)[0]];
    }
    for (int h : hits) {
        CHECK(h > 800);
        CHECK(h < 1200);
    }
}
