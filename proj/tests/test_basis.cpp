#include "shiftmatch/basis.hpp"

#include "shiftmatch/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace shiftmatch;

TEST_CASE("build_basis worked examples") {
    const MultiIndexBasis b10 = build_basis(1, 0);
    CHECK(b10.indices.size() == 1);
    CHECK(b10.indices[0] == std::vector<int>{0});
    CHECK(b10.kstar == 1);
    CHECK(b10.dconst == 0);

    const MultiIndexBasis b22 = build_basis(2, 2);
    CHECK(b22.kstar == 6);
    CHECK(b22.dconst == 8);

    const MultiIndexBasis b31 = build_basis(3, 1);
    CHECK(b31.kstar == 4);
    CHECK(b31.dconst == 3);
    CHECK(b31.indices[0] == std::vector<int>{0, 0, 0});
}

TEST_CASE("build_basis rejects d = 0") { CHECK_THROWS_AS(build_basis(0, 2), std::invalid_argument); }

TEST_CASE("basis enumeration invariants over d <= 6, L <= 4") {
    for (int d = 1; d <= 6; ++d) {
        for (int L = 0; L <= 4; ++L) {
            const MultiIndexBasis b = build_basis(d, L);
            REQUIRE(b.kstar == static_cast<int>(b.indices.size()));
            CHECK(b.kstar == binomial(d + L, d));
            // Exhaustive: every tuple with |alpha| <= L appears exactly once.
            std::set<std::vector<int>> seen(b.indices.begin(), b.indices.end());
            CHECK(seen.size() == b.indices.size());
            CHECK(b.indices.front() == std::vector<int>(static_cast<std::size_t>(d), 0));
            int prev_deg = -1;
            std::vector<int> prev;
            for (const auto& alpha : b.indices) {
                int deg = 0;
                for (int a : alpha) {
                    CHECK(a >= 0);
                    deg += a;
                }
                CHECK(deg <= L);
                // (degree, lexicographic) ordering
                if (deg == prev_deg) CHECK(prev < alpha);
                else CHECK(prev_deg < deg);
                prev_deg = deg;
                prev = alpha;
            }
            std::int64_t expect_d = 0;
            for (int i = 1; i <= L; ++i) expect_d += i * binomial(d + i - 1, i);
            CHECK(b.dconst == expect_d);
        }
    }
}

TEST_CASE("eval_monomials worked examples") {
    const MultiIndexBasis b = build_basis(2, 0);
    const double z[] = {0.4, -1.0};
    const double t[] = {2.0, 3.0};
    CHECK(eval_monomials(b, z, t) == std::vector<double>{1.0});

    const MultiIndexBasis b3 = build_basis(3, 2);
    const double p[] = {0.1, 0.2, 0.3};
    const auto at_center = eval_monomials(b3, p, p);
    CHECK(at_center[0] == 1.0);
    for (std::size_t a = 1; a < at_center.size(); ++a) CHECK(at_center[a] == 0.0);

    const MultiIndexBasis b12 = build_basis(1, 2);
    const double z1[] = {1.0};
    const double t1[] = {3.0};
    CHECK(eval_monomials(b12, z1, t1) == std::vector<double>{1.0, 2.0, 4.0});
}

TEST_CASE("eval_monomials scaling rescales columns by s^-|alpha|") {
    CounterRng rng(11);
    const MultiIndexBasis b = build_basis(3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        double z[3], t[3];
        for (int j = 0; j < 3; ++j) {
            z[j] = rng.uniform(-2, 2);
            t[j] = rng.uniform(-2, 2);
        }
        const double s = rng.uniform(0.1, 4.0);
        const auto unscaled = eval_monomials(b, z, t, 1.0);
        const auto scaled = eval_monomials(b, z, t, s);
        for (std::size_t a = 0; a < unscaled.size(); ++a) {
            int deg = 0;
            for (int e : b.indices[a]) deg += e;
            CHECK(scaled[a] == doctest::Approx(unscaled[a] * std::pow(s, -deg)).epsilon(1e-12));
        }
    }
}

TEST_CASE("eval_monomials rejects bad input") {
    const MultiIndexBasis b = build_basis(2, 1);
    const double z[] = {0.0, 0.0};
    const double t1[] = {1.0};
    CHECK_THROWS_AS(eval_monomials(b, z, t1), std::invalid_argument);
    const double t2[] = {1.0, 1.0};
    CHECK_THROWS_AS(eval_monomials(b, z, t2, 0.0), std::invalid_argument);
}
