#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "wcoj/lp.hpp"

using namespace wcoj;

TEST_CASE("single bounded variable") {
    LpProblem lp(true);
    int x = lp.add_var(Rat(1));
    int c = lp.add_constraint(Sense::le, Rat(3));
    lp.add_coeff(c, x, Rat(1));
    auto r = lp.solve();
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == Rat(3));
    CHECK(r.primal[x] == Rat(3));
}

TEST_CASE("two variables, one constraint, dual is 1") {
    LpProblem lp(true);
    int x = lp.add_var(Rat(1));
    int y = lp.add_var(Rat(1));
    int c = lp.add_constraint(Sense::le, Rat(5));
    lp.add_coeff(c, x, Rat(1));
    lp.add_coeff(c, y, Rat(1));
    auto r = lp.solve();
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == Rat(5));
    CHECK(r.dual[c] == Rat(1));
}

TEST_CASE("triangle fractional edge cover") {
    // min a+b+c subject to pairwise sums >= 1.
    LpProblem lp(false);
    int a = lp.add_var(Rat(1));
    int b = lp.add_var(Rat(1));
    int c = lp.add_var(Rat(1));
    int vA = lp.add_constraint(Sense::ge, Rat(1));
    lp.add_coeff(vA, a, Rat(1));
    lp.add_coeff(vA, c, Rat(1));
    int vB = lp.add_constraint(Sense::ge, Rat(1));
    lp.add_coeff(vB, a, Rat(1));
    lp.add_coeff(vB, b, Rat(1));
    int vC = lp.add_constraint(Sense::ge, Rat(1));
    lp.add_coeff(vC, b, Rat(1));
    lp.add_coeff(vC, c, Rat(1));
    auto r = lp.solve();
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == Rat(3, 2));
    CHECK(r.primal[a] == Rat(1, 2));
    CHECK(r.primal[b] == Rat(1, 2));
    CHECK(r.primal[c] == Rat(1, 2));
}

TEST_CASE("infeasible program") {
    LpProblem lp(true);
    int x = lp.add_var(Rat(1));
    int c1 = lp.add_constraint(Sense::le, Rat(1));
    lp.add_coeff(c1, x, Rat(1));
    int c2 = lp.add_constraint(Sense::ge, Rat(2));
    lp.add_coeff(c2, x, Rat(1));
    CHECK(lp.solve().status == LpStatus::infeasible);
}

TEST_CASE("unbounded program") {
    LpProblem lp(true);
    int x = lp.add_var(Rat(1));
    int y = lp.add_var(Rat(0));
    int c = lp.add_constraint(Sense::ge, Rat(0));
    lp.add_coeff(c, x, Rat(1));
    lp.add_coeff(c, y, Rat(1));
    CHECK(lp.solve().status == LpStatus::unbounded);
}

TEST_CASE("equality constraints and free variables") {
    // min x + 2y  s.t.  x - y == 3, x + y >= 5, y free.
    LpProblem lp(false);
    int x = lp.add_var(Rat(1));
    int y = lp.add_var(Rat(2), true);
    int c1 = lp.add_constraint(Sense::eq, Rat(3));
    lp.add_coeff(c1, x, Rat(1));
    lp.add_coeff(c1, y, Rat(-1));
    int c2 = lp.add_constraint(Sense::ge, Rat(5));
    lp.add_coeff(c2, x, Rat(1));
    lp.add_coeff(c2, y, Rat(1));
    auto r = lp.solve();
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.primal[x] == Rat(4));
    CHECK(r.primal[y] == Rat(1));
    CHECK(r.value == Rat(6));
}

TEST_CASE("negative rhs normalization") {
    // max -x s.t. -x >= -4 (i.e. x <= 4), plus x >= 1.
    LpProblem lp(true);
    int x = lp.add_var(Rat(-1));
    int c1 = lp.add_constraint(Sense::ge, Rat(-4));
    lp.add_coeff(c1, x, Rat(-1));
    int c2 = lp.add_constraint(Sense::ge, Rat(1));
    lp.add_coeff(c2, x, Rat(1));
    auto r = lp.solve();
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == Rat(-1));
    CHECK(r.primal[x] == Rat(1));
}

TEST_CASE("random feasible programs keep exact primal-dual agreement") {
    // The solver itself re-verifies strong duality exactly; this drives many
    // random shapes through it, including degenerate and redundant rows.
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        int nv = 1 + int(rng() % 4);
        int nc = 1 + int(rng() % 5);
        LpProblem lp(trial % 2 == 0);
        for (int v = 0; v < nv; ++v) lp.add_var(Rat(int(rng() % 7) - 3), rng() % 4 == 0);
        // Box the variables so max problems stay bounded and min stays feasible.
        for (int v = 0; v < nv; ++v) {
            int c = lp.add_constraint(Sense::le, Rat(int(rng() % 10)));
            lp.add_coeff(c, v, Rat(1));
            int g = lp.add_constraint(Sense::ge, Rat(-int(rng() % 10)));
            lp.add_coeff(g, v, Rat(1));
        }
        for (int c = 0; c < nc; ++c) {
            int row = lp.add_constraint(Sense::le, Rat(int(rng() % 20)));
            for (int v = 0; v < nv; ++v)
                if (rng() % 2) lp.add_coeff(row, v, Rat(int(rng() % 5)));
        }
        auto r = lp.solve();
        CHECK(r.status == LpStatus::optimal);  // verification throws on any defect
    }
}
