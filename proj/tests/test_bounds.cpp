#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "wcoj/bounds.hpp"
#include "wcoj/error.hpp"

using namespace wcoj;

namespace {

Query triangle_query() { return Query::parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C)."); }

Query table_query() {
    return Query::parse("Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), W(A,C,D), V(A,B,D).");
}

ConstraintSet triangle_cards(const Query& q, std::uint64_t n) {
    std::string text = "card R " + std::to_string(n) + "\ncard S " + std::to_string(n) +
                       "\ncard T " + std::to_string(n) + "\n";
    return ConstraintSet::parse(text, q);
}

ConstraintSet table_constraints(const Query& q, std::uint64_t nab, std::uint64_t nbc,
                                std::uint64_t ncd, std::uint64_t nw, std::uint64_t nv) {
    return ConstraintSet::parse("card R " + std::to_string(nab) + "\ncard S " +
                                    std::to_string(nbc) + "\ncard T " + std::to_string(ncd) +
                                    "\ndeg W A,C -> A,C,D " + std::to_string(nw) +
                                    "\ndeg V B,D -> A,B,D " + std::to_string(nv) + "\n",
                                q);
}

// Random acyclic constraint set with power-of-two statistics and a complete
// closure: per-variable cardinalities along a random order plus some forward
// degree constraints.
ConstraintSet random_acyclic_dc(std::mt19937_64& rng, int n) {
    ConstraintSet dc;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    // Seed the closure with a cardinality constraint over a random prefix.
    int head = 1 + int(rng() % n);
    VarSet seed = 0;
    for (int i = 0; i < head; ++i) seed |= var_bit(order[i]);
    dc.add({0, seed, std::uint64_t(1) << (rng() % 20), ""});

    // Forward constraints bind every remaining variable.
    for (int i = head; i < n; ++i) {
        VarSet x = 0;
        int nx = 1 + int(rng() % std::min(i, 2));
        for (int k = 0; k < nx; ++k) x |= var_bit(order[rng() % i]);
        VarSet y = x | var_bit(order[i]);
        dc.add({x, y, std::uint64_t(1) << (rng() % 12), ""});
    }
    // A few extra forward edges.
    for (int extra = int(rng() % 3); extra > 0; --extra) {
        int hi = 1 + int(rng() % (n - 1));
        VarSet x = var_bit(order[rng() % hi]);
        VarSet y = x | var_bit(order[hi]);
        dc.add({x, y, std::uint64_t(1) << (rng() % 12), ""});
    }
    return dc;
}

}  // namespace

TEST_CASE("agm bound on the triangle") {
    Query q = triangle_query();
    auto h = q.hypergraph();
    std::vector<LogStat> stats(3, LogStat::of(std::uint64_t(1) << 20));
    auto res = agm_bound(h, stats);
    REQUIRE(res.status == BoundStatus::ok);
    CHECK(res.log2_bound == Rat(30));
    CHECK(res.cover.weight == std::vector<Rat>{Rat(1, 2), Rat(1, 2), Rat(1, 2)});
}

TEST_CASE("agm bound picks the join-pair vertex under skew") {
    Query q = triangle_query();
    auto res = agm_bound(q.hypergraph(), {LogStat::of(1 << 10), LogStat::of(1 << 10),
                                          LogStat::of(std::uint64_t(1) << 40)});
    REQUIRE(res.status == BoundStatus::ok);
    CHECK(res.log2_bound == Rat(20));
    CHECK(res.cover.weight == std::vector<Rat>{Rat(1), Rat(1), Rat(0)});
}

TEST_CASE("agm bound single covering edge") {
    Query q = Query::parse("Q(A,B) :- R(A,B).");
    auto res = agm_bound(q.hypergraph(), {LogStat::of(1 << 12)});
    REQUIRE(res.status == BoundStatus::ok);
    CHECK(res.log2_bound == Rat(12));
    CHECK(res.cover.weight == std::vector<Rat>{Rat(1)});
}

TEST_CASE("agm bound uncovered vertex is unbounded") {
    Hypergraph h;
    h.n = 2;
    h.edges = {var_bit(0)};
    CHECK(agm_bound(h, {LogStat::of(4)}).status == BoundStatus::unbounded);
}

TEST_CASE("modular bound equals agm for cardinality-only constraints") {
    Query q = triangle_query();
    auto dc = triangle_cards(q, std::uint64_t(1) << 20);
    auto mod = modular_bound(dc, q.num_vars());
    REQUIRE(mod.status == BoundStatus::ok);
    CHECK(mod.log2_bound == Rat(30));
    CHECK(mod.acyclic);

    // Dual weights cover every variable.
    for (int v = 0; v < q.num_vars(); ++v) {
        Rat sum(0);
        for (std::size_t k = 0; k < dc.items().size(); ++k)
            if (var_in(dc.items()[k].delta(), v)) sum += mod.dual[k];
        CHECK(sum >= 1);
    }
}

TEST_CASE("modular bound two-variable chain") {
    Query q = Query::parse("Q(A,B) :- R(A), S(A,B).");
    auto dc = ConstraintSet::parse("card R 1024\ndeg S A -> A,B 32\n", q);
    auto mod = modular_bound(dc, 2);
    REQUIRE(mod.status == BoundStatus::ok);
    CHECK(mod.log2_bound == Rat(15));
    CHECK(mod.primal == std::vector<Rat>{Rat(10), Rat(5)});
}

TEST_CASE("modular bound unbounded without closure") {
    Query q = Query::parse("Q(A,B) :- R(A), S(A,B).");
    auto dc = ConstraintSet::parse("deg S A -> A,B 32\n", q);
    CHECK(modular_bound(dc, 2).status == BoundStatus::unbounded);
}

TEST_CASE("polymatroid bound on the triangle matches agm") {
    Query q = triangle_query();
    auto dc = triangle_cards(q, std::uint64_t(1) << 20);
    auto poly = polymatroid_bound(dc, 3);
    REQUIRE(poly.status == BoundStatus::ok);
    CHECK(poly.log2_bound == Rat(30));
    CHECK(poly.h[full_set(3)] == Rat(30));
    CHECK(check_polymatroid(poly.h).ok);
}

TEST_CASE("polymatroid bound on the five-atom example") {
    Query q = table_query();

    // Equal statistics: submodularity with the disjoint pair {A,B}, {C,D}
    // gives h(ABCD) <= h(AB) + h(CD) = 20, and the modular point v = (5,5,5,5)
    // attains it, so the bound is exactly 20.
    auto equal = polymatroid_bound(table_constraints(q, 1024, 1024, 1024, 1024, 1024), 4);
    REQUIRE(equal.status == BoundStatus::ok);
    CHECK(equal.log2_bound == Rat(20));

    // When the two disjoint pairs are expensive, the half-weight certificate
    // over all five terms becomes optimal: 1/2 (20+10+20+10+10) = 35.
    auto skew = polymatroid_bound(
        table_constraints(q, 1 << 20, 1024, 1 << 20, 1024, 1024), 4);
    REQUIRE(skew.status == BoundStatus::ok);
    CHECK(skew.log2_bound == Rat(35));
}

TEST_CASE("polymatroid bound size limit") {
    ConstraintSet dc;
    dc.add({0, full_set(11), 4, ""});
    CHECK(polymatroid_bound(dc, 11).status == BoundStatus::size_limit);
}

TEST_CASE("shannon flow dual on the triangle") {
    Query q = triangle_query();
    auto dc = triangle_cards(q, std::uint64_t(1) << 20);
    auto res = shannon_flow_dual(dc, 3);
    REQUIRE(res.status == BoundStatus::ok);
    CHECK(res.value == Rat(30));
    REQUIRE(res.cert.delta.size() == 3);
    for (const auto& t : res.cert.delta) {
        CHECK(t.x == 0);
        CHECK(t.weight == Rat(1, 2));
    }
}

TEST_CASE("shannon flow dual on the five-atom example") {
    Query q = table_query();

    // Equal statistics: the optimal certificate is the submodularity pair
    // h(ABCD) <= h(AB) + h(CD), value 20.
    auto equal = shannon_flow_dual(table_constraints(q, 1024, 1024, 1024, 1024, 1024), 4);
    REQUIRE(equal.status == BoundStatus::ok);
    CHECK(equal.value == Rat(20));
    REQUIRE(equal.cert.delta.size() == 2);
    CHECK(equal.cert.delta[0].weight == Rat(1));
    CHECK(equal.cert.delta[1].weight == Rat(1));

    // Skewed statistics make the five-term half-weight inequality optimal.
    auto skew =
        shannon_flow_dual(table_constraints(q, 1 << 20, 1024, 1 << 20, 1024, 1024), 4);
    REQUIRE(skew.status == BoundStatus::ok);
    CHECK(skew.value == Rat(35));
    REQUIRE(skew.cert.delta.size() == 5);
    for (const auto& t : skew.cert.delta) CHECK(t.weight == Rat(1, 2));
}

TEST_CASE("shannon flow dual trivial single constraint") {
    ConstraintSet dc;
    dc.add({0, full_set(3), 1 << 8, ""});
    auto res = shannon_flow_dual(dc, 3);
    REQUIRE(res.status == BoundStatus::ok);
    CHECK(res.value == Rat(8));
    REQUIRE(res.cert.delta.size() == 1);
    CHECK(res.cert.delta[0].weight == Rat(1));
    CHECK(res.cert.xi.empty());
    CHECK(res.cert.alpha.empty());
}

TEST_CASE("strong duality: polymatroid equals shannon dual exactly") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        int n = 2 + int(rng() % 5);  // up to 6 variables
        auto dc = random_acyclic_dc(rng, n);
        auto poly = polymatroid_bound(dc, n);
        auto dual = shannon_flow_dual(dc, n);
        REQUIRE(poly.status == BoundStatus::ok);
        REQUIRE(dual.status == BoundStatus::ok);
        CHECK(poly.log2_bound == dual.value);
    }
}

TEST_CASE("prop 3 collapse: modular equals polymatroid on acyclic sets") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 2 + int(rng() % 5);
        auto dc = random_acyclic_dc(rng, n);
        REQUIRE(topological_order(dc, n).acyclic);
        auto mod = modular_bound(dc, n);
        auto poly = polymatroid_bound(dc, n);
        REQUIRE(mod.status == BoundStatus::ok);
        REQUIRE(poly.status == BoundStatus::ok);
        CHECK(mod.log2_bound == poly.log2_bound);
    }
}

TEST_CASE("adding a constraint never increases a bound") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 2 + int(rng() % 4);
        auto dc = random_acyclic_dc(rng, n);
        auto before = polymatroid_bound(dc, n);
        REQUIRE(before.status == BoundStatus::ok);

        // Add one more constraint on a random pair.
        ConstraintSet bigger = dc;
        VarSet y = 1 + (rng() % (full_set(n)));
        VarSet x = (rng() % 2) ? 0 : (y & (y - 1));  // maybe drop one element
        if (x == y) x = 0;
        bigger.add({x, y, std::uint64_t(1) << (rng() % 10), ""});
        auto after = polymatroid_bound(bigger, n);
        REQUIRE(after.status == BoundStatus::ok);
        CHECK(after.log2_bound <= before.log2_bound);
    }
}

TEST_CASE("check_shannon_flow on triangle coefficient vectors") {
    VarSet ab = var_bit(0) | var_bit(1);
    VarSet bc = var_bit(1) | var_bit(2);
    VarSet ac = var_bit(0) | var_bit(2);
    auto mk = [&](Rat a, Rat b, Rat c) {
        return std::vector<CertTerm>{{0, ab, a}, {0, bc, b}, {0, ac, c}};
    };
    CHECK(check_shannon_flow(mk(Rat(1, 2), Rat(1, 2), Rat(1, 2)), 3));
    CHECK_FALSE(check_shannon_flow(mk(Rat(1), Rat(0), Rat(0)), 3));
    CHECK(check_shannon_flow(mk(Rat(1), Rat(1), Rat(0)), 3));
}

TEST_CASE("check_shannon_flow agrees with the direct polymatroid LP route") {
    // Second route: delta is a Shannon flow iff max h([n]) over polymatroids
    // with <delta, h> <= 1 stays at most 1.
    VarSet ab = var_bit(0) | var_bit(1);
    VarSet bc = var_bit(1) | var_bit(2);
    VarSet ac = var_bit(0) | var_bit(2);
    const int n = 3;
    const VarSet full = full_set(n);

    for (int a4 = 0; a4 <= 4; ++a4)
        for (int b4 = 0; b4 <= 4; ++b4)
            for (int c4 = 0; c4 <= 4; ++c4) {
                std::vector<CertTerm> delta{
                    {0, ab, Rat(a4, 4)}, {0, bc, Rat(b4, 4)}, {0, ac, Rat(c4, 4)}};

                LpProblem lp(true);
                for (VarSet s = 1; s <= full; ++s) lp.add_var(s == full ? Rat(1) : Rat(0));
                auto var_of = [](VarSet s) { return int(s) - 1; };
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j) {
                        VarSet rest = full & ~var_bit(i) & ~var_bit(j);
                        for (VarSet s = rest;; s = (s - 1) & rest) {
                            int row = lp.add_constraint(Sense::le, Rat(0));
                            lp.add_coeff(row, var_of(s | var_bit(i) | var_bit(j)), Rat(1));
                            if (s != 0) lp.add_coeff(row, var_of(s), Rat(1));
                            lp.add_coeff(row, var_of(s | var_bit(i)), Rat(-1));
                            lp.add_coeff(row, var_of(s | var_bit(j)), Rat(-1));
                            if (s == 0) break;
                        }
                    }
                for (int i = 0; i < n; ++i) {
                    VarSet sub = full & ~var_bit(i);
                    int row = lp.add_constraint(Sense::le, Rat(0));
                    lp.add_coeff(row, var_of(sub), Rat(1));
                    lp.add_coeff(row, var_of(full), Rat(-1));
                }
                int budget = lp.add_constraint(Sense::le, Rat(1));
                for (const auto& t : delta) lp.add_coeff(budget, var_of(t.y), t.weight);

                auto sol = lp.solve();
                bool second_route =
                    sol.status == LpStatus::optimal && sol.value <= Rat(1);
                CHECK(check_shannon_flow(delta, n) == second_route);
            }
}

TEST_CASE("check_polymatroid basics") {
    SetFunc modular(3);
    for (VarSet s = 0; s < 8; ++s) modular[s] = Rat(varset_size(s));
    CHECK(check_polymatroid(modular).ok);

    SetFunc rank1(3);
    for (VarSet s = 1; s < 8; ++s) rank1[s] = Rat(7, 2);  // min(|S|,1) scaled
    CHECK(check_polymatroid(rank1).ok);

    SetFunc bad(2);
    bad[var_bit(0)] = Rat(1);
    bad[var_bit(1)] = Rat(1);
    bad[var_bit(0) | var_bit(1)] = Rat(3);
    auto res = check_polymatroid(bad);
    CHECK_FALSE(res.ok);
    CHECK(res.violated.find("submodularity") != std::string::npos);
}

namespace {

Database grid_triangle_db(const Query& q, int m) {
    std::vector<std::vector<Value>> rows;
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= m; ++j) rows.push_back({Value(i), Value(j)});
    std::vector<Relation> rels;
    rels.push_back(Relation::from_rows("R", {"A", "B"}, rows));
    rels.push_back(Relation::from_rows("S", {"B", "C"}, rows));
    rels.push_back(Relation::from_rows("T", {"A", "C"}, rows));
    return Database::from_relations(q, std::move(rels));
}

}  // namespace

TEST_CASE("friedgut inequality with unit weights is the agm specialization") {
    Query q = triangle_query();
    int m = 4;
    Database db = grid_triangle_db(q, m);

    WeightFunction w(3);
    for (int f = 0; f < 3; ++f) {
        const Relation& rel = db.atom_relation(f);
        for (std::size_t r = 0; r < rel.size(); ++r)
            w[f][{rel.at(r, 0), rel.at(r, 1)}] = Rat(1);
    }
    EdgeCover cover{{Rat(1, 2), Rat(1, 2), Rat(1, 2)}};
    auto res = check_friedgut(q, db, w, cover);
    CHECK(res.holds);
    CHECK(res.lhs == doctest::Approx(m * m * m));          // |Q| = m^3
    CHECK(res.rhs == doctest::Approx(m * m * m));          // (m^2)^(3/2)
}

TEST_CASE("friedgut with empty output") {
    Query q = triangle_query();
    std::vector<Relation> rels;
    rels.push_back(Relation::from_rows("R", {"A", "B"}, {{1, 2}}));
    rels.push_back(Relation::from_rows("S", {"B", "C"}, {{9, 9}}));
    rels.push_back(Relation::from_rows("T", {"A", "C"}, {{1, 9}}));
    Database db = Database::from_relations(q, std::move(rels));
    WeightFunction w(3);
    w[0][{1, 2}] = Rat(3);
    w[1][{9, 9}] = Rat(4);
    w[2][{1, 9}] = Rat(5);
    EdgeCover cover{{Rat(1, 2), Rat(1, 2), Rat(1, 2)}};
    auto res = check_friedgut(q, db, w, cover);
    CHECK(res.lhs == 0.0);
    CHECK(res.holds);
}

TEST_CASE("friedgut randomized property") {
    Query q = triangle_query();
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Relation> rels;
        std::vector<std::vector<std::vector<Value>>> tuples(3);
        for (int f = 0; f < 3; ++f) {
            std::set<std::pair<Value, Value>> s;
            int cnt = 1 + int(rng() % 12);
            for (int k = 0; k < cnt; ++k) s.insert({rng() % 5, rng() % 5});
            std::vector<std::vector<Value>> rows;
            for (auto [a, b] : s) rows.push_back({a, b});
            tuples[f] = rows;
        }
        rels.push_back(Relation::from_rows("R", {"A", "B"}, tuples[0]));
        rels.push_back(Relation::from_rows("S", {"B", "C"}, tuples[1]));
        rels.push_back(Relation::from_rows("T", {"A", "C"}, tuples[2]));
        Database db = Database::from_relations(q, std::move(rels));

        WeightFunction w(3);
        for (int f = 0; f < 3; ++f)
            for (auto& t : tuples[f]) w[f][t] = Rat(int(rng() % 11));

        // Random rational cover, repaired to satisfy the covering conditions.
        std::vector<Rat> cw(3);
        for (auto& x : cw) x = Rat(int(rng() % 5), 4);
        for (int v = 0; v < 3; ++v) {
            Rat sum(0);
            std::vector<int> touching;
            for (int f = 0; f < 3; ++f)
                if (var_in(q.atoms()[f].var_set, v)) {
                    sum += cw[f];
                    touching.push_back(f);
                }
            if (sum < 1) cw[touching[0]] += Rat(1) - sum;
        }
        auto res = check_friedgut(q, db, w, EdgeCover{cw});
        CHECK(res.holds);
    }
}
