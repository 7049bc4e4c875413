#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "wcoj/error.hpp"
#include "wcoj/executor.hpp"

using namespace wcoj;

namespace {

Query triangle_query() { return Query::parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C)."); }

Relation grid(const std::string& name, const AttributeName& a, const AttributeName& b, int m) {
    std::vector<std::vector<Value>> rows;
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= m; ++j) rows.push_back({Value(i), Value(j)});
    return Relation::from_rows(name, {a, b}, rows);
}

Database grid_triangle_db(const Query& q, int m) {
    std::vector<Relation> rels;
    rels.push_back(grid("R", "A", "B", m));
    rels.push_back(grid("S", "B", "C", m));
    rels.push_back(grid("T", "A", "C", m));
    return Database::from_relations(q, std::move(rels));
}

Relation random_binary(const std::string& name, const std::vector<AttributeName>& schema,
                       std::mt19937_64& rng, int max_rows, int domain) {
    std::set<std::pair<Value, Value>> s;
    int cnt = 1 + int(rng() % max_rows);
    for (int k = 0; k < cnt; ++k) s.insert({1 + rng() % domain, 1 + rng() % domain});
    std::vector<std::vector<Value>> rows;
    for (auto [a, b] : s) rows.push_back({a, b});
    return Relation::from_rows(name, schema, rows);
}

std::set<std::vector<Value>> as_set(const Relation& r) {
    std::set<std::vector<Value>> out;
    for (std::size_t i = 0; i < r.size(); ++i) {
        auto row = r.row(i);
        out.insert(std::vector<Value>(row.begin(), row.end()));
    }
    return out;
}

std::uint64_t next_pow2(std::uint64_t x) {
    std::uint64_t p = 1;
    while (p < x) p <<= 1;
    return p;
}

// Nested loops over the active domains: the second, even dumber oracle.
std::set<std::vector<Value>> nested_loop_join(const Query& q, const Database& db) {
    int n = q.num_vars();
    std::vector<std::set<Value>> domain(n);
    for (std::size_t f = 0; f < q.atoms().size(); ++f) {
        const Relation& rel = db.atom_relation(static_cast<int>(f));
        for (std::size_t r = 0; r < rel.size(); ++r)
            for (std::size_t j = 0; j < q.atoms()[f].vars.size(); ++j)
                domain[q.atoms()[f].vars[j]].insert(rel.at(r, static_cast<int>(j)));
    }
    std::set<std::vector<Value>> out;
    std::vector<Value> tuple(n);
    std::function<void(int)> rec = [&](int v) {
        if (v == n) {
            for (std::size_t f = 0; f < q.atoms().size(); ++f) {
                std::vector<Value> key;
                for (int var : q.atoms()[f].vars) key.push_back(tuple[var]);
                if (!db.atom_relation(static_cast<int>(f)).contains(key)) return;
            }
            out.insert(tuple);
            return;
        }
        for (Value val : domain[v]) {
            tuple[v] = val;
            rec(v + 1);
        }
    };
    rec(0);
    return out;
}

ConstraintSet triangle_cards(const Query& q, std::uint64_t n) {
    std::string s = std::to_string(n);
    return ConstraintSet::parse(
        "card R " + s + "\ncard S " + s + "\ncard T " + s + "\n", q);
}

ProofSequence triangle_sequence() {
    constexpr VarSet A = 1, B = 2, C = 4;
    ProofSequence seq;
    seq.steps = {
        {StepKind::decomposition, A | B, A, Rat(1, 2)},
        {StepKind::submodularity, A, B | C, Rat(1, 2)},
        {StepKind::submodularity, A | B, A | C, Rat(1, 2)},
        {StepKind::composition, A | B | C, B | C, Rat(1, 2)},
        {StepKind::composition, A | B | C, A | C, Rat(1, 2)},
    };
    return seq;
}

}  // namespace

TEST_CASE("grid triangle: all four engines agree") {
    Query q = triangle_query();
    int m = 10;
    Database db = grid_triangle_db(q, m);
    auto dc = triangle_cards(q, std::uint64_t(m) * m);

    auto brute = bruteforce_join(q, db);
    CHECK(brute.output.size() == std::size_t(m) * m * m);

    auto order = compatible_order(dc, q);
    auto back = backtrack_join(q, dc, order, db);
    CHECK(back.output == brute.output);

    auto hl = triangle_heavy_light(db.atom_relation(0), db.atom_relation(1), db.atom_relation(2));
    CHECK(as_set(hl.output) == as_set(brute.output));

    auto annotated = annotate_with_thetas(triangle_sequence(), dc, 3);
    REQUIRE(annotated[0].theta.has_value());
    CHECK(*annotated[0].theta == Rat(m));  // sqrt(m^2 * m^2 / m^2)
    auto panda = panda_interpret(q, db, dc, annotated);
    CHECK(panda.output == brute.output);
}

TEST_CASE("empty relation gives an empty answer") {
    Query q = triangle_query();
    std::vector<Relation> rels;
    rels.push_back(grid("R", "A", "B", 3));
    rels.push_back(Relation::from_rows("S", {"B", "C"}, {}));
    rels.push_back(grid("T", "A", "C", 3));
    Database db = Database::from_relations(q, std::move(rels));
    auto dc = triangle_cards(q, 16);

    CHECK(bruteforce_join(q, db).output.empty());
    CHECK(backtrack_join(q, dc, compatible_order(dc, q), db).output.empty());
}

TEST_CASE("backtrack rejects incompatible orders and unbound variables") {
    Query q = Query::parse("Q(A,B) :- R(A), S(A,B).");
    auto dc = ConstraintSet::parse("card R 8\ndeg S A -> A,B 4\n", q);
    std::vector<Relation> rels;
    rels.push_back(Relation::from_rows("R", {"A"}, {{1}, {2}}));
    rels.push_back(Relation::from_rows("S", {"A", "B"}, {{1, 5}, {2, 6}}));
    Database db = Database::from_relations(q, std::move(rels));

    CHECK_THROWS_AS(backtrack_join(q, dc, {1, 0}, db), Error);  // B before A

    // No constraint introduces B.
    auto partial = ConstraintSet::parse("card R 8\n", q);
    CHECK_THROWS_AS(backtrack_join(q, partial, {0, 1}, db), Error);
}

TEST_CASE("backtrack equals bruteforce on random acyclic instances") {
    Query q = Query::parse("Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), W(D,A).");
    std::mt19937_64 rng(404);
    for (int seed = 0; seed < 15; ++seed) {
        std::vector<Relation> rels;
        rels.push_back(random_binary("R", {"A", "B"}, rng, 40, 8));
        rels.push_back(random_binary("S", {"B", "C"}, rng, 40, 8));
        rels.push_back(random_binary("T", {"C", "D"}, rng, 40, 8));
        rels.push_back(random_binary("W", {"D", "A"}, rng, 40, 8));
        Database db = Database::from_relations(q, rels);

        ConstraintSet dc;
        std::string text;
        for (int f = 0; f < 4; ++f)
            text += "card " + q.atoms()[f].relation + " " +
                    std::to_string(next_pow2(rels[f].size())) + "\n";
        // Occasionally add a forward degree constraint matching the data.
        if (seed % 3 == 0) {
            auto d = degree(rels[1], std::vector<AttributeName>{"B"}, {"B", "C"});
            text += "deg S B -> B,C " + std::to_string(next_pow2(d)) + "\n";
        }
        dc = ConstraintSet::parse(text, q);

        auto brute = bruteforce_join(q, db);
        auto back = backtrack_join(q, dc, compatible_order(dc, q), db);
        CHECK(back.output == brute.output);

        // Double-check the oracle itself against full nested loops.
        if (seed < 5) CHECK(as_set(brute.output) == nested_loop_join(q, db));
    }
}

TEST_CASE("heavy/light handles skew and empty inputs") {
    Query q = triangle_query();
    std::mt19937_64 rng(777);

    // A star: one A value with very high degree plus random edges.
    for (int seed = 0; seed < 10; ++seed) {
        std::set<std::pair<Value, Value>> r_rows;
        for (int j = 1; j <= 30; ++j) r_rows.insert({Value(1), Value(j)});
        for (int k = 0; k < 40; ++k) r_rows.insert({1 + rng() % 12, 1 + rng() % 12});
        std::vector<std::vector<Value>> rr;
        for (auto [a, b] : r_rows) rr.push_back({a, b});

        std::vector<Relation> rels;
        rels.push_back(Relation::from_rows("R", {"A", "B"}, rr));
        rels.push_back(random_binary("S", {"B", "C"}, rng, 60, 30));
        rels.push_back(random_binary("T", {"A", "C"}, rng, 60, 30));
        Database db = Database::from_relations(q, rels);

        auto hl = triangle_heavy_light(rels[0], rels[1], rels[2]);
        auto brute = bruteforce_join(q, db);
        CHECK(as_set(hl.output) == as_set(brute.output));

        // Intermediate bound: both branch joins stay within ceil(sqrt(RST)).
        mpz_class rst = mpz_class(static_cast<unsigned long>(rels[0].size())) *
                        mpz_class(static_cast<unsigned long>(rels[1].size())) *
                        mpz_class(static_cast<unsigned long>(rels[2].size()));
        mpz_class cap = isqrt_ceil(rst);
        CHECK(mpz_class(static_cast<unsigned long>(hl.heavy_join_size)) <= cap);
        CHECK(mpz_class(static_cast<unsigned long>(hl.light_join_size)) <= cap);
    }

    Relation empty_t = Relation::from_rows("T", {"A", "C"}, {});
    auto hl = triangle_heavy_light(grid("R", "A", "B", 3), grid("S", "B", "C", 3), empty_t);
    CHECK(hl.output.empty());
}

TEST_CASE("panda on the five-atom query equals bruteforce") {
    Query q = Query::parse("Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), W(A,C,D), V(A,B,D).");
    auto dc = ConstraintSet::parse(
        "card R 1024\ncard S 1024\ncard T 1024\n"
        "deg W A,C -> A,C,D 1024\ndeg V B,D -> A,B,D 1024\n",
        q);
    auto dual = shannon_flow_dual(dc, 4);
    REQUIRE(dual.status == BoundStatus::ok);
    auto derived = derive(dual.cert, 4);
    REQUIRE(derived.ok);

    std::mt19937_64 rng(99);
    for (int seed = 0; seed < 6; ++seed) {
        std::vector<Relation> rels;
        rels.push_back(random_binary("R", {"A", "B"}, rng, 50, 8));
        rels.push_back(random_binary("S", {"B", "C"}, rng, 50, 8));
        rels.push_back(random_binary("T", {"C", "D"}, rng, 50, 8));
        std::set<std::vector<Value>> w3, v3;
        for (int k = 0; k < 60; ++k) {
            w3.insert({1 + rng() % 8, 1 + rng() % 8, 1 + rng() % 8});
            v3.insert({1 + rng() % 8, 1 + rng() % 8, 1 + rng() % 8});
        }
        rels.push_back(Relation::from_rows("W", {"A", "C", "D"},
                                           std::vector<std::vector<Value>>(w3.begin(), w3.end())));
        rels.push_back(Relation::from_rows("V", {"A", "B", "D"},
                                           std::vector<std::vector<Value>>(v3.begin(), v3.end())));
        Database db = Database::from_relations(q, rels);

        auto annotated = annotate_with_thetas(derived.seq, dc, 4);
        auto panda = panda_interpret(q, db, dc, annotated);
        auto brute = bruteforce_join(q, db);
        CHECK(panda.output == brute.output);
    }
}

TEST_CASE("panda on a single-atom query returns the reduced atom") {
    Query q = Query::parse("Q(A,B) :- R(A,B).");
    auto dc = ConstraintSet::parse("card R 64\n", q);
    std::vector<Relation> rels;
    rels.push_back(grid("R", "A", "B", 4));
    Database db = Database::from_relations(q, std::move(rels));
    auto panda = panda_interpret(q, db, dc, {});
    CHECK(as_set(panda.output) == as_set(db.atom_relation(0)));
}

TEST_CASE("panda triangle respects the intermediate-size cap") {
    Query q = triangle_query();
    std::mt19937_64 rng(31337);
    for (int seed = 0; seed < 8; ++seed) {
        std::vector<Relation> rels;
        rels.push_back(random_binary("R", {"A", "B"}, rng, 60, 10));
        rels.push_back(random_binary("S", {"B", "C"}, rng, 60, 10));
        rels.push_back(random_binary("T", {"A", "C"}, rng, 60, 10));
        Database db = Database::from_relations(q, rels);

        auto dc = ConstraintSet::parse(
            "card R " + std::to_string(next_pow2(rels[0].size())) + "\ncard S " +
                std::to_string(next_pow2(rels[1].size())) + "\ncard T " +
                std::to_string(next_pow2(rels[2].size())) + "\n",
            q);
        auto dual = shannon_flow_dual(dc, 3);
        REQUIRE(dual.status == BoundStatus::ok);
        auto derived = derive(dual.cert, 3);
        REQUIRE(derived.ok);
        auto annotated = annotate_with_thetas(derived.seq, dc, 3);

        auto panda = panda_interpret(q, db, dc, annotated);
        auto brute = bruteforce_join(q, db);
        CHECK(panda.output == brute.output);

        // Declared statistics bound the intermediates: ceil(sqrt(N_R N_S N_T)).
        mpz_class nrst(1);
        for (const auto& c : dc.items()) nrst *= mpz_class(static_cast<unsigned long>(c.bound));
        CHECK(mpz_class(static_cast<unsigned long>(panda.max_intermediate)) <= isqrt_ceil(nrst));
    }
}

TEST_CASE("engines are deterministic") {
    Query q = triangle_query();
    Database db = grid_triangle_db(q, 6);
    auto dc = triangle_cards(q, 36);
    auto order = compatible_order(dc, q);

    auto a = backtrack_join(q, dc, order, db);
    auto b = backtrack_join(q, dc, order, db);
    CHECK(a.output == b.output);
    CHECK(a.counters.probes == b.counters.probes);
    CHECK(a.counters.emitted == b.counters.emitted);
    CHECK(a.counters.comparisons == b.counters.comparisons);
}

TEST_CASE("inner-loop probe accounting on random triangles") {
    // For the triangle run with order (A,B,C), the probes spent inside the
    // deepest intersection stay within 2 * sum over (a,b) in R of
    // sqrt(|sigma_B=b S| * |sigma_A=a T|) * (1 + log2 |db|).
    Query q = triangle_query();
    std::mt19937_64 rng(2718);
    for (int seed = 0; seed < 10; ++seed) {
        std::vector<Relation> rels;
        rels.push_back(random_binary("R", {"A", "B"}, rng, 50, 9));
        rels.push_back(random_binary("S", {"B", "C"}, rng, 50, 9));
        rels.push_back(random_binary("T", {"A", "C"}, rng, 50, 9));
        Database db = Database::from_relations(q, rels);
        auto dc = triangle_cards(q, 4096);

        auto res = backtrack_join(q, dc, {0, 1, 2}, db);

        double rhs = 0.0;
        const Relation &r = rels[0], &s = rels[1], &t = rels[2];
        for (std::size_t i = 0; i < r.size(); ++i) {
            Value a = r.at(i, 0), b = r.at(i, 1);
            std::vector<Value> kb{b}, ka{a};
            double degs = double(prefix_select(s, kb).size());
            double degt = double(prefix_select(t, ka).size());
            rhs += std::sqrt(degs * degt);
        }
        double logdb = std::log2(double(db.total_tuples()));
        CHECK(double(res.intersect_probes_per_level[2]) <= 2.0 * rhs * (1.0 + logdb));
    }
}
