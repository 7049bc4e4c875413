#include "wcoj/workbench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "wcoj/bounds.hpp"
#include "wcoj/error.hpp"

namespace wcoj {

Query triangle_query() { return Query::parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C)."); }

Database gen_grid_triangle(int m) {
    if (m < 1) fail(Errc::internal, "gen_grid_triangle: m must be >= 1");
    std::vector<Value> flat;
    flat.reserve(std::size_t(m) * m * 2);
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= m; ++j) {
            flat.push_back(Value(i));
            flat.push_back(Value(j));
        }
    Query q = triangle_query();
    std::vector<Relation> rels;
    rels.push_back(Relation::from_flat("R", {"A", "B"}, std::vector<Value>(flat)));
    rels.push_back(Relation::from_flat("S", {"B", "C"}, std::vector<Value>(flat)));
    rels.push_back(Relation::from_flat("T", {"A", "C"}, std::move(flat)));
    return Database::from_relations(q, std::move(rels));
}

Database gen_agm_tight(const Query& q, std::uint64_t n_value) {
    if (!is_power_of_two(n_value))
        fail(Errc::internal, "gen_agm_tight: the cardinality target must be a power of two");
    const int n = q.num_vars();

    // Vertex LP at uniform cardinalities: the per-variable exponents.
    ConstraintSet dc;
    for (const auto& atom : q.atoms()) dc.add({0, atom.var_set, n_value, atom.relation});
    auto mod = modular_bound(dc, n);
    if (mod.status != BoundStatus::ok)
        fail(Errc::internal, "gen_agm_tight: vertex LP did not solve (uncovered vertex?)");

    // Domain sizes: 2^floor(v_i).
    std::vector<std::uint64_t> dom(n);
    for (int i = 0; i < n; ++i) {
        mpz_class fl = mod.primal[i].get_num() / mod.primal[i].get_den();
        if (!fl.fits_ulong_p() || fl.get_ui() > 62)
            fail(Errc::internal, "gen_agm_tight: exponent too large");
        dom[i] = std::uint64_t(1) << fl.get_ui();
    }

    std::vector<Relation> rels;
    for (const auto& atom : q.atoms()) {
        std::vector<AttributeName> schema;
        std::uint64_t count = 1;
        for (int v : atom.vars) {
            schema.push_back(q.vars().name(v));
            count *= dom[v];
        }
        std::vector<Value> flat;
        flat.reserve(count * atom.vars.size());
        // Mixed-radix enumeration of the full product, values start at 1.
        std::vector<Value> tuple(atom.vars.size(), 1);
        for (std::uint64_t idx = 0; idx < count; ++idx) {
            std::uint64_t rem = idx;
            for (std::size_t j = atom.vars.size(); j-- > 0;) {
                std::uint64_t d = dom[atom.vars[j]];
                tuple[j] = Value(1 + rem % d);
                rem /= d;
            }
            flat.insert(flat.end(), tuple.begin(), tuple.end());
        }
        rels.push_back(Relation::from_flat(atom.relation, std::move(schema), std::move(flat)));
    }
    return Database::from_relations(q, std::move(rels));
}

namespace {

std::uint64_t integer_root_ceil(std::uint64_t size, int arity) {
    if (size == 0) return 0;
    std::uint64_t r = std::uint64_t(std::ceil(std::pow(double(size), 1.0 / arity)));
    auto pow_ok = [&](std::uint64_t base) {
        std::uint64_t acc = 1;
        for (int i = 0; i < arity; ++i) {
            if (base != 0 && acc > UINT64_MAX / base) return true;  // certainly >= size
            acc *= base;
        }
        return acc >= size;
    };
    while (r > 1 && pow_ok(r - 1)) --r;
    while (!pow_ok(r)) ++r;
    return r;
}

}  // namespace

Database gen_random(const Query& q, const std::vector<std::uint64_t>& sizes,
                    std::uint64_t seed) {
    if (sizes.size() != q.atoms().size())
        fail(Errc::internal, "gen_random: one size per atom required");
    SplitMix64 root(seed);

    std::vector<Relation> rels;
    for (std::size_t f = 0; f < q.atoms().size(); ++f) {
        const Atom& atom = q.atoms()[f];
        const int arity = static_cast<int>(atom.vars.size());
        std::uint64_t size = sizes[f];
        std::uint64_t dom = std::max<std::uint64_t>(16, 2 * integer_root_ceil(size, arity));

        std::uint64_t space = 1;
        bool overflow = false;
        for (int i = 0; i < arity; ++i) {
            if (space > UINT64_MAX / dom) overflow = true;
            if (!overflow) space *= dom;
        }
        if (!overflow && size > space)
            fail(Errc::internal, "gen_random: requested size exceeds the domain product");

        // Floyd's distinct sampler over linear indices [0, space).
        SplitMix64 rng = root.split(f);
        std::set<std::uint64_t> chosen;
        if (!overflow && size == space) {
            for (std::uint64_t i = 0; i < space; ++i) chosen.insert(i);
        } else {
            for (std::uint64_t j = space - size; j < space; ++j) {
                std::uint64_t t = rng.bounded(j + 1);
                if (!chosen.insert(t).second) chosen.insert(j);
            }
        }

        std::vector<AttributeName> schema;
        for (int v : atom.vars) schema.push_back(q.vars().name(v));
        std::vector<Value> flat;
        flat.reserve(size * arity);
        std::vector<Value> tuple(arity);
        for (std::uint64_t idx : chosen) {
            std::uint64_t rem = idx;
            for (int j = arity; j-- > 0;) {
                tuple[j] = Value(1 + rem % dom);
                rem /= dom;
            }
            flat.insert(flat.end(), tuple.begin(), tuple.end());
        }
        rels.push_back(Relation::from_flat(atom.relation, std::move(schema), std::move(flat)));
    }
    return Database::from_relations(q, std::move(rels));
}

Database gen_write(const GenSpec& spec, const Query& q, const std::string& dir) {
    Database db = [&] {
        switch (spec.kind) {
            case GenSpec::Kind::grid_triangle: return gen_grid_triangle(spec.m);
            case GenSpec::Kind::agm_tight: return gen_agm_tight(q, spec.n_value);
            case GenSpec::Kind::random: return gen_random(q, spec.sizes, spec.seed);
        }
        fail(Errc::internal, "gen_write: unknown kind");
    }();

    const Query& used = spec.kind == GenSpec::Kind::grid_triangle ? triangle_query() : q;
    std::filesystem::create_directories(dir);
    std::set<std::string> written;
    for (std::size_t f = 0; f < used.atoms().size(); ++f) {
        const std::string& name = used.atoms()[f].relation;
        if (!written.insert(name).second) continue;
        write_csv(db.atom_relation(static_cast<int>(f)),
                  (std::filesystem::path(dir) / (name + ".csv")).string(), &db.dict());
    }

    nlohmann::ordered_json manifest;
    switch (spec.kind) {
        case GenSpec::Kind::grid_triangle:
            manifest["kind"] = "grid-triangle";
            manifest["m"] = spec.m;
            break;
        case GenSpec::Kind::agm_tight:
            manifest["kind"] = "agm-tight";
            manifest["n"] = spec.n_value;
            break;
        case GenSpec::Kind::random:
            manifest["kind"] = "random";
            manifest["sizes"] = spec.sizes;
            break;
    }
    manifest["seed"] = spec.seed;
    manifest["query"] = used.to_string();
    std::ofstream out(std::filesystem::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
    return db;
}

JointDist uniform_over(const Relation& rel) {
    JointDist dist;
    dist.n = rel.arity();
    if (rel.empty()) fail(Errc::internal, "uniform_over: empty relation");
    double p = 1.0 / double(rel.size());
    for (std::size_t r = 0; r < rel.size(); ++r) {
        auto row = rel.row(r);
        dist.entries.push_back({std::vector<Value>(row.begin(), row.end()), p});
    }
    return dist;
}

EntropyResult empirical_entropy(const JointDist& joint, VarSet s) {
    double total = 0.0;
    for (const auto& [tuple, p] : joint.entries) {
        if (p < 0) fail(Errc::internal, "empirical_entropy: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        fail(Errc::internal, "empirical_entropy: probabilities must sum to 1");

    std::map<std::vector<Value>, double> marginal;
    for (const auto& [tuple, p] : joint.entries) {
        if (p == 0) continue;
        std::vector<Value> key;
        for (int v : varset_members(s)) key.push_back(tuple.at(v));
        marginal[key] += p;
    }

    EntropyResult res;
    for (const auto& [key, p] : marginal)
        if (p > 0) res.bits -= p * std::log2(p);
    res.log2_support = std::log2(double(std::max<std::size_t>(marginal.size(), 1)));
    return res;
}

}  // namespace wcoj
