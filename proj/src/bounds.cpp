#include "wcoj/bounds.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <mpfr.h>

#include "wcoj/error.hpp"

namespace wcoj {

namespace {

// Deterministic enumeration of all pairs (X, Y) with X a proper subset of Y.
struct PairSpace {
    std::vector<std::pair<VarSet, VarSet>> pairs;
    std::map<std::pair<VarSet, VarSet>, int> index;

    explicit PairSpace(int n) {
        VarSet full = full_set(n);
        for (VarSet y = 1; y <= full; ++y)
            for (VarSet x = 0; x < y; ++x)
                if (subset_of(x, y)) {
                    index[{x, y}] = static_cast<int>(pairs.size());
                    pairs.emplace_back(x, y);
                }
    }
    int at(VarSet x, VarSet y) const { return index.at({x, y}); }
    std::size_t size() const { return pairs.size(); }
};

// Ordered elemental crossing pairs (S+i, S+j), i != j. Every submodularity
// inequality is a nonnegative combination of elemental ones, so restricting
// the xi columns to this family never changes the dual optimum, and any
// solution extends to the full pair space by zero padding.
std::vector<std::pair<VarSet, VarSet>> elemental_crossing_pairs(int n) {
    std::vector<std::pair<VarSet, VarSet>> out;
    VarSet full = full_set(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            VarSet rest = full & ~var_bit(i) & ~var_bit(j);
            for (VarSet s = rest;; s = (s - 1) & rest) {
                out.emplace_back(s | var_bit(i), s | var_bit(j));
                if (s == 0) break;
            }
        }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

AgmResult agm_bound(const Hypergraph& h, const std::vector<LogStat>& stats) {
    if (stats.size() != h.edges.size())
        fail(Errc::internal, "agm_bound: one statistic per edge required");

    AgmResult res;
    for (int v = 0; v < h.n; ++v) {
        bool covered = false;
        for (const auto& e : h.edges) covered = covered || var_in(e, v);
        if (!covered) {
            res.status = BoundStatus::unbounded;
            return res;
        }
    }

    LpProblem lp(false);
    for (std::size_t f = 0; f < h.edges.size(); ++f) lp.add_var(stats[f].log2);
    for (int v = 0; v < h.n; ++v) {
        int row = lp.add_constraint(Sense::ge, Rat(1));
        for (std::size_t f = 0; f < h.edges.size(); ++f)
            if (var_in(h.edges[f], v)) lp.add_coeff(row, static_cast<int>(f), Rat(1));
    }
    auto sol = lp.solve();
    if (sol.status != LpStatus::optimal)
        fail(Errc::internal, "agm_bound: cover LP did not solve");
    res.log2_bound = sol.value;
    res.cover.weight = sol.primal;
    return res;
}

ModularResult modular_bound(const ConstraintSet& dc, int n) {
    ModularResult res;
    if (bound_closure(dc, n) != full_set(n)) {
        res.status = BoundStatus::unbounded;
        return res;
    }
    res.acyclic = topological_order(dc, n).acyclic;

    LpProblem lp(true);
    for (int i = 0; i < n; ++i) lp.add_var(Rat(1));
    for (const auto& c : dc.items()) {
        int row = lp.add_constraint(Sense::le, LogStat::of(c.bound).log2);
        for (int i : varset_members(c.delta())) lp.add_coeff(row, i, Rat(1));
    }
    auto sol = lp.solve();
    if (sol.status == LpStatus::unbounded) {
        res.status = BoundStatus::unbounded;
        return res;
    }
    if (sol.status != LpStatus::optimal) fail(Errc::internal, "modular_bound: LP did not solve");
    res.log2_bound = sol.value;
    res.primal = sol.primal;
    res.dual = sol.dual;
    return res;
}

PolymatroidResult polymatroid_bound(const ConstraintSet& dc, int n) {
    PolymatroidResult res;
    if (n > 10) {
        res.status = BoundStatus::size_limit;
        return res;
    }
    if (bound_closure(dc, n) != full_set(n)) {
        res.status = BoundStatus::unbounded;
        return res;
    }

    const VarSet full = full_set(n);
    // Variable s-1 holds h(S) for nonempty S; h(empty) = 0 implicitly.
    LpProblem lp(true);
    for (VarSet s = 1; s <= full; ++s) lp.add_var(s == full ? Rat(1) : Rat(0));
    auto var_of = [](VarSet s) { return static_cast<int>(s) - 1; };

    for (const auto& c : dc.items()) {
        int row = lp.add_constraint(Sense::le, LogStat::of(c.bound).log2);
        lp.add_coeff(row, var_of(c.y), Rat(1));
        if (c.x != 0) lp.add_coeff(row, var_of(c.x), Rat(-1));
    }
    // Elemental submodularity: h(S+i) + h(S+j) >= h(S+i+j) + h(S), written as
    // a <= row so the LP starts from a feasible slack basis.
    for (int i = 0; i < n; ++i) {
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
    }
    // Elemental monotonicity at the top: h([n] - i) <= h([n]).
    for (int i = 0; i < n; ++i) {
        VarSet sub = full & ~var_bit(i);
        if (sub == 0) continue;
        int row = lp.add_constraint(Sense::le, Rat(0));
        lp.add_coeff(row, var_of(sub), Rat(1));
        lp.add_coeff(row, var_of(full), Rat(-1));
    }

    auto sol = lp.solve();
    if (sol.status == LpStatus::unbounded) {
        res.status = BoundStatus::unbounded;
        return res;
    }
    if (sol.status != LpStatus::optimal)
        fail(Errc::internal, "polymatroid_bound: LP did not solve");
    res.log2_bound = sol.value;
    res.h = SetFunc(n);
    for (VarSet s = 1; s <= full; ++s) res.h[s] = sol.primal[var_of(s)];
    return res;
}

namespace {

// Shared construction for the inflow dual LP. Layout of LP variables:
//   [0, ndelta)                     delta, one per DC entry (omitted when fixed)
//   then one var per elemental pair xi
//   then two vars per alpha pair    alpha = ap - an
//
// Two value-preserving reductions keep the LP small: xi columns cover only
// elemental submodularities (they generate all of them), and alpha columns
// cover only single-step pairs plus the pairs that actually carry delta
// weight (conservation for any other pair pins a variable nothing reads).
// Inflow rows left with no terms at all are trivially satisfied and dropped.
struct InflowLp {
    LpProblem lp{false};
    PairSpace space;
    std::vector<std::pair<VarSet, VarSet>> xis;
    std::vector<std::pair<VarSet, VarSet>> alphas;  // X nonempty
    int ndelta = 0;
    int xi_base = 0, alpha_base = 0;

    InflowLp(int n, const ConstraintSet* dc, const std::vector<CertTerm>* fixed_delta,
             bool penalize_mass)
        : space(n) {
        const VarSet full = full_set(n);

        std::vector<Rat> fixed_contrib(space.size(), Rat(0));
        if (fixed_delta) {
            for (const auto& t : *fixed_delta) {
                if (!proper_subset_of(t.x, t.y) || !subset_of(t.y, full))
                    fail(Errc::internal, "check_shannon_flow: malformed delta term");
                if (t.weight < 0) fail(Errc::internal, "check_shannon_flow: negative delta");
                Rat w = t.weight;
                w.canonicalize();
                fixed_contrib[space.at(t.x, t.y)] += w;
            }
        }

        if (dc) {
            ndelta = static_cast<int>(dc->size());
            // The dual stage prices delta by the statistics; the certificate
            // stage includes delta in the mass objective so zero-cost terms
            // (FDs) carry no junk weight.
            for (const auto& c : dc->items())
                lp.add_var(penalize_mass ? Rat(1) : LogStat::of(c.bound).log2);
        }
        xi_base = lp.num_vars();
        xis = elemental_crossing_pairs(n);
        for (std::size_t k = 0; k < xis.size(); ++k) lp.add_var(penalize_mass ? Rat(1) : Rat(0));

        alpha_base = lp.num_vars();
        {
            std::set<std::pair<VarSet, VarSet>> keep;
            for (const auto& [x, y] : space.pairs)
                if (x != 0 && varset_size(y & ~x) == 1) keep.insert({x, y});
            if (dc)
                for (const auto& c : dc->items())
                    if (c.x != 0) keep.insert({c.x, c.y});
            if (fixed_delta)
                for (const auto& t : *fixed_delta)
                    if (t.x != 0) keep.insert({t.x, t.y});
            alphas.assign(keep.begin(), keep.end());
        }
        for (std::size_t k = 0; k < alphas.size(); ++k) {
            lp.add_var(penalize_mass ? Rat(1) : Rat(0));  // positive part
            lp.add_var(penalize_mass ? Rat(1) : Rat(0));  // negative part
        }

        // Gather the terms of every inflow row before materializing rows.
        std::vector<std::vector<std::pair<int, int>>> terms(space.size());
        if (dc) {
            for (int k = 0; k < ndelta; ++k) {
                const auto& c = dc->items()[k];
                terms[space.at(c.x, c.y)].emplace_back(k, +1);
            }
        }
        for (std::size_t k = 0; k < xis.size(); ++k) {
            auto [i, j] = xis[k];
            int var = xi_base + static_cast<int>(k);
            terms[space.at(j, i | j)].emplace_back(var, +1);  // +xi_{I,J} in row (J, I u J)
            terms[space.at(i & j, i)].emplace_back(var, -1);  // -xi_{I,J} in row (I n J, I)
        }
        for (std::size_t k = 0; k < alphas.size(); ++k) {
            auto [x, y] = alphas[k];
            int ap = alpha_base + 2 * static_cast<int>(k);
            int an = ap + 1;
            for (auto [p, sign] : {std::pair<int, int>{space.at(x, y), +1},
                                   {space.at(0, y), -1},
                                   {space.at(0, x), +1}}) {
                terms[p].emplace_back(ap, sign);
                terms[p].emplace_back(an, -sign);
            }
        }

        // inflow(empty, [n]) >= 1, every other inflow >= 0 (emitted negated
        // as <= rows so only one artificial is ever needed).
        for (std::size_t p = 0; p < space.size(); ++p) {
            auto [x, y] = space.pairs[p];
            bool target = (x == 0 && y == full);
            if (!target && terms[p].empty()) continue;  // 0 + delta >= 0 always holds
            Rat rhs = (target ? Rat(1) : Rat(0)) - fixed_contrib[p];
            int row = target ? lp.add_constraint(Sense::ge, rhs)
                             : lp.add_constraint(Sense::le, -rhs);
            for (auto [var, sign] : terms[p])
                lp.add_coeff(row, var, Rat(target ? sign : -sign));
        }
    }
};

}  // namespace

ShannonDualResult shannon_flow_dual(const ConstraintSet& dc, int n) {
    ShannonDualResult res;
    if (n > 6) {
        res.status = BoundStatus::size_limit;
        return res;
    }
    if (bound_closure(dc, n) != full_set(n)) {
        res.status = BoundStatus::unbounded;
        return res;
    }

    // Strong duality pins the optimal value to the polymatroid LP, which is
    // far smaller than the pair-space dual; only the certificate needs the
    // dual LP itself.
    auto primal = polymatroid_bound(dc, n);
    if (primal.status != BoundStatus::ok)
        fail(Errc::internal, "shannon_flow_dual: primal bound did not solve");
    res.value = primal.log2_bound;

    // At the optimal value, minimize total delta/xi/alpha mass so the
    // certificate is sparse and canonical.
    InflowLp stage2(n, &dc, nullptr, true);
    {
        int row = stage2.lp.add_constraint(Sense::le, res.value);
        for (int k = 0; k < stage2.ndelta; ++k)
            stage2.lp.add_coeff(row, k, LogStat::of(dc.items()[k].bound).log2);
    }
    auto sol2 = stage2.lp.solve();
    if (sol2.status != LpStatus::optimal)
        fail(Errc::internal, "shannon_flow_dual: certificate stage did not solve");

    res.cert.value_log2 = res.value;
    for (int k = 0; k < stage2.ndelta; ++k) {
        if (sol2.primal[k] == 0) continue;
        const auto& c = dc.items()[k];
        res.cert.delta.push_back({c.x, c.y, sol2.primal[k]});
    }
    for (std::size_t k = 0; k < stage2.xis.size(); ++k) {
        const Rat& w = sol2.primal[stage2.xi_base + k];
        if (w != 0) res.cert.xi.push_back({stage2.xis[k].first, stage2.xis[k].second, w});
    }
    for (std::size_t k = 0; k < stage2.alphas.size(); ++k) {
        Rat w = sol2.primal[stage2.alpha_base + 2 * k] - sol2.primal[stage2.alpha_base + 2 * k + 1];
        if (w != 0) res.cert.alpha.push_back({stage2.alphas[k].first, stage2.alphas[k].second, w});
    }
    return res;
}

bool check_shannon_flow(const std::vector<CertTerm>& delta, int n) {
    for (const auto& t : delta)
        if (t.weight < 0) fail(Errc::internal, "check_shannon_flow: delta must be nonnegative");
    InflowLp lp(n, nullptr, &delta, true);
    auto sol = lp.lp.solve();
    if (sol.status == LpStatus::infeasible) return false;
    if (sol.status != LpStatus::optimal)
        fail(Errc::internal, "check_shannon_flow: feasibility LP did not solve");
    return true;
}

PolymatroidCheck check_polymatroid(const SetFunc& h, const Rat& tolerance) {
    PolymatroidCheck res;
    auto violate = [&](std::string what) {
        res.ok = false;
        res.violated = std::move(what);
        return res;
    };
    if (h.value.empty() || !(h.value[0] >= -tolerance && h.value[0] <= tolerance))
        return violate("h(empty) != 0");

    const int n = h.n;
    const VarSet full = full_set(n);
    for (int i = 0; i < n; ++i) {
        VarSet sub = full & ~var_bit(i);
        if (h[sub] > h[full] + tolerance)
            return violate("monotonicity violated at i=" + std::to_string(i + 1));
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            VarSet rest = full & ~var_bit(i) & ~var_bit(j);
            for (VarSet s = rest;; s = (s - 1) & rest) {
                Rat lhs = h[s | var_bit(i) | var_bit(j)] + h[s];
                Rat rhs = h[s | var_bit(i)] + h[s | var_bit(j)];
                if (lhs > rhs + tolerance)
                    return violate("submodularity violated at i=" + std::to_string(i + 1) +
                                   " j=" + std::to_string(j + 1) + " S=" + std::to_string(s));
                if (s == 0) break;
            }
        }
    }
    return res;
}

namespace {

struct Mpf {
    mpfr_t x;
    explicit Mpf(long prec = 128) { mpfr_init2(x, prec); }
    ~Mpf() { mpfr_clear(x); }
    Mpf(const Mpf&) = delete;
    Mpf& operator=(const Mpf&) = delete;
};

}  // namespace

FriedgutResult check_friedgut(const Query& q, const Database& db, const WeightFunction& w,
                              const EdgeCover& cover) {
    const auto& atoms = q.atoms();
    if (w.size() != atoms.size() || cover.weight.size() != atoms.size())
        fail(Errc::internal, "check_friedgut: need one weight map and cover entry per atom");
    for (std::size_t f = 0; f < atoms.size(); ++f) {
        if (cover.weight[f] < 0) fail(Errc::internal, "check_friedgut: negative cover weight");
        for (const auto& [t, wt] : w[f])
            if (wt < 0) fail(Errc::internal, "check_friedgut: negative weight");
    }
    for (int v = 0; v < q.num_vars(); ++v) {
        Rat total(0);
        for (std::size_t f = 0; f < atoms.size(); ++f)
            if (var_in(atoms[f].var_set, v)) total += cover.weight[f];
        if (total < 1) fail(Errc::internal, "check_friedgut: cover does not cover variable " +
                                                q.vars().name(v));
    }

    // Enumerate Q(db) by a left-deep join over the atoms.
    Relation out = db.atom_relation(0);
    for (std::size_t f = 1; f < atoms.size(); ++f) out = hash_join(out, db.atom_relation(f));

    std::vector<int> out_col_of_var(q.num_vars(), -1);
    for (int v = 0; v < q.num_vars(); ++v)
        out_col_of_var[v] = out.column_index(q.vars().name(v));

    Mpf lhs, term, wf, exponent;
    mpfr_set_zero(lhs.x, 1);
    for (std::size_t r = 0; r < out.size(); ++r) {
        mpfr_set_ui(term.x, 1, MPFR_RNDN);
        bool zero = false;
        for (std::size_t f = 0; f < atoms.size() && !zero; ++f) {
            std::vector<Value> key;
            for (int v : atoms[f].vars) key.push_back(out.at(r, out_col_of_var[v]));
            auto it = w[f].find(key);
            // Convention 0^0 = 0: a zero weight kills the whole term.
            if (it == w[f].end() || it->second == 0) {
                zero = true;
                break;
            }
            mpfr_set_q(wf.x, it->second.get_mpq_t(), MPFR_RNDN);
            mpfr_set_q(exponent.x, cover.weight[f].get_mpq_t(), MPFR_RNDN);
            mpfr_pow(wf.x, wf.x, exponent.x, MPFR_RNDN);
            mpfr_mul(term.x, term.x, wf.x, MPFR_RNDN);
        }
        if (!zero) mpfr_add(lhs.x, lhs.x, term.x, MPFR_RNDN);
    }

    Mpf rhs;
    mpfr_set_ui(rhs.x, 1, MPFR_RNDN);
    for (std::size_t f = 0; f < atoms.size(); ++f) {
        Rat sum(0);
        for (const auto& [t, wt] : w[f]) {
            if (static_cast<int>(t.size()) != static_cast<int>(atoms[f].vars.size()))
                fail(Errc::internal, "check_friedgut: weight tuple arity mismatch");
            std::span<const Value> key(t.data(), t.size());
            if (db.atom_relation(f).contains(key)) sum += wt;
        }
        mpfr_set_q(wf.x, sum.get_mpq_t(), MPFR_RNDN);
        mpfr_set_q(exponent.x, cover.weight[f].get_mpq_t(), MPFR_RNDN);
        mpfr_pow(wf.x, wf.x, exponent.x, MPFR_RNDN);
        mpfr_mul(rhs.x, rhs.x, wf.x, MPFR_RNDN);
    }

    FriedgutResult res;
    res.lhs = mpfr_get_d(lhs.x, MPFR_RNDN);
    res.rhs = mpfr_get_d(rhs.x, MPFR_RNDN);
    if (mpfr_zero_p(lhs.x)) {
        res.holds = true;
        return res;
    }
    if (mpfr_zero_p(rhs.x)) {
        res.holds = false;
        return res;
    }
    // Log-scale comparison with slack 2^-60.
    Mpf llog, rlog;
    mpfr_log2(llog.x, lhs.x, MPFR_RNDN);
    mpfr_log2(rlog.x, rhs.x, MPFR_RNDN);
    Mpf slack;
    mpfr_set_ui_2exp(slack.x, 1, -60, MPFR_RNDN);
    mpfr_add(rlog.x, rlog.x, slack.x, MPFR_RNDN);
    res.holds = mpfr_lessequal_p(llog.x, rlog.x);
    return res;
}

}  // namespace wcoj
