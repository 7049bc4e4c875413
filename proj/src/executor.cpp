#include "wcoj/executor.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <memory>

#include "wcoj/error.hpp"

namespace wcoj {

std::vector<int> compatible_order(const ConstraintSet& dc, const Query& q) {
    auto topo = topological_order(dc, q.num_vars());
    if (!topo.acyclic) {
        std::string cycle;
        for (std::size_t i = 0; i <= topo.witness.size(); ++i) {
            if (i) cycle += " -> ";
            cycle += q.vars().name(topo.witness[i % topo.witness.size()]);
        }
        fail(Errc::incompatible,
             "constraints are cyclic (" + cycle + "); run acyclicize first");
    }
    return topo.order;
}

namespace {

bool order_compatible(const ConstraintSet& dc, const std::vector<int>& order, int n) {
    std::vector<int> pos(n, -1);
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = static_cast<int>(i);
    for (const auto& c : dc.items())
        for (int x : varset_members(c.x))
            for (int y : varset_members(c.delta()))
                if (pos[x] >= pos[y]) return false;
    return true;
}

}  // namespace

ExecResult backtrack_join(const Query& q, const ConstraintSet& dc, const std::vector<int>& order,
                          const Database& db) {
    const int n = q.num_vars();
    if (static_cast<int>(order.size()) != n)
        fail(Errc::incompatible, "variable order must list every variable once");
    {
        std::vector<bool> seen(n, false);
        for (int v : order) {
            if (v < 0 || v >= n || seen[v])
                fail(Errc::incompatible, "variable order must list every variable once");
            seen[v] = true;
        }
    }
    if (!order_compatible(dc, order, n))
        fail(Errc::incompatible, "variable order is not compatible with the constraints");

    ExecResult res;
    res.intersect_probes_per_level.assign(n, 0);
    res.view_probes_per_level.assign(n, 0);
    Counters& counters = res.counters;

    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[order[i]] = i;

    // Per constraint: the guard's projection onto Y, columns sorted by the
    // variable order so every search level sees its bound variables as a
    // sorted prefix followed by the level's own column.
    struct Access {
        std::shared_ptr<Relation> proj;
        std::vector<int> y_vars_in_order;  // projection columns as variable ids
    };
    std::vector<Access> access(dc.size());
    std::map<std::pair<int, VarSet>, std::shared_ptr<Relation>> proj_cache;
    for (std::size_t k = 0; k < dc.size(); ++k) {
        const auto& c = dc.items()[k];
        int atom = q.guard_atom(c.guard, c.y);
        if (atom < 0)
            fail(Errc::parse, "constraint guard '" + c.guard + "' has no atom covering Y");

        std::vector<int> yvars = varset_members(c.y);
        std::sort(yvars.begin(), yvars.end(), [&](int a, int b) { return pos[a] < pos[b]; });
        auto key = std::make_pair(atom, c.y);
        auto it = proj_cache.find(key);
        if (it == proj_cache.end()) {
            std::vector<AttributeName> names;
            for (int v : yvars) names.push_back(q.vars().name(v));
            auto proj = std::make_shared<Relation>(project(db.atom_relation(atom), names));
            counters.emitted += proj->size();
            it = proj_cache.emplace(key, std::move(proj)).first;
        }
        access[k] = {it->second, std::move(yvars)};
    }

    // Constraints contributing candidates at each level.
    std::vector<std::vector<int>> constraints_at_level(n);
    for (std::size_t k = 0; k < dc.size(); ++k)
        for (int v : varset_members(dc.items()[k].delta()))
            constraints_at_level[pos[v]].push_back(static_cast<int>(k));
    for (int i = 0; i < n; ++i)
        if (constraints_at_level[i].empty())
            fail(Errc::unbounded, "variable " + q.vars().name(order[i]) +
                                      " is introduced by no constraint; the bound is infinite");

    // Iterative depth-first search with one candidate list per level.
    std::vector<Value> assignment(n, 0);  // indexed by variable id
    std::vector<std::vector<Value>> candidates(n);
    std::vector<std::size_t> cursor(n, 0);
    std::vector<Value> out_flat;

    auto fill_candidates = [&](int level) {
        std::vector<UnaryView> views;
        Counters view_counters;
        for (int k : constraints_at_level[level]) {
            const Access& acc = access[k];
            std::vector<Value> prefix;
            for (int v : acc.y_vars_in_order) {
                if (pos[v] >= level) break;
                prefix.push_back(assignment[v]);
            }
            auto pv = prefix_select(*acc.proj, prefix, &view_counters);
            views.push_back(UnaryView::over(pv));
        }
        res.view_probes_per_level[level] += view_counters.probes;
        counters.probes += view_counters.probes;
        counters.comparisons += view_counters.comparisons;

        bool any_empty = false;
        for (const auto& v : views) any_empty = any_empty || v.at_end();
        if (any_empty) {
            candidates[level].clear();
            return;
        }
        Counters isect;
        candidates[level] = intersect_views(std::move(views), &isect);
        res.intersect_probes_per_level[level] += isect.probes;
        counters.probes += isect.probes;
        counters.comparisons += isect.comparisons;
    };

    const auto& atoms = q.atoms();
    auto emit_if_output = [&]() {
        std::vector<Value> key;
        for (std::size_t f = 0; f < atoms.size(); ++f) {
            key.clear();
            for (int v : atoms[f].vars) key.push_back(assignment[v]);
            if (!db.atom_relation(static_cast<int>(f)).contains(key, &counters)) return;
        }
        for (int v = 0; v < n; ++v) out_flat.push_back(assignment[v]);
        counters.emitted += 1;
    };

    int level = 0;
    fill_candidates(0);
    while (level >= 0) {
        if (cursor[level] >= candidates[level].size()) {
            cursor[level] = 0;
            --level;
            if (level >= 0) ++cursor[level];
            continue;
        }
        assignment[order[level]] = candidates[level][cursor[level]];
        if (level + 1 == n) {
            emit_if_output();
            ++cursor[level];
            continue;
        }
        ++level;
        cursor[level] = 0;
        fill_candidates(level);
    }

    std::vector<AttributeName> schema;
    for (int v = 0; v < n; ++v) schema.push_back(q.vars().name(v));
    res.output = Relation::from_flat(q.head_name(), std::move(schema), std::move(out_flat));
    return res;
}

// --- heavy/light triangle -----------------------------------------------------

namespace {

// floor(sqrt(p/q)) for nonnegative rationals.
mpz_class floor_sqrt(const mpz_class& p, const mpz_class& q) {
    if (p == 0) return 0;
    mpz_class k = isqrt_ceil(p / q);
    while (k * k * q > p) k -= 1;
    while ((k + 1) * (k + 1) * q <= p) k += 1;
    return k;
}

}  // namespace

HeavyLightResult triangle_heavy_light(const Relation& r, const Relation& s, const Relation& t) {
    if (r.arity() != 2 || s.arity() != 2 || t.arity() != 2)
        fail(Errc::internal, "triangle_heavy_light: three binary relations required");
    // Attribute pattern R(A,B), S(B,C), T(A,C).
    const AttributeName& a = r.schema()[0];
    const AttributeName& b = r.schema()[1];
    if (s.schema()[0] != b || t.schema()[0] != a || s.schema()[1] != t.schema()[1])
        fail(Errc::internal, "triangle_heavy_light: schemas must form R(A,B), S(B,C), T(A,C)");

    HeavyLightResult res;
    Counters& counters = res.counters;

    if (t.empty()) {
        // theta is undefined; R join T is already empty.
        Relation rt = hash_join(r, t, &counters);
        res.output = semijoin(rt, s).renamed("triangle", rt.schema());
        return res;
    }

    // theta = sqrt(|R||S|/|T|); integer degrees compare identically against
    // floor(theta), and a half keeps "everything heavy" exact when theta < 1.
    mpz_class num = mpz_class(static_cast<unsigned long>(r.size())) *
                    mpz_class(static_cast<unsigned long>(s.size()));
    mpz_class den(static_cast<unsigned long>(t.size()));
    mpz_class theta_floor = floor_sqrt(num, den);
    Rat theta = theta_floor > 0 ? Rat(theta_floor) : Rat(1, 2);

    auto [heavy, light] = partition_by_degree(r, {a}, theta);
    counters.emitted += heavy.size() + light.size();

    Relation heavy_join = hash_join(heavy, s, &counters);   // (A,B) x (B,C) -> (A,B,C)
    res.heavy_join_size = heavy_join.size();
    Relation heavy_out = heavy_join.empty()
                             ? heavy_join
                             : semijoin(heavy_join, t);

    Relation light_join = hash_join(light, t, &counters);   // (A,B) x (A,C) -> (A,B,C)
    res.light_join_size = light_join.size();
    Relation light_out = light_join.empty() ? light_join : semijoin(light_join, s);

    // Union of the two branches. Column order already matches (A,B,C).
    std::vector<Value> flat;
    for (std::size_t i = 0; i < heavy_out.size(); ++i) {
        auto row = heavy_out.row(i);
        flat.insert(flat.end(), row.begin(), row.end());
    }
    for (std::size_t i = 0; i < light_out.size(); ++i) {
        auto row = light_out.row(i);
        flat.insert(flat.end(), row.begin(), row.end());
    }
    counters.emitted += heavy_out.size() + light_out.size();
    res.output = Relation::from_flat("triangle", heavy_join.schema(), std::move(flat));
    return res;
}

// --- proof-sequence interpreter -----------------------------------------------

// A decomposition step is interpreted as a genuine degree case split only
// when its two halves flow into separate outputs: then every tuple lands in
// the branch matching its degree class. Two other shapes occur in machine
// derived proofs and are unsound to partition: the halves may rejoin in one
// composition chain (the chain rule; partitioning would intersect two
// disjoint parts), or one half may simply go unused (its tuples would never
// be covered). Both of those fall back to the projection split
// (pi_X(rel), rel). Returns, per step index, whether to partition.
std::vector<bool> partition_mode_decompositions(const std::vector<ProofStep>& steps,
                                                VarSet full) {
    std::vector<bool> rejoins(steps.size(), false);
    std::vector<bool> half_reaches_output[2] = {std::vector<bool>(steps.size(), false),
                                                std::vector<bool>(steps.size(), false)};
    std::map<CondTerm, std::set<std::pair<std::size_t, int>>> tags;  // (dec index, half)
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const ProofStep& st = steps[i];
        switch (st.kind) {
            case StepKind::decomposition: {
                auto inherited = tags[CondTerm{st.a, 0}];
                auto heavy = inherited, light = inherited;
                heavy.insert({i, 0});
                light.insert({i, 1});
                tags[CondTerm{st.b, 0}] = std::move(heavy);
                tags[CondTerm{st.a, st.b}] = std::move(light);
                break;
            }
            case StepKind::submodularity:
                tags[CondTerm{st.a | st.b, st.b}] = tags[CondTerm{st.a, st.a & st.b}];
                break;
            case StepKind::composition: {
                auto merged = tags[CondTerm{st.a, st.b}];
                for (const auto& t : tags[CondTerm{st.b, 0}]) merged.insert(t);
                for (std::size_t d = 0; d < steps.size(); ++d)
                    if (merged.count({d, 0}) && merged.count({d, 1})) rejoins[d] = true;
                if (st.a == full)
                    for (const auto& [d, half] : merged) half_reaches_output[half][d] = true;
                tags[CondTerm{st.a, 0}] = std::move(merged);
                break;
            }
        }
    }
    std::vector<bool> partition(steps.size(), false);
    for (std::size_t d = 0; d < steps.size(); ++d)
        partition[d] =
            !rejoins[d] && half_reaches_output[0][d] && half_reaches_output[1][d];
    return partition;
}

std::vector<AnnotatedStep> annotate_with_thetas(const ProofSequence& seq,
                                                const ConstraintSet& dc, int n) {
    std::vector<AnnotatedStep> out;
    for (const auto& step : seq.steps) out.push_back({step, std::nullopt});

    // Only genuine case-split decompositions need a threshold.
    auto partition = partition_mode_decompositions(seq.steps, full_set(n));
    std::vector<std::size_t> split_decs;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i].step.kind == StepKind::decomposition && partition[i] &&
            !out[i].theta.has_value())
            split_decs.push_back(i);
    if (split_decs.empty()) return out;
    if (split_decs.size() > 1)
        fail(Errc::internal,
             "annotate_with_thetas: only single-split sequences are inferred; "
             "supply thetas explicitly");

    auto stat_of = [&](const CondTerm& term) -> std::optional<Rat> {
        for (const auto& c : dc.items())
            if (c.x == term.x && c.y == term.y) return LogStat::of(c.bound).log2;
        return std::nullopt;
    };

    // Track, per term, the branch's statistic product as an affine function
    // of the log threshold: value = base + coeff * theta_log. The heavy half
    // contributes N/theta (coeff -1), the light half theta (coeff +1).
    struct Affine {
        Rat base;
        int coeff = 0;
    };
    std::map<CondTerm, Affine> product;
    std::vector<Affine> branch_products;  // one entry per composition result
    const std::size_t dec_at = split_decs[0];

    for (std::size_t i = 0; i < out.size(); ++i) {
        const ProofStep& st = out[i].step;
        if (st.kind == StepKind::decomposition) {
            if (i != dec_at) continue;
            auto stat = stat_of(CondTerm{st.a, 0});
            if (!stat.has_value())
                fail(Errc::internal,
                     "annotate_with_thetas: decomposed term carries no statistic");
            product[CondTerm{st.b, 0}] = {*stat, -1};
            product[CondTerm{st.a, st.b}] = {Rat(0), +1};
        } else if (st.kind == StepKind::submodularity) {
            CondTerm src{st.a, st.a & st.b};
            auto it = product.find(src);
            if (it != product.end()) {
                Affine af = it->second;
                product.erase(it);
                product[CondTerm{st.a | st.b, st.b}] = af;
            }
        } else {
            CondTerm cond{st.a, st.b};
            CondTerm base{st.b, 0};
            auto itc = product.find(cond);
            auto itb = product.find(base);
            if (itc == product.end() && itb == product.end()) continue;
            Affine combined;
            if (itc != product.end()) {
                combined.base += itc->second.base;
                combined.coeff += itc->second.coeff;
            }
            if (itb != product.end()) {
                combined.base += itb->second.base;
                combined.coeff += itb->second.coeff;
            }
            if ((itc != product.end()) != (itb != product.end())) {
                // The partner term contributes its statistic when it has one.
                const CondTerm& partner = itc != product.end() ? base : cond;
                auto stat = stat_of(partner);
                if (stat.has_value()) combined.base += *stat;
            }
            if (itc != product.end()) product.erase(cond);
            if (itb != product.end()) product.erase(base);
            product[CondTerm{st.a, 0}] = combined;
            branch_products.push_back(combined);
        }
    }

    // Equalize the last heavy (coeff < 0) and light (coeff > 0) products.
    std::optional<Affine> heavy, light;
    for (const auto& af : branch_products) {
        if (af.coeff < 0) heavy = af;
        if (af.coeff > 0) light = af;
    }
    if (!heavy.has_value() || !light.has_value())
        fail(Errc::internal, "annotate_with_thetas: could not identify both branches");
    Rat theta_log = (heavy->base - light->base) / 2;

    mpz_class theta_int = theta_log >= 0 ? pow2_floor(theta_log) : 0;
    Rat theta = theta_int > 0 ? Rat(theta_int) : Rat(1, 2);
    out[dec_at].theta = theta;
    return out;
}

PandaResult panda_interpret(const Query& q, const Database& db, const ConstraintSet& dc,
                            const std::vector<AnnotatedStep>& seq) {
    const int n = q.num_vars();
    auto dual = shannon_flow_dual(dc, n);
    if (dual.status == BoundStatus::unbounded)
        fail(Errc::unbounded, "panda: the constraint set leaves the output unbounded");
    if (dual.status != BoundStatus::ok)
        fail(Errc::internal, "panda: dual certificate unavailable");

    ProofSequence proof;
    for (const auto& st : seq) proof.steps.push_back(st.step);
    auto valid = validate(proof, dual.cert.delta, n);
    if (!valid.ok)
        fail(Errc::incompatible, "panda: sequence does not validate against the optimal dual (" +
                                     valid.message + ")");

    PandaResult res;
    Counters& counters = res.counters;
    using RelPtr = std::shared_ptr<const Relation>;
    std::map<CondTerm, RelPtr> affiliation;
    std::vector<RelPtr> outputs;
    const CondTerm target{full_set(n), 0};

    std::vector<ProofStep> plain_steps;
    for (const auto& st : seq) plain_steps.push_back(st.step);
    auto partition_mode = partition_mode_decompositions(plain_steps, full_set(n));

    auto names_of = [&](VarSet s) { return q.vars().set_to_names(s); };
    auto note_intermediate = [&](const RelPtr& rel) {
        res.max_intermediate = std::max(res.max_intermediate, std::uint64_t(rel->size()));
    };
    auto affiliate = [&](const CondTerm& term, RelPtr rel) {
        if (term == target) outputs.push_back(rel);
        affiliation[term] = std::move(rel);
    };

    // Initial affiliations: each delta term is carried by its guard.
    for (const auto& t : dual.cert.delta) {
        if (t.weight == 0) continue;
        const DegreeConstraint* match = nullptr;
        for (const auto& c : dc.items())
            if (c.x == t.x && c.y == t.y) match = &c;
        if (!match)
            fail(Errc::incompatible, "panda: dual term has no matching constraint");
        int atom = q.guard_atom(match->guard, match->y);
        if (atom < 0)
            fail(Errc::parse, "panda: guard '" + match->guard + "' has no atom covering Y");
        affiliate(CondTerm{t.y, t.x}, std::make_shared<Relation>(db.atom_relation(atom)));
    }

    for (std::size_t step_idx = 0; step_idx < seq.size(); ++step_idx) {
        const AnnotatedStep& ann = seq[step_idx];
        const ProofStep& st = ann.step;
        switch (st.kind) {
            case StepKind::submodularity: {
                CondTerm src{st.a, st.a & st.b};
                auto it = affiliation.find(src);
                if (it == affiliation.end())
                    fail(Errc::incompatible, "panda: submodularity source term is unaffiliated");
                // The source keeps its affiliation: partial weight may remain.
                affiliate(CondTerm{st.a | st.b, st.b}, it->second);
                break;
            }
            case StepKind::decomposition: {
                CondTerm src{st.a, 0};
                auto it = affiliation.find(src);
                if (it == affiliation.end())
                    fail(Errc::incompatible, "panda: decomposition source term is unaffiliated");
                RelPtr rel = it->second;
                if (!partition_mode[step_idx]) {
                    // Chain-rule or one-sided usage: a degree partition would
                    // lose tuples. Split into the X-projection and the full
                    // relation instead.
                    auto proj =
                        std::make_shared<Relation>(project(*rel, names_of(st.b)));
                    counters.emitted += proj->size();
                    note_intermediate(proj);
                    affiliate(CondTerm{st.b, 0}, std::move(proj));
                    affiliate(CondTerm{st.a, st.b}, rel);
                } else {
                    if (!ann.theta.has_value())
                        fail(Errc::incompatible, "panda: decomposition step is missing theta");
                    auto [heavy, light] =
                        partition_by_degree(*rel, names_of(st.b), *ann.theta);
                    counters.emitted += heavy.size() + light.size();
                    auto heavy_ptr = std::make_shared<Relation>(std::move(heavy));
                    auto light_ptr = std::make_shared<Relation>(std::move(light));
                    note_intermediate(heavy_ptr);
                    note_intermediate(light_ptr);
                    affiliate(CondTerm{st.b, 0}, std::move(heavy_ptr));
                    affiliate(CondTerm{st.a, st.b}, std::move(light_ptr));
                }
                break;
            }
            case StepKind::composition: {
                CondTerm cond{st.a, st.b};
                CondTerm base{st.b, 0};
                auto itc = affiliation.find(cond);
                auto itb = affiliation.find(base);
                if (itc == affiliation.end() || itb == affiliation.end())
                    fail(Errc::incompatible, "panda: composition source term is unaffiliated");
                auto join = std::make_shared<Relation>(hash_join(*itb->second, *itc->second,
                                                                 &counters));
                note_intermediate(join);
                affiliate(CondTerm{st.a, 0}, std::move(join));
                break;
            }
        }
    }

    // Union every full-schema branch output, reordered to the head order,
    // then keep exactly the tuples present in every atom.
    std::vector<AttributeName> head;
    for (int v = 0; v < n; ++v) head.push_back(q.vars().name(v));
    std::vector<Value> flat;
    for (const auto& rel : outputs) {
        Relation ordered = project(*rel, head);
        for (std::size_t i = 0; i < ordered.size(); ++i) {
            auto row = ordered.row(i);
            flat.insert(flat.end(), row.begin(), row.end());
        }
    }
    Relation unioned = Relation::from_flat(q.head_name(), head, std::move(flat));

    std::vector<Value> key;
    std::vector<Value> final_flat;
    for (std::size_t i = 0; i < unioned.size(); ++i) {
        bool keep = true;
        for (std::size_t f = 0; f < q.atoms().size() && keep; ++f) {
            key.clear();
            for (int v : q.atoms()[f].vars) key.push_back(unioned.at(i, v));
            keep = db.atom_relation(static_cast<int>(f)).contains(key, &counters);
        }
        if (keep) {
            auto row = unioned.row(i);
            final_flat.insert(final_flat.end(), row.begin(), row.end());
            counters.emitted += 1;
        }
    }
    res.output = Relation::from_flat(q.head_name(), head, std::move(final_flat));
    return res;
}

ExecResult bruteforce_join(const Query& q, const Database& db) {
    ExecResult res;
    Relation acc = db.atom_relation(0);
    res.counters.emitted += acc.size();
    for (std::size_t f = 1; f < q.atoms().size(); ++f)
        acc = hash_join(acc, db.atom_relation(static_cast<int>(f)), &res.counters);

    std::vector<AttributeName> head;
    for (int v = 0; v < q.num_vars(); ++v) head.push_back(q.vars().name(v));
    res.output = project(acc, head).renamed(q.head_name(), head);
    return res;
}

}  // namespace wcoj
