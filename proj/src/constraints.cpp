#include "wcoj/constraints.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "wcoj/error.hpp"

namespace wcoj {

void ConstraintSet::add(DegreeConstraint c) {
    if (!proper_subset_of(c.x, c.y))
        fail(Errc::parse, "degree constraint needs X to be a proper subset of Y");
    if (c.bound == 0) fail(Errc::parse, "degree constraint bound must be positive");
    for (auto& existing : items_) {
        if (existing.x == c.x && existing.y == c.y) {
            if (c.bound < existing.bound) existing = c;
            return;
        }
    }
    items_.push_back(std::move(c));
    std::sort(items_.begin(), items_.end(), [](const auto& a, const auto& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t p = s.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

VarSet parse_var_list(const std::string& text, const Query& q, int lineno) {
    VarSet s = 0;
    if (text == "-") return s;
    for (const auto& name : split(text, ',')) {
        int idx = q.vars().index_of(name);
        if (idx < 0)
            fail(Errc::parse, "constraints line " + std::to_string(lineno) +
                                  ": unknown variable '" + name + "'");
        s |= var_bit(idx);
    }
    return s;
}

std::uint64_t parse_bound(const std::string& text, int lineno) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        fail(Errc::parse,
             "constraints line " + std::to_string(lineno) + ": bad bound '" + text + "'");
    errno = 0;
    std::uint64_t n = std::strtoull(text.c_str(), nullptr, 10);
    if (errno != 0 || n == 0)
        fail(Errc::parse,
             "constraints line " + std::to_string(lineno) + ": bad bound '" + text + "'");
    return n;
}

}  // namespace

ConstraintSet ConstraintSet::parse(const std::string& text, const Query& q) {
    ConstraintSet dc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind) || kind[0] == '#') continue;

        DegreeConstraint c;
        if (kind == "card") {
            std::string rel, bound;
            if (!(ls >> rel >> bound))
                fail(Errc::parse, "constraints line " + std::to_string(lineno) +
                                      ": expected 'card REL N'");
            int atom = -1;
            for (std::size_t i = 0; i < q.atoms().size(); ++i)
                if (q.atoms()[i].relation == rel) {
                    atom = static_cast<int>(i);
                    break;
                }
            if (atom < 0)
                fail(Errc::parse, "constraints line " + std::to_string(lineno) +
                                      ": unknown relation '" + rel + "'");
            c.x = 0;
            c.y = q.atoms()[atom].var_set;
            c.bound = parse_bound(bound, lineno);
            c.guard = rel;
        } else if (kind == "deg") {
            std::string rel, xs, arrow, ys, bound;
            if (!(ls >> rel >> xs >> arrow >> ys >> bound) || arrow != "->")
                fail(Errc::parse, "constraints line " + std::to_string(lineno) +
                                      ": expected 'deg REL X -> Y N'");
            c.x = parse_var_list(xs, q, lineno);
            c.y = parse_var_list(ys, q, lineno);
            c.bound = parse_bound(bound, lineno);
            c.guard = rel;
            if (q.guard_atom(rel, c.y) < 0)
                fail(Errc::parse, "constraints line " + std::to_string(lineno) + ": relation '" +
                                      rel + "' has no atom covering the Y variables");
        } else {
            fail(Errc::parse, "constraints line " + std::to_string(lineno) +
                                  ": unknown directive '" + kind + "'");
        }
        std::string extra;
        if (ls >> extra)
            fail(Errc::parse,
                 "constraints line " + std::to_string(lineno) + ": trailing content");
        dc.add(std::move(c));
    }
    return dc;
}

ConstraintSet ConstraintSet::parse_file(const std::string& path, const Query& q) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::parse, "cannot open constraints file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), q);
}

std::string ConstraintSet::to_text(const Query& q) const {
    std::string out;
    for (const auto& c : items_) {
        int atom = c.guard.empty() ? -1 : q.guard_atom(c.guard, c.y);
        if (c.is_cardinality() && atom >= 0 && q.atoms()[atom].var_set == c.y) {
            out += "card " + c.guard + " " + std::to_string(c.bound) + "\n";
            continue;
        }
        std::string xs = c.x == 0 ? "-" : "";
        bool first = true;
        for (int v : varset_members(c.x)) {
            if (!first) xs += ",";
            first = false;
            xs += q.vars().name(v);
        }
        std::string ys;
        first = true;
        for (int v : varset_members(c.y)) {
            if (!first) ys += ",";
            first = false;
            ys += q.vars().name(v);
        }
        out += "deg " + (c.guard.empty() ? std::string("?") : c.guard) + " " + xs + " -> " + ys +
               " " + std::to_string(c.bound) + "\n";
    }
    return out;
}

bool DependencyGraph::has_edge(int from, int to) const {
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(from, to));
}

DependencyGraph dependency_graph(const ConstraintSet& dc, int n) {
    DependencyGraph g;
    g.n = n;
    for (const auto& c : dc.items())
        for (int x : varset_members(c.x))
            for (int y : varset_members(c.delta())) g.edges.emplace_back(x, y);
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    g.adj.assign(n, {});
    for (auto [u, v] : g.edges) g.adj[u].push_back(v);
    return g;
}

namespace {

// First directed cycle found by DFS from the smallest vertex, neighbors in
// ascending order: deterministic witness extraction.
std::vector<int> find_cycle(const DependencyGraph& g) {
    std::vector<int> state(g.n, 0);  // 0 unseen, 1 on stack, 2 done
    std::vector<int> stack;

    std::function<std::vector<int>(int)> dfs = [&](int u) -> std::vector<int> {
        state[u] = 1;
        stack.push_back(u);
        for (int v : g.adj[u]) {
            if (state[v] == 1) {
                auto it = std::find(stack.begin(), stack.end(), v);
                return std::vector<int>(it, stack.end());
            }
            if (state[v] == 0) {
                auto cycle = dfs(v);
                if (!cycle.empty()) return cycle;
            }
        }
        stack.pop_back();
        state[u] = 2;
        return {};
    };

    for (int s = 0; s < g.n; ++s) {
        if (state[s] != 0) continue;
        auto cycle = dfs(s);
        if (!cycle.empty()) return cycle;
    }
    return {};
}

}  // namespace

TopoResult topological_order(const ConstraintSet& dc, int n) {
    DependencyGraph g = dependency_graph(dc, n);
    std::vector<int> indeg(n, 0);
    for (auto [u, v] : g.edges) ++indeg[v];

    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push(i);

    TopoResult res;
    while (!ready.empty()) {
        int u = ready.top();
        ready.pop();
        res.order.push_back(u);
        for (int v : g.adj[u])
            if (--indeg[v] == 0) ready.push(v);
    }
    if (static_cast<int>(res.order.size()) == n) {
        res.acyclic = true;
    } else {
        res.acyclic = false;
        res.order.clear();
        res.witness = find_cycle(g);
    }
    return res;
}

VarSet bound_closure(const ConstraintSet& dc, int n) {
    (void)n;
    VarSet closed = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& c : dc.items()) {
            if (subset_of(c.x, closed) && !subset_of(c.y, closed)) {
                closed |= c.y;
                changed = true;
            }
        }
    }
    return closed;
}

ValidationReport validate_db(const Query& q, const ConstraintSet& dc, const Database& db) {
    ValidationReport report;
    for (const auto& c : dc.items()) {
        int atom = q.guard_atom(c.guard, c.y);
        if (atom < 0)
            fail(Errc::parse, "constraint guard '" + c.guard + "' has no atom covering Y");
        const Relation& rel = db.atom_relation(atom);

        ValidationEntry entry;
        entry.constraint = c;
        entry.actual = degree(rel, q.vars().set_to_names(c.x), q.vars().set_to_names(c.y));
        entry.ok = entry.actual <= c.bound;
        report.pass = report.pass && entry.ok;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

// --- acyclicize --------------------------------------------------------------

namespace {

// Canonical encoding for memoization: sorted (x, y, bound) triples.
std::string encode(const ConstraintSet& dc) {
    std::string key;
    for (const auto& c : dc.items()) {
        key += std::to_string(c.x) + ":" + std::to_string(c.y) + ":" + std::to_string(c.bound) +
               ";";
    }
    return key;
}

}  // namespace

ConstraintSet acyclicize(const ConstraintSet& dc, int n, const BoundOracle& objective) {
    if (n > 8 || dc.size() > 12)
        fail(Errc::internal, "acyclicize: instance exceeds the n <= 8, |DC| <= 12 cap");
    VarSet all = full_set(n);
    if (bound_closure(dc, n) != all)
        fail(Errc::unbounded, "acyclicize: some variable is unbound, the output size bound is infinite");

    std::optional<ConstraintSet> best;
    std::optional<Rat> best_value;
    std::map<std::string, bool> seen;

    // Depth-first enumeration of single-variable removals (each move replaces
    // (X, Y, N) by (X, Y - {y}, N) and must keep every variable bound).
    std::function<void(const ConstraintSet&)> explore = [&](const ConstraintSet& cur) {
        auto key = encode(cur);
        if (seen.count(key)) return;
        seen[key] = true;

        if (topological_order(cur, n).acyclic) {
            auto value = objective(cur);
            // Strict improvement only: the first acyclic set found wins ties,
            // so an already-acyclic input comes back unchanged.
            if (value.has_value() && (!best_value.has_value() || *value < *best_value)) {
                best = cur;
                best_value = value;
            }
        }

        for (std::size_t i = 0; i < cur.items().size(); ++i) {
            const DegreeConstraint& c = cur.items()[i];
            for (int y : varset_members(c.delta())) {
                ConstraintSet next;
                for (std::size_t j = 0; j < cur.items().size(); ++j) {
                    if (j != i) {
                        next.add(cur.items()[j]);
                        continue;
                    }
                    DegreeConstraint replaced = c;
                    replaced.y = c.y & ~var_bit(y);
                    if (replaced.y != replaced.x) next.add(replaced);
                }
                if (bound_closure(next, n) != all) continue;
                explore(next);
            }
        }
    };
    explore(dc);

    if (!best.has_value())
        fail(Errc::unbounded, "acyclicize: no acyclic relaxation with a finite bound exists");
    return *best;
}

ConstraintSet simplify_fd(const ConstraintSet& dc, int n) {
    std::vector<DegreeConstraint> cards;
    std::vector<std::pair<int, int>> fd_edges;
    std::vector<DegreeConstraint> fd_constraints;
    for (const auto& c : dc.items()) {
        if (c.is_cardinality()) {
            cards.push_back(c);
        } else if (varset_size(c.x) == 1 && varset_size(c.y) == 2 && c.bound == 1) {
            int src = varset_members(c.x)[0];
            int dst = varset_members(c.delta())[0];
            fd_edges.emplace_back(src, dst);
            fd_constraints.push_back(c);
        } else {
            fail(Errc::internal,
                 "simplify_fd: input must contain only cardinality constraints and simple FDs");
        }
    }

    // Drop FD edges that lie on a directed cycle, largest (source, target)
    // first, until no cycles remain. Each removed equality is transitively
    // implied by the rest of its cycle, so the bound is unchanged.
    std::vector<std::size_t> order(fd_edges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return fd_edges[a] > fd_edges[b];
    });

    std::vector<bool> kept(fd_edges.size(), true);
    auto reaches = [&](int from, int to) {
        std::vector<bool> seen(n, false);
        std::vector<int> stack{from};
        seen[from] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            if (u == to) return true;
            for (std::size_t e = 0; e < fd_edges.size(); ++e) {
                if (!kept[e] || fd_edges[e].first != u) continue;
                if (!seen[fd_edges[e].second]) {
                    seen[fd_edges[e].second] = true;
                    stack.push_back(fd_edges[e].second);
                }
            }
        }
        return false;
    };
    for (std::size_t i : order) {
        kept[i] = false;
        if (!reaches(fd_edges[i].second, fd_edges[i].first)) kept[i] = true;
    }

    ConstraintSet out;
    for (const auto& c : cards) out.add(c);
    for (std::size_t i = 0; i < fd_edges.size(); ++i)
        if (kept[i]) out.add(fd_constraints[i]);
    return out;
}

}  // namespace wcoj
