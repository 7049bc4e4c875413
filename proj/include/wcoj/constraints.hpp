#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wcoj/database.hpp"
#include "wcoj/query.hpp"
#include "wcoj/rational.hpp"
#include "wcoj/varset.hpp"

namespace wcoj {

// Degree constraint (X, Y, N): for any binding of the X variables, the guard
// holds at most N distinct Y-bindings. X = {} makes it a cardinality
// constraint, N = 1 a functional dependency.
struct DegreeConstraint {
    VarSet x = 0;
    VarSet y = 0;
    std::uint64_t bound = 0;
    std::string guard;  // relation name; may be empty for synthetic sets

    VarSet delta() const { return y & ~x; }  // Y - X
    bool is_cardinality() const { return x == 0; }

    friend bool operator==(const DegreeConstraint& a, const DegreeConstraint& b) {
        return a.x == b.x && a.y == b.y && a.bound == b.bound;
    }
};

// A set of degree constraints with at most one entry per (X,Y) pair; adding a
// duplicate keeps the smaller bound.
class ConstraintSet {
public:
    void add(DegreeConstraint c);
    const std::vector<DegreeConstraint>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    // Text format, one constraint per line:
    //   card R 1000              cardinality of relation R's variables
    //   deg W A,C -> A,C,D 50    degree constraint guarded by W ('-' = empty X)
    // Lines starting with '#' are comments.
    static ConstraintSet parse(const std::string& text, const Query& q);
    static ConstraintSet parse_file(const std::string& path, const Query& q);
    std::string to_text(const Query& q) const;

    friend bool operator==(const ConstraintSet& a, const ConstraintSet& b) {
        return a.items_ == b.items_;
    }

private:
    std::vector<DegreeConstraint> items_;  // kept sorted by (x, y)
};

// Directed edges (x,y) for every constraint (X,Y) and (x,y) in X x (Y-X).
struct DependencyGraph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;           // deduplicated, sorted
    std::vector<std::vector<int>> adj;                // adjacency, ascending
    bool has_edge(int from, int to) const;
};

DependencyGraph dependency_graph(const ConstraintSet& dc, int n);

struct TopoResult {
    bool acyclic = false;
    std::vector<int> order;    // valid when acyclic; smallest-index tie break
    std::vector<int> witness;  // one directed cycle when not acyclic
};

TopoResult topological_order(const ConstraintSet& dc, int n);

// Least fixpoint of "X inside the set forces Y into the set".
VarSet bound_closure(const ConstraintSet& dc, int n);

// Per-constraint outcome of checking declared bounds against the instance.
struct ValidationEntry {
    DegreeConstraint constraint;
    std::uint64_t actual = 0;
    bool ok = false;
};
struct ValidationReport {
    bool pass = true;
    std::vector<ValidationEntry> entries;
};

ValidationReport validate_db(const Query& q, const ConstraintSet& dc, const Database& db);

// Objective oracle for acyclicize: log-scale bound of a constraint set, or
// nullopt when unbounded.
using BoundOracle = std::function<std::optional<Rat>(const ConstraintSet&)>;

// Relaxes constraints by single-variable removals until acyclic, searching
// exhaustively (with memoization) for the reachable acyclic set minimizing
// the oracle value. Requires a complete bound closure; throws
// Errc::unbounded otherwise. Capped at n <= 8 and |DC| <= 12.
ConstraintSet acyclicize(const ConstraintSet& dc, int n, const BoundOracle& objective);

// Cycle breaking for cardinality constraints plus simple FDs only: drops FD
// edges lying on directed cycles (largest edge first), preserving the
// polymatroid bound exactly. Throws on other constraint kinds.
ConstraintSet simplify_fd(const ConstraintSet& dc, int n);

}  // namespace wcoj
