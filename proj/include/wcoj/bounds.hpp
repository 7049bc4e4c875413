#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wcoj/constraints.hpp"
#include "wcoj/database.hpp"
#include "wcoj/lp.hpp"
#include "wcoj/query.hpp"
#include "wcoj/rational.hpp"
#include "wcoj/varset.hpp"

namespace wcoj {

// An input statistic carried on log scale. Exact for powers of two, else the
// smallest upper bound with denominator 2^32, so every computed bound stays a
// true upper bound.
struct LogStat {
    std::uint64_t raw = 1;
    Rat log2;

    static LogStat of(std::uint64_t n) { return LogStat{n, log2_upper(n)}; }
};

// A set function h : 2^[n] -> Q, indexed by variable-set mask. h[0] == 0.
struct SetFunc {
    int n = 0;
    std::vector<Rat> value;  // size 2^n

    explicit SetFunc(int n_ = 0) : n(n_), value(std::size_t(1) << n_, Rat(0)) {}
    Rat& operator[](VarSet s) { return value[s]; }
    const Rat& operator[](VarSet s) const { return value[s]; }
};

struct EdgeCover {
    std::vector<Rat> weight;  // one entry per hypergraph edge
};

enum class BoundStatus { ok, unbounded, size_limit };

struct AgmResult {
    BoundStatus status = BoundStatus::ok;
    Rat log2_bound;
    EdgeCover cover;
};

// Fractional-edge-cover LP over the hypergraph; stats are the per-edge
// cardinalities. Reports unbounded when some vertex lies in no edge.
AgmResult agm_bound(const Hypergraph& h, const std::vector<LogStat>& stats);

struct ModularResult {
    BoundStatus status = BoundStatus::ok;
    bool acyclic = true;  // when false the value is only valid as a bound for acyclic reasoning
    Rat log2_bound;
    std::vector<Rat> primal;  // v_i per variable
    std::vector<Rat> dual;    // delta per constraint, in dc.items() order
};

// max sum v_i subject to sum_{i in Y-X} v_i <= log2 N per constraint, v >= 0.
ModularResult modular_bound(const ConstraintSet& dc, int n);

struct PolymatroidResult {
    BoundStatus status = BoundStatus::ok;
    Rat log2_bound;
    SetFunc h;
};

// max h([n]) over polymatroids meeting the degree constraints, using the
// elemental monotonicity/submodularity description of the polymatroid cone.
// Capped at n <= 10 (the LP has 2^n variables).
PolymatroidResult polymatroid_bound(const ConstraintSet& dc, int n);

// One conditional term (Y|X) with a nonnegative weight.
struct CertTerm {
    VarSet x = 0, y = 0;
    Rat weight;
};
// Submodularity dual entry for the ordered crossing pair (I, J).
struct CertXi {
    VarSet i = 0, j = 0;
    Rat weight;
};
// Conservation dual entry for (X, Y), X nonempty; sign is meaningful.
struct CertAlpha {
    VarSet x = 0, y = 0;
    Rat weight;
};

struct DualCertificate {
    Rat value_log2;
    std::vector<CertTerm> delta;
    std::vector<CertXi> xi;
    std::vector<CertAlpha> alpha;
};

struct ShannonDualResult {
    BoundStatus status = BoundStatus::ok;
    Rat value;
    DualCertificate cert;
};

// The inflow-constrained dual LP over all pairs (X,Y), X proper subset of Y.
// Strong duality makes the value equal polymatroid_bound exactly. After
// minimizing <delta, n>, a second solve minimizes the total xi/alpha mass at
// the optimal value so certificates come out sparse and reproducible.
// Capped at n <= 6.
ShannonDualResult shannon_flow_dual(const ConstraintSet& dc, int n);

// True iff h([n]) <= <delta, h> for every polymatroid h: dual-LP feasibility
// search for a completing (xi, alpha).
bool check_shannon_flow(const std::vector<CertTerm>& delta, int n);

struct PolymatroidCheck {
    bool ok = true;
    std::string violated;  // description of the first failed constraint
};

// Verifies h(0)=0 plus the elemental monotonicity and submodularity
// inequalities, each up to `tolerance`.
PolymatroidCheck check_polymatroid(const SetFunc& h, const Rat& tolerance = Rat(0));

// Weight function per atom: tuple -> nonnegative weight; tuples absent from
// the map carry weight zero.
using WeightFunction = std::vector<std::map<std::vector<Value>, Rat>>;

struct FriedgutResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// Evaluates both sides of the weighted cover inequality
//   sum_{a in Q} prod_F w_F(a_F)^{d_F} <= prod_F (sum_t w_F(t))^{d_F}
// at 128-bit precision with relative slack 2^-60 in the log comparison.
// The cover must be a valid fractional edge cover; weights must be >= 0.
FriedgutResult check_friedgut(const Query& q, const Database& db, const WeightFunction& w,
                              const EdgeCover& cover);

}  // namespace wcoj
