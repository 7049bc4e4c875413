#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wcoj/constraints.hpp"
#include "wcoj/database.hpp"
#include "wcoj/proof.hpp"
#include "wcoj/query.hpp"

namespace wcoj {

struct ExecResult {
    Relation output;
    Counters counters;
    // Probes spent inside the per-level intersections (index = search depth)
    // and on building the per-level prefix views, for the instrumented
    // runtime checks.
    std::vector<std::uint64_t> intersect_probes_per_level;
    std::vector<std::uint64_t> view_probes_per_level;
};

// Topological order of the constraint dependency graph with smallest-index
// tie break; throws Errc::incompatible with the witness cycle when cyclic.
std::vector<int> compatible_order(const ConstraintSet& dc, const Query& q);

// Backtracking search over the variable order: at depth i the candidates for
// variable order[i] are the intersection of the per-constraint projections,
// walked with leapfrog seeks. The result is semijoin-reduced against every
// atom, so it equals the query output exactly. The order must be compatible
// with dc and every variable needs a constraint introducing it.
ExecResult backtrack_join(const Query& q, const ConstraintSet& dc, const std::vector<int>& order,
                          const Database& db);

struct HeavyLightResult {
    Relation output;
    Counters counters;
    std::uint64_t heavy_join_size = 0;  // |R_heavy join S|
    std::uint64_t light_join_size = 0;  // |R_light join T|
};

// The two-branch triangle algorithm: split R by A-degree at
// theta = sqrt(|R||S|/|T|), join the heavy part with S and the light part
// with T, semijoin each against the third relation, and union.
// Relations must form a triangle R(A,B), S(B,C), T(A,C) up to renaming.
HeavyLightResult triangle_heavy_light(const Relation& r, const Relation& s, const Relation& t);

// One interpreted step: the proof step plus the partition threshold for
// decompositions.
struct AnnotatedStep {
    ProofStep step;
    std::optional<Rat> theta;  // required for decompositions
};

// Fills in decomposition thresholds by equalizing the two branches'
// statistic products (log scale), for sequences with a single decomposition
// whose compositions each join one statistic-bearing term. Steps that
// already carry a theta keep it.
std::vector<AnnotatedStep> annotate_with_thetas(const ProofSequence& seq,
                                                const ConstraintSet& dc, int n);

struct PandaResult {
    Relation output;
    Counters counters;
    std::uint64_t max_intermediate = 0;  // largest materialized branch relation
};

// Interprets a proof sequence as a join plan: decomposition partitions the
// affiliated relation by degree, submodularity reassigns the affiliation,
// composition joins the two affiliated relations. Every relation that
// becomes affiliated with the full term h([n]) is collected; the union is
// semijoin-reduced against all atoms, so the result is exactly the query
// output. The sequence must validate against the delta of
// shannon_flow_dual(dc).
PandaResult panda_interpret(const Query& q, const Database& db, const ConstraintSet& dc,
                            const std::vector<AnnotatedStep>& seq);

// Left-deep pairwise hash join over the atoms in order: the obviously
// correct reference implementation.
ExecResult bruteforce_join(const Query& q, const Database& db);

}  // namespace wcoj
