#pragma once

#include <map>
#include <string>
#include <vector>

#include "wcoj/bounds.hpp"
#include "wcoj/rational.hpp"
#include "wcoj/varset.hpp"

namespace wcoj {

// A conditional term h(Y|X), X a proper subset of Y (X may be empty; the
// unconditional h(Y) is stored as h(Y|{})).
struct CondTerm {
    VarSet y = 0;
    VarSet x = 0;
    auto operator<=>(const CondTerm&) const = default;
};

enum class StepKind { submodularity, decomposition, composition };

// One weighted rewrite:
//   submodularity  h(I | I&J)         ->  h(I|J | J)
//   decomposition  h(Y|{})            ->  h(Y|X) + h(X|{})
//   composition    h(Y|X) + h(X|{})   ->  h(Y|{})
struct ProofStep {
    StepKind kind = StepKind::submodularity;
    VarSet a = 0;  // I for submodularity, Y otherwise
    VarSet b = 0;  // J for submodularity, X otherwise
    Rat weight;    // > 0

    friend bool operator==(const ProofStep& l, const ProofStep& r) {
        return l.kind == r.kind && l.a == r.a && l.b == r.b && l.weight == r.weight;
    }
};

// Current nonnegative weight per conditional term; absent terms carry zero.
using TermLedger = std::map<CondTerm, Rat>;

struct ProofSequence {
    std::vector<ProofStep> steps;

    friend bool operator==(const ProofSequence& l, const ProofSequence& r) {
        return l.steps == r.steps;
    }
};

struct StepOutcome {
    bool ok = true;
    CondTerm deficient;  // the term lacking weight when !ok
};

// Applies one step in place; on failure the ledger is left unchanged.
StepOutcome apply_step(TermLedger& ledger, const ProofStep& step);

TermLedger ledger_from_delta(const std::vector<CertTerm>& delta);

struct ValidateResult {
    bool ok = false;
    int failing_step = -1;  // index of the failing step; -1 = final target check
    std::string message;
};

// Replays the sequence from the delta ledger; true iff every step applies and
// the final weight on h([n]) is at least 1.
ValidateResult validate(const ProofSequence& seq, const std::vector<CertTerm>& delta, int n);

struct DeriveResult {
    bool ok = false;  // false = DERIVE_INCOMPLETE
    ProofSequence seq;
};

// Serializes a dual certificate into a proof sequence: greedy rule selection
// with depth-first backtracking over rule order; every xi entry backs a
// submodularity rule, positive alpha a decomposition, negative alpha a
// composition. Gives up (ok = false) once the step budget
// 10 * (number of nonzero certificate entries) is exhausted.
DeriveResult derive(const DualCertificate& cert, int n);

// Text format, one step per line:
//   sub I={A,B} J={A,C} w=1/2
//   dec Y={B,C} X={B} w=1/2
//   comp Y={B,C,D} X={B} w=1/2
// '#' lines are comments. Emission is canonical and parses back bit-exactly.
ProofSequence parse_proof(const std::string& text, const VarTable& vars);
ProofSequence parse_proof_file(const std::string& path, const VarTable& vars);
std::string emit_proof(const ProofSequence& seq, const VarTable& vars);

}  // namespace wcoj
