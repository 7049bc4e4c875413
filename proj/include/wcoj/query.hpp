#pragma once

#include <string>
#include <vector>

#include "wcoj/varset.hpp"

namespace wcoj {

// One body atom R(A,C,...): the guarding relation name plus the bound
// variables in argument order.
struct Atom {
    std::string relation;
    std::vector<int> vars;
    VarSet var_set = 0;
};

// The query's multi-hypergraph: vertex count plus the edge multiset.
struct Hypergraph {
    int n = 0;
    std::vector<VarSet> edges;
};

// A full conjunctive query over a multi-hypergraph. The head variable list
// fixes the vertex numbering 0..n-1.
class Query {
public:
    // Parses `Q(A,B,C) :- R(A,B), S(B,C), T(A,C).` Comment lines start with
    // '#'. The head must list every body variable exactly once.
    static Query parse(const std::string& text);
    static Query parse_file(const std::string& path);

    const VarTable& vars() const { return vars_; }
    int num_vars() const { return vars_.size(); }
    const std::string& head_name() const { return head_name_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    Hypergraph hypergraph() const;

    // Index of the first atom with this relation name whose variables cover
    // `required`; -1 when there is none.
    int guard_atom(const std::string& relation, VarSet required) const;

    std::string to_string() const;

private:
    std::string head_name_;
    VarTable vars_;
    std::vector<Atom> atoms_;
};

}  // namespace wcoj
