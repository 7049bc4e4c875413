#pragma once

#include <vector>

#include "wcoj/rational.hpp"

namespace wcoj {

enum class LpStatus { optimal, infeasible, unbounded };
enum class Sense { le, ge, eq };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Rat value;                // objective at the optimum
    std::vector<Rat> primal;  // one entry per variable
    std::vector<Rat> dual;    // one entry per constraint, see convention below
};

// Exact-rational linear program solved by a dense two-phase tableau simplex
// with Bland's pivoting rule, so results are deterministic and cycling-free.
//
// Variables are nonnegative unless added with free_sign = true.
//
// Dual convention: the returned dual vector y satisfies
//     objective value == sum_i y_i * rhs_i,
// and for a maximization problem y_i >= 0 on <= rows and y_i <= 0 on >= rows
// (signs flipped for minimization); == rows are unrestricted. Primal
// feasibility, dual feasibility, and the strong-duality equality are all
// re-verified exactly before an optimal result is returned.
class LpProblem {
public:
    explicit LpProblem(bool maximize) : maximize_(maximize) {}

    int add_var(const Rat& objective_coeff, bool free_sign = false);
    int num_vars() const { return static_cast<int>(obj_.size()); }

    int add_constraint(Sense sense, const Rat& rhs);
    int num_constraints() const { return static_cast<int>(rows_.size()); }

    // Adds a * var to the given row (accumulates on repeat calls).
    void add_coeff(int row, int var, const Rat& a);

    LpResult solve() const;

private:
    struct Row {
        Sense sense;
        Rat rhs;
        std::vector<std::pair<int, Rat>> coeffs;
    };

    bool maximize_;
    std::vector<Rat> obj_;
    std::vector<bool> free_;
    std::vector<Row> rows_;
};

}  // namespace wcoj
