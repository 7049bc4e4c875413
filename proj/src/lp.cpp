#include "wcoj/lp.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <cstdlib>

#include "wcoj/error.hpp"

namespace wcoj {

namespace {

// mpq equality assumes canonical operands; normalize everything on entry so
// callers may pass values like Rat(2, 4).
Rat canon(Rat r) {
    r.canonicalize();
    return r;
}

}  // namespace

int LpProblem::add_var(const Rat& objective_coeff, bool free_sign) {
    obj_.push_back(canon(objective_coeff));
    free_.push_back(free_sign);
    return static_cast<int>(obj_.size()) - 1;
}

int LpProblem::add_constraint(Sense sense, const Rat& rhs) {
    rows_.push_back(Row{sense, canon(rhs), {}});
    return static_cast<int>(rows_.size()) - 1;
}

void LpProblem::add_coeff(int row, int var, const Rat& a) {
    rows_.at(row).coeffs.emplace_back(var, canon(a));
}

namespace {

// Dense simplex tableau for min c'x, x >= 0, rows already normalized to
// rhs >= 0 with slack/surplus/artificial columns appended.
struct Tableau {
    std::size_t m = 0, n = 0;          // rows, columns (rhs excluded)
    std::vector<std::vector<Rat>> a;   // m rows of n coefficients
    std::vector<Rat> rhs;              // per row
    std::vector<Rat> red;              // reduced-cost row, n entries
    Rat neg_value;                     // -(current objective)
    std::vector<int> basis;            // basis[i] = column basic in row i

    void pivot(std::size_t prow, std::size_t pcol) {
        mpq_t tmp;
        mpq_init(tmp);
        Rat inv = 1 / a[prow][pcol];
        std::vector<std::size_t> nz;
        nz.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (a[prow][j] == 0) continue;
            mpq_mul(a[prow][j].get_mpq_t(), a[prow][j].get_mpq_t(), inv.get_mpq_t());
            nz.push_back(j);
        }
        rhs[prow] *= inv;

        auto eliminate = [&](std::vector<Rat>& row, Rat& row_rhs, const Rat& f) {
            for (std::size_t j : nz) {
                mpq_mul(tmp, f.get_mpq_t(), a[prow][j].get_mpq_t());
                mpq_sub(row[j].get_mpq_t(), row[j].get_mpq_t(), tmp);
            }
            row[pcol] = 0;
            mpq_mul(tmp, f.get_mpq_t(), rhs[prow].get_mpq_t());
            mpq_sub(row_rhs.get_mpq_t(), row_rhs.get_mpq_t(), tmp);
        };
        for (std::size_t i = 0; i < m; ++i) {
            if (i == prow) continue;
            if (a[i][pcol] == 0) continue;
            Rat f = a[i][pcol];
            eliminate(a[i], rhs[i], f);
        }
        if (red[pcol] != 0) {
            Rat f = red[pcol];
            eliminate(red, neg_value, f);
        }
        basis[prow] = static_cast<int>(pcol);
        mpq_clear(tmp);
    }

    // Bland's rule; `allowed` masks columns permitted to enter.
    // Returns optimal=true, or false with unbounded flag set.
    bool run(const std::vector<bool>& allowed, bool& unbounded) {
        unbounded = false;
        while (true) {
            std::size_t enter = n;
            for (std::size_t j = 0; j < n; ++j) {
                if (allowed[j] && red[j] < 0) {
                    enter = j;
                    break;
                }
            }
            if (enter == n) return true;

            std::size_t leave = m;
            Rat best_ratio;
            for (std::size_t i = 0; i < m; ++i) {
                if (a[i][enter] <= 0) continue;
                Rat ratio = rhs[i] / a[i][enter];
                if (leave == m || ratio < best_ratio ||
                    (ratio == best_ratio && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave == m) {
                unbounded = true;
                return false;
            }
            pivot(leave, enter);
        }
    }
};

}  // namespace

LpResult LpProblem::solve() const {
    const int nvars = num_vars();
    const std::size_t m = rows_.size();

    // Internal form: minimize. Free variables split into x+ - x-.
    std::vector<int> pos_col(nvars), neg_col(nvars, -1);
    std::size_t ncols = 0;
    for (int v = 0; v < nvars; ++v) {
        pos_col[v] = static_cast<int>(ncols++);
        if (free_[v]) neg_col[v] = static_cast<int>(ncols++);
    }
    const std::size_t nstruct = ncols;

    // Row normalization: flip rows so every rhs is >= 0.
    std::vector<int> row_sign(m, 1);
    std::vector<Sense> sense(m);
    for (std::size_t i = 0; i < m; ++i) {
        sense[i] = rows_[i].sense;
        if (rows_[i].rhs < 0) {
            row_sign[i] = -1;
            if (sense[i] == Sense::le)
                sense[i] = Sense::ge;
            else if (sense[i] == Sense::ge)
                sense[i] = Sense::le;
        }
    }

    std::size_t nslack = 0, nart = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (sense[i] == Sense::le)
            ++nslack;
        else if (sense[i] == Sense::ge)
            ++nslack, ++nart;
        else
            ++nart;
    }

    Tableau t;
    t.m = m;
    t.n = nstruct + nslack + nart;
    t.a.assign(m, std::vector<Rat>(t.n, Rat(0)));
    t.rhs.assign(m, Rat(0));
    t.red.assign(t.n, Rat(0));
    t.basis.assign(m, -1);

    std::vector<int> art_col(m, -1), init_col(m, -1);
    {
        std::size_t next_slack = nstruct;
        std::size_t next_art = nstruct + nslack;
        for (std::size_t i = 0; i < m; ++i) {
            const Row& row = rows_[i];
            for (const auto& [v, coef] : row.coeffs) {
                Rat a = coef * row_sign[i];
                t.a[i][pos_col[v]] += a;
                if (neg_col[v] >= 0) t.a[i][neg_col[v]] -= a;
            }
            t.rhs[i] = row.rhs * row_sign[i];
            if (sense[i] == Sense::le) {
                std::size_t s = next_slack++;
                t.a[i][s] = 1;
                t.basis[i] = static_cast<int>(s);
                init_col[i] = static_cast<int>(s);
            } else if (sense[i] == Sense::ge) {
                std::size_t s = next_slack++;
                t.a[i][s] = -1;
                std::size_t ar = next_art++;
                t.a[i][ar] = 1;
                t.basis[i] = static_cast<int>(ar);
                art_col[i] = static_cast<int>(ar);
                init_col[i] = static_cast<int>(ar);
            } else {
                std::size_t ar = next_art++;
                t.a[i][ar] = 1;
                t.basis[i] = static_cast<int>(ar);
                art_col[i] = static_cast<int>(ar);
                init_col[i] = static_cast<int>(ar);
            }
        }
    }

    auto is_artificial = [&](std::size_t j) { return j >= nstruct + nslack; };

    LpResult result;

    // Phase 1: minimize the sum of artificials.
    if (nart > 0) {
        for (std::size_t j = nstruct + nslack; j < t.n; ++j) t.red[j] = 1;
        t.neg_value = 0;
        // Price out the artificial basis.
        for (std::size_t i = 0; i < m; ++i) {
            if (art_col[i] < 0) continue;
            for (std::size_t j = 0; j < t.n; ++j) t.red[j] -= t.a[i][j];
            t.neg_value -= t.rhs[i];
        }
        std::vector<bool> allowed(t.n, true);
        bool unbounded = false;
        t.run(allowed, unbounded);
        if (-t.neg_value > 0) {
            result.status = LpStatus::infeasible;
            return result;
        }
        // Drive leftover artificials out of the basis where possible. A row
        // with no nonzero non-artificial entry is redundant and stays put:
        // nothing can ever change its (zero) value.
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_artificial(t.basis[i])) continue;
            for (std::size_t j = 0; j < nstruct + nslack; ++j) {
                if (t.a[i][j] != 0) {
                    t.pivot(i, j);
                    break;
                }
            }
        }
    }

    // Phase 2: the real objective.
    std::vector<Rat> cost(t.n, Rat(0));
    for (int v = 0; v < nvars; ++v) {
        Rat c = maximize_ ? -obj_[v] : obj_[v];
        cost[pos_col[v]] = c;
        if (neg_col[v] >= 0) cost[neg_col[v]] = -c;
    }
    for (std::size_t j = 0; j < t.n; ++j) t.red[j] = cost[j];
    t.neg_value = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const Rat& cb = cost[t.basis[i]];
        if (cb == 0) continue;
        for (std::size_t j = 0; j < t.n; ++j)
            if (t.a[i][j] != 0) t.red[j] -= cb * t.a[i][j];
        t.neg_value -= cb * t.rhs[i];
    }
    {
        std::vector<bool> allowed(t.n, true);
        for (std::size_t j = 0; j < t.n; ++j)
            if (is_artificial(j)) allowed[j] = false;
        bool unbounded = false;
        if (!t.run(allowed, unbounded)) {
            result.status = LpStatus::unbounded;
            return result;
        }
    }

    // Extract the primal point.
    std::vector<Rat> xint(t.n, Rat(0));
    for (std::size_t i = 0; i < m; ++i) xint[t.basis[i]] = t.rhs[i];
    result.primal.assign(nvars, Rat(0));
    for (int v = 0; v < nvars; ++v) {
        result.primal[v] = xint[pos_col[v]];
        if (neg_col[v] >= 0) result.primal[v] -= xint[neg_col[v]];
    }

    // Duals from the reduced costs of the initial basis columns. For row i
    // with initial column j0 (identity +e_i, zero cost): y_i = -red[j0].
    result.dual.assign(m, Rat(0));
    Rat value_internal = -t.neg_value;
    for (std::size_t i = 0; i < m; ++i) {
        Rat y = -t.red[init_col[i]];
        y *= row_sign[i];             // undo row normalization
        if (maximize_) y = -y;        // undo objective negation
        result.dual[i] = y;
    }
    result.value = maximize_ ? -value_internal : value_internal;
    result.status = LpStatus::optimal;

    // Exact verification: primal feasibility, dual feasibility (with sign
    // conditions), and strong duality. Any violation is a solver bug.
    Rat dual_obj(0);
    for (std::size_t i = 0; i < m; ++i) {
        Rat lhs(0);
        for (const auto& [v, coef] : rows_[i].coeffs) lhs += coef * result.primal[v];
        const Rat& rhs = rows_[i].rhs;
        bool ok = rows_[i].sense == Sense::le   ? lhs <= rhs
                  : rows_[i].sense == Sense::ge ? lhs >= rhs
                                                : lhs == rhs;
        if (!ok) fail(Errc::internal, "lp: primal infeasibility after solve");
        const Rat& y = result.dual[i];
        bool sign_ok = rows_[i].sense == Sense::eq ? true
                       : rows_[i].sense == Sense::le
                           ? (maximize_ ? y >= 0 : y <= 0)
                           : (maximize_ ? y <= 0 : y >= 0);
        if (!sign_ok) fail(Errc::internal, "lp: dual sign violation");
        dual_obj += y * rhs;
    }
    if (dual_obj != result.value) {
        if (std::getenv("WCOJ_LP_DEBUG")) {
            fprintf(stderr, "lp debug: value=%s dual_obj=%s m=%zu n=%d nart=%zu\n",
                    rat_to_string(result.value).c_str(), rat_to_string(dual_obj).c_str(), m,
                    nvars, nart);
            for (std::size_t i = 0; i < m; ++i)
                fprintf(stderr, "  row %zu sense=%d rhs=%s y=%s init_col=%d red=%s art=%d\n", i,
                        int(rows_[i].sense), rat_to_string(rows_[i].rhs).c_str(),
                        rat_to_string(result.dual[i]).c_str(), init_col[i],
                        rat_to_string(t.red[init_col[i]]).c_str(), int(art_col[i] >= 0));
        }
        fail(Errc::internal, "lp: strong duality violated");
    }
    {
        std::vector<Rat> reduced(nvars);
        for (int v = 0; v < nvars; ++v) reduced[v] = obj_[v];
        for (std::size_t i = 0; i < m; ++i)
            for (const auto& [v, coef] : rows_[i].coeffs) reduced[v] -= result.dual[i] * coef;
        for (int v = 0; v < nvars; ++v) {
            if (free_[v]) {
                if (reduced[v] != 0) fail(Errc::internal, "lp: dual infeasibility (free var)");
            } else if (maximize_ ? reduced[v] > 0 : reduced[v] < 0) {
                fail(Errc::internal, "lp: dual infeasibility");
            }
            if (result.primal[v] != 0 && reduced[v] != 0)
                fail(Errc::internal, "lp: complementary slackness violated");
        }
        for (int v = 0; v < nvars; ++v)
            if (!free_[v] && result.primal[v] < 0)
                fail(Errc::internal, "lp: negative value for nonnegative var");
    }
    return result;
}

}  // namespace wcoj
