#include "wcoj/rational.hpp"

#include <stdexcept>

#include <mpfr.h>

namespace wcoj {

std::string rat_to_string(const Rat& r) {
    Rat c = r;
    c.canonicalize();
    if (c.get_den() == 1) return c.get_num().get_str();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

std::optional<Rat> rat_from_string(const std::string& text) {
    if (text.empty()) return std::nullopt;
    mpq_class q;
    if (q.set_str(text, 10) != 0) return std::nullopt;
    if (q.get_den() == 0) return std::nullopt;
    q.canonicalize();
    return q;
}

double rat_to_double(const Rat& r) {
    return r.get_d();
}

bool is_power_of_two(std::uint64_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

Rat log2_upper(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("log2_upper: n must be >= 1");
    if (is_power_of_two(n)) {
        int e = 0;
        while ((n >> e) != 1) ++e;
        return Rat(e);
    }
    // ceil(log2(n) * 2^32) / 2^32, computed with upward rounding so the
    // result is always an upper bound.
    mpfr_t x;
    mpfr_init2(x, 96);
    mpfr_set_uj(x, n, MPFR_RNDU);
    mpfr_log2(x, x, MPFR_RNDU);
    mpfr_mul_2ui(x, x, 32, MPFR_RNDU);
    mpfr_ceil(x, x);
    mpz_class num;
    mpfr_get_z(num.get_mpz_t(), x, MPFR_RNDN);
    mpfr_clear(x);
    Rat r(num, mpz_class(1) << 32);
    r.canonicalize();
    return r;
}

mpz_class pow2_floor(const Rat& e) {
    if (e < 0) throw std::invalid_argument("pow2_floor: exponent must be >= 0");
    const mpz_class& num = e.get_num();
    const mpz_class& den = e.get_den();
    if (den == 1) {
        if (!num.fits_ulong_p()) throw std::overflow_error("pow2_floor: exponent too large");
        return mpz_class(1) << num.get_ui();
    }
    // Bracket 2^e between rounded-down and rounded-up evaluations and grow
    // precision until both agree on the floor. 2^e is irrational here (e is a
    // non-integer rational), so the loop terminates.
    for (mpfr_prec_t prec = 128;; prec *= 2) {
        mpfr_t lo, hi;
        mpfr_init2(lo, prec);
        mpfr_init2(hi, prec);
        mpfr_set_q(lo, e.get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(hi, e.get_mpq_t(), MPFR_RNDU);
        mpfr_exp2(lo, lo, MPFR_RNDD);
        mpfr_exp2(hi, hi, MPFR_RNDU);
        mpfr_floor(lo, lo);
        mpfr_floor(hi, hi);
        mpz_class a, b;
        mpfr_get_z(a.get_mpz_t(), lo, MPFR_RNDN);
        mpfr_get_z(b.get_mpz_t(), hi, MPFR_RNDN);
        mpfr_clear(lo);
        mpfr_clear(hi);
        if (a == b) return a;
        if (prec > 1 << 20) throw std::runtime_error("pow2_floor: precision limit reached");
    }
}

mpz_class isqrt_ceil(const mpz_class& n) {
    if (n < 0) throw std::invalid_argument("isqrt_ceil: negative input");
    mpz_class root, rem;
    mpz_sqrtrem(root.get_mpz_t(), rem.get_mpz_t(), n.get_mpz_t());
    if (rem != 0) root += 1;
    return root;
}

}  // namespace wcoj
