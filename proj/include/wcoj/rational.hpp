#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <gmpxx.h>

namespace wcoj {

// All bound arithmetic is exact: Rat is an arbitrary-precision rational.
using Rat = mpq_class;

// Canonical "p/q" rendering ("p" alone when q == 1).
std::string rat_to_string(const Rat& r);

// Parses "p", "-p", or "p/q". Returns nullopt on malformed input or q == 0.
std::optional<Rat> rat_from_string(const std::string& text);

// Nearest double, for display only; never feeds back into exact computations.
double rat_to_double(const Rat& r);

// Exact log2(n) when n is a power of two; otherwise the smallest rational
// upper bound of log2(n) with denominator 2^32. Requires n >= 1.
Rat log2_upper(std::uint64_t n);

// True iff r == log2(n) is representable exactly, i.e. n is a power of two.
bool is_power_of_two(std::uint64_t n);

// floor(2^(e)) for rational e >= 0, as an exact integer. Used to realize
// degree thresholds given in log scale; exact for integer e, otherwise
// resolved with directed-rounding interval arithmetic.
mpz_class pow2_floor(const Rat& e);

// ceil(sqrt(n)) for a nonnegative integer.
mpz_class isqrt_ceil(const mpz_class& n);

}  // namespace wcoj
