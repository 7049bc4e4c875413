#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wcoj/database.hpp"
#include "wcoj/query.hpp"

namespace wcoj {

// Counter-based splittable PRNG (splitmix64). Reference outputs, frozen in
// the tests and README: seed 0 -> 16294208416658607535, 7960286522194355700,
// 487617019471545679.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // next() % m; m must be positive.
    std::uint64_t bounded(std::uint64_t m) { return next() % m; }

    // Independent substream k: reseed with the finalizer of state + (k+1)*phi.
    SplitMix64 split(std::uint64_t k) const {
        std::uint64_t z = state_ + (k + 1) * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return SplitMix64(z ^ (z >> 31));
    }

private:
    std::uint64_t state_;
};

struct GenSpec {
    enum class Kind { grid_triangle, agm_tight, random };
    Kind kind = Kind::grid_triangle;
    int m = 1;                        // grid side
    std::uint64_t n_value = 2;        // agm_tight cardinality target (power of two)
    std::vector<std::uint64_t> sizes; // random: one size per atom
    std::uint64_t seed = 0;
};

// The canonical triangle query the grid generator populates.
Query triangle_query();

// R = S = T = [m] x [m]: N = m^2 tuples each, m^3 triangles.
Database gen_grid_triangle(int m);

// Worst-case instance for cardinality constraints all equal to n_value:
// solves the vertex LP for per-variable exponents, rounds domains down to
// powers of two, and materializes each atom as the full product. n_value
// must be a power of two.
Database gen_agm_tight(const Query& q, std::uint64_t n_value);

// Uniform-without-replacement tuple sets of exactly the requested sizes over
// domain [max(16, 2 * ceil(size^(1/arity)))], reproducible per seed (atom k
// uses substream k).
Database gen_random(const Query& q, const std::vector<std::uint64_t>& sizes,
                    std::uint64_t seed);

// Generates per the spec and writes <relation>.csv per atom plus
// manifest.json (kind, parameters, seed) into dir.
Database gen_write(const GenSpec& spec, const Query& q, const std::string& dir);

// A finite joint distribution over n variables.
struct JointDist {
    int n = 0;
    std::vector<std::pair<std::vector<Value>, double>> entries;  // tuple, probability
};

// The uniform distribution over a relation's tuples.
JointDist uniform_over(const Relation& rel);

struct EntropyResult {
    double bits = 0.0;          // marginal entropy H[S]
    double log2_support = 0.0;  // log2 of the marginal support size
};

// Marginal entropy of the S-projection, in bits. Probabilities must be
// nonnegative and sum to 1 within 1e-12.
EntropyResult empirical_entropy(const JointDist& joint, VarSet s);

}  // namespace wcoj
