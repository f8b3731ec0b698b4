#pragma once
// Deterministic random streams.
//
// The engine core is std::mt19937_64 (its output sequence is pinned by the
// standard), and all distribution transforms are implemented here rather
// than taken from <random>, whose distributions are implementation-defined.
// Same seed => same byte stream on every platform.

#include <cmath>
#include <cstdint>
#include <random>

namespace linbp {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Collapses (master seed, stream tag, index) into one 64-bit seed. Distinct
// tags give statistically independent substreams; tag/index partitioning is
// what keeps training and evaluation windows disjoint.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= stream * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(s);
    s ^= index * 0xc2b2ae3d27d4eb4fULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b << 1) ^ (c >> 1);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform draw strictly inside (0,1); never returns 0 or 1, so logs of
    // either u or 1-u are always finite.
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. One value per call (the sine branch is
    // discarded) so the stream position never depends on caller history.
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

    // Chi-square with k degrees of freedom: pairs of dof as exponentials,
    // odd dof adds one squared normal.
    double chi_square(int k) {
        double sum = 0.0;
        for (int i = 0; i < k / 2; ++i)
            sum += -2.0 * std::log(uniform01());
        if (k % 2 != 0) {
            const double z = normal();
            sum += z * z;
        }
        return sum;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace linbp
