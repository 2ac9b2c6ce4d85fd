#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Deterministic random streams.  Results must be bit-for-bit reproducible
// for a given seed regardless of how work is split across threads, so every
// independent unit of work (island, replicate) owns a stream derived from
// the master seed by a fixed 64-bit mix, and all sampling is done with
// explicit algorithms rather than implementation-defined distributions.

namespace mdlseg {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stream seed for work unit `index` under the given role salt.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t salt, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(salt * 0x9E3779B97F4A7C15ULL + index + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer on {lo, ..., hi}, unbiased via rejection.
    int uniform_int(int lo, int hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return lo + static_cast<int>(x % span);
    }

    // Standard normal via Box-Muller (two uniforms per draw, no cached state).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace mdlseg
