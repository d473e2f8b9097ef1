#pragma once

#include <cstdint>
#include <random>

#include "normal.hpp"

namespace pnl {

// splitmix64 step; used to whiten seeds and derive sub-streams.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic derived seed for a tagged sub-stream (path index, date, stage).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (tag * 0xD1342543DE82EF95ULL);
    std::uint64_t a = splitmix64_next(s);
    std::uint64_t b = splitmix64_next(s);
    return a ^ (b << 1);
}

// One independent stream of standard normals keyed by (seed, stream id).
// Streams are reproducible regardless of how work is partitioned across
// threads: stream j always yields the same sequence.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(derive_seed(seed, stream)) {}

    double next() {
        // uniform strictly inside (0,1), then inverse CDF
        const std::uint64_t bits = engine_();
        const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
        return norm_ppf(u);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace pnl
