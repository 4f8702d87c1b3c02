#pragma once

#include <cstdint>
#include <random>

#include "charflow/point.hpp"

namespace charflow {

/// Seeded 64-bit generator. Every stochastic operation takes an explicit seed;
/// independent substreams are derived from (seed, stream index).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32), 0x63686172u};
        engine_.seed(seq);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    Point uniform_in(const Box& box) noexcept {
        Point p(box.dimension());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = uniform(box.lo[i], box.hi[i]);
        return p;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace charflow
