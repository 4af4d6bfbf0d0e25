#pragma once

#include <cstdint>
#include <random>

#include "hproj/vec2.hpp"

namespace hproj {

// Seeded RNG with explicit mappings to doubles. std::uniform_real_distribution
// is implementation-defined, so sampled values go through a fixed 53-bit
// construction instead; a given seed produces the same stream everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    Vec2 point_in_box(double xmin, double ymin, double xmax, double ymax) {
        return {uniform(xmin, xmax), uniform(ymin, ymax)};
    }

    double angle() { return uniform(0.0, kTwoPi); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace hproj
