#pragma once

#include <random>

namespace safepi {

/// Uniform double in [0, 1) from the top 53 bits of one draw. Unlike the
/// standard distributions this gives the same stream on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace safepi
