#pragma once

#include <cstdint>
#include <random>

namespace flockadapt {

/// Uniform draw on [lo, hi) built from raw mt19937_64 output, so the sequence
/// is identical across standard library implementations.
inline double uniform_draw(std::mt19937_64& gen, double lo, double hi)
{
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

} // namespace flockadapt
