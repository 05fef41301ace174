#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ptycho::rng {

using Engine = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
// Fixed construction (no std::uniform_real_distribution) so streams are
// bit-reproducible across standard library implementations.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller, one deviate per two engine draws (the sine
// twin is discarded to keep the draw count per sample fixed).  log(1 - u) is
// safe: u < 1 always, and 1 - u > 0.
inline double gaussian(Engine& eng) {
    const double u1 = uniform01(eng);
    const double u2 = uniform01(eng);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace ptycho::rng
