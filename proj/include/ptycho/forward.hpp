#pragma once

#include <cstdint>
#include <vector>

#include "ptycho/field.hpp"
#include "ptycho/rng.hpp"

namespace ptycho {

// Complex object z = m .* exp(i*phi) synthesized from two real source images:
// magnitudes rescaled onto [0, 1], phases onto [0, pi/2] (min-max maps; a
// constant source image maps to magnitude 1 / phase 0).
struct GroundTruth {
    ComplexField object;
    double magnitudeMin = 0.0;
    double magnitudeMax = 1.0;
};

// One diffraction pattern per probe window, in scan order:
// d_k[u,v] = |F(Q_k z)[u,v]|^2.
struct DiffractionStack {
    int n = 0;
    std::vector<RealGrid> patterns;

    int count() const { return static_cast<int>(patterns.size()); }
};

struct NoiseSpec {
    double level = 0.0;  // relative L2 magnitude of the perturbation
    std::uint64_t seed = 0;
};

GroundTruth buildGroundTruth(const RealGrid& magnitude, const RealGrid& phase);

DiffractionStack simulate(const ComplexField& object, const ScanGeometry& geometry);

// eps = level * (||d|| / ||g||) * g with g i.i.d. standard normal drawn in
// row-major order from `eng` (n^2 deviates per call).  Before clamping,
// ||eps|| / ||d|| == level exactly (up to rounding).  Zero-norm inputs get a
// zero perturbation.
RealGrid noisePerturbation(const RealGrid& pattern, double level, rng::Engine& eng);

// Applies noisePerturbation to each pattern in scan order with a fresh engine
// seeded from spec.seed, then clamps each pixel at zero: max(d + eps, 0).
// Same spec twice -> bitwise identical output.
DiffractionStack addNoise(const DiffractionStack& data, const NoiseSpec& spec);

// Initial iterate for reconstructions: real and imaginary parts i.i.d.
// uniform on [0, 1), drawn row-major (re then im per pixel).
ComplexField randomInitialGuess(int n, std::uint64_t seed);

}  // namespace ptycho
