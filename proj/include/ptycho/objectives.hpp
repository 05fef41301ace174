#pragma once

#include "ptycho/field.hpp"
#include "ptycho/forward.hpp"

namespace ptycho {

enum class MetricKind {
    Distance,           // phi(z) = 1/2 sum_k || P_k(z) - Q_k z ||^2
    IntensityGaussian,  // phi(z) = 1/2 sum_k || |F(Q_k z)|^2 - d_k ||^2
};

struct ObjectiveEval {
    double value = 0.0;
    ComplexField gradient;
};

// A data-fit functional bound to one grid level, optionally with the linear
// shift used by the multigrid correction: phi_v(z) = phi(z) - <v, z>_R.
// Pointees must outlive the objective.
struct Objective {
    MetricKind kind = MetricKind::Distance;
    const ScanGeometry* geometry = nullptr;
    const DiffractionStack* data = nullptr;
    const ComplexField* shift = nullptr;  // v, optional
};

// Projection onto the modulus constraint set of one pattern:
//   P(z) = ifft2( sqrt(d) .* W / |W| ),  W = fft2(Q z),
// with the phase of a zero frequency sample taken as 0 (the sample maps to
// sqrt(d) on the real axis).  Requires d >= 0.
ComplexField projectModulus(const ComplexField& z, const ProbeWindow& window,
                            const RealGrid& pattern);

// value + gradient in one pass; the gradient follows the descent convention
// (it is the Wirtinger gradient of the real functional, so -gradient is the
// steepest-descent direction).
ObjectiveEval phiDistance(const ComplexField& z, const ScanGeometry& geometry,
                          const DiffractionStack& data);
ObjectiveEval phiIntensityGaussian(const ComplexField& z, const ScanGeometry& geometry,
                                   const DiffractionStack& data);

// Dispatches on kind and applies the shift if present.
ObjectiveEval evaluate(const Objective& objective, const ComplexField& z);

}  // namespace ptycho
