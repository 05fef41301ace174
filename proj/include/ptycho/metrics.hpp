#pragma once

#include <vector>

#include "ptycho/field.hpp"

namespace ptycho {

// ||z - zTrue|| / ||zTrue||; a zero reference is a DomainError.
double relativeError(const ComplexField& z, const ComplexField& zTrue);

// Same ratio on the pointwise moduli, insensitive to phase.
double magnitudeRelError(const ComplexField& z, const ComplexField& zTrue);

// Pointwise phases (atan2, with 0 assigned to exact zeros) min-max rescaled
// onto [0, pi/2]; a constant phase map collapses to all zeros.  Ground-truth
// objects built from [0, pi/2] phase ramps pass through unchanged.
RealGrid canonicalPhase(const ComplexField& z);

// Mean SSIM between the canonical phase maps of both fields: 11x11 Gaussian
// window (sigma 1.5, valid positions only), dynamic range L = pi/2,
// C1 = (0.01 L)^2, C2 = (0.03 L)^2.  Requires n >= 11.
// phaseSSIM(z, z) == 1 exactly.
double phaseSSIM(const ComplexField& z, const ComplexField& zTrue);

// Geometric-mean per-step reduction factor after j steps:
//   ((phi_j - phiStar) / (phi_0 - phiStar))^(1/(j+1)).
// Requires 0 <= j < phi.size(), phi_0 > phiStar, phi_j >= phiStar.
double convergenceFactor(const std::vector<double>& phi, double phiStar, int j);

}  // namespace ptycho
