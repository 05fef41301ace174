#include "ptycho/objectives.hpp"

#include <cmath>
#include <string>

#include "ptycho/errors.hpp"
#include "ptycho/kernels.hpp"

namespace ptycho {
namespace {

void checkPattern(const ComplexField& z, const RealGrid& d) {
    if (d.n() != z.n()) throw DomainError("diffraction pattern size mismatch");
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] < 0.0)
            throw DomainError("diffraction pattern has a negative intensity at index " +
                              std::to_string(i));
}

void checkStack(const ComplexField& z, const ScanGeometry& geo,
                const DiffractionStack& data) {
    if (geo.n != z.n()) throw DomainError("scan geometry size mismatch");
    if (data.n != z.n()) throw DomainError("diffraction stack size mismatch");
    if (data.count() != geo.probeCount())
        throw DomainError("pattern count does not match probe count");
}

// W -> sqrt(d) * W / |W|, with vanishing W sent to sqrt(d) + 0i.
void replaceModulus(ComplexField& w, const RealGrid& d) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double target = std::sqrt(d[i]);
        const double mag = std::abs(w[i]);
        if (mag == 0.0)
            w[i] = cdouble{target, 0.0};
        else
            w[i] *= target / mag;
    }
}

}  // namespace

ComplexField projectModulus(const ComplexField& z, const ProbeWindow& window,
                            const RealGrid& pattern) {
    checkPattern(z, pattern);
    ComplexField buf = applyProbe(z, window);
    kernels::fft2_inplace(buf.data(), buf.n(), false);
    replaceModulus(buf, pattern);
    kernels::fft2_inplace(buf.data(), buf.n(), true);
    return buf;
}

ObjectiveEval phiDistance(const ComplexField& z, const ScanGeometry& geometry,
                          const DiffractionStack& data) {
    checkStack(z, geometry, data);
    const int n = z.n();
    ObjectiveEval out;
    out.gradient = ComplexField(n);
    ComplexField residual(n);
    for (int k = 0; k < geometry.probeCount(); ++k) {
        const ProbeWindow& w = geometry.windows[k];
        ComplexField proj = projectModulus(z, w, data.patterns[k]);
        // residual = P_k(z) - Q_k z over the full grid; Q_k z vanishes
        // outside the window while P_k(z) generally does not
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                residual.at(r, c) =
                    w.contains(r, c) ? proj.at(r, c) - z.at(r, c) : proj.at(r, c);
        out.value += 0.5 * kernels::norm2sq(residual.data(), residual.size());
        for (int r = w.row0; r < w.row0 + w.width; ++r)
            for (int c = w.col0; c < w.col0 + w.width; ++c)
                out.gradient.at(r, c) -= residual.at(r, c);  // Q_k(Q_k z - P_k z)
    }
    return out;
}

ObjectiveEval phiIntensityGaussian(const ComplexField& z, const ScanGeometry& geometry,
                                   const DiffractionStack& data) {
    checkStack(z, geometry, data);
    const int n = z.n();
    const double n2 = static_cast<double>(n) * n;
    ObjectiveEval out;
    out.gradient = ComplexField(n);
    for (int k = 0; k < geometry.probeCount(); ++k) {
        const ProbeWindow& w = geometry.windows[k];
        const RealGrid& d = data.patterns[k];
        checkPattern(z, d);
        ComplexField buf = applyProbe(z, w);
        kernels::fft2_inplace(buf.data(), buf.n(), false);
        double sumSq = 0.0;
        for (std::size_t i = 0; i < buf.size(); ++i) {
            const double r = std::norm(buf[i]) - d[i];
            sumSq += r * r;
            buf[i] *= r;  // r .* W feeds the gradient
        }
        out.value += 0.5 * sumSq;
        kernels::fft2_inplace(buf.data(), buf.n(), true);
        // gradient contribution 2 Q_k^T F^H(r .* W); F^H = n^2 ifft2 under the
        // unnormalized-forward convention
        for (int r = w.row0; r < w.row0 + w.width; ++r)
            for (int c = w.col0; c < w.col0 + w.width; ++c)
                out.gradient.at(r, c) += 2.0 * n2 * buf.at(r, c);
    }
    return out;
}

ObjectiveEval evaluate(const Objective& objective, const ComplexField& z) {
    if (!objective.geometry || !objective.data)
        throw ConfigError("objective is not bound to geometry/data");
    ObjectiveEval ev = (objective.kind == MetricKind::Distance)
                           ? phiDistance(z, *objective.geometry, *objective.data)
                           : phiIntensityGaussian(z, *objective.geometry, *objective.data);
    if (objective.shift) {
        const ComplexField& v = *objective.shift;
        ev.value -= dotReal(v, z);
        axpy(ev.gradient, -1.0, v);
    }
    return ev;
}

}  // namespace ptycho
