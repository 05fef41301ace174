#include "ptycho/field.hpp"

#include <cmath>
#include <string>

#include "ptycho/errors.hpp"
#include "ptycho/kernels.hpp"

namespace ptycho {

ComplexField::ComplexField(int n, cdouble fill)
    : n_(n), v_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill) {
    if (n < 0) throw GeometryError("ComplexField: negative size");
}

bool ComplexField::isFinite() const {
    for (const cdouble& z : v_)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

RealGrid::RealGrid(int n, double fill)
    : n_(n), v_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill) {
    if (n < 0) throw GeometryError("RealGrid: negative size");
}

bool RealGrid::isFinite() const {
    for (double x : v_)
        if (!std::isfinite(x)) return false;
    return true;
}

ComplexField fft2(const ComplexField& field) {
    ComplexField out = field;
    kernels::fft2_inplace(out.data(), out.n(), false);
    return out;
}

ComplexField ifft2(const ComplexField& field) {
    ComplexField out = field;
    kernels::fft2_inplace(out.data(), out.n(), true);
    return out;
}

static void checkWindow(int n, const ProbeWindow& w) {
    if (w.width < 1 || w.row0 < 0 || w.col0 < 0 || w.row0 + w.width > n ||
        w.col0 + w.width > n)
        throw GeometryError("probe window [" + std::to_string(w.row0) + "," +
                            std::to_string(w.col0) + ")+" + std::to_string(w.width) +
                            " does not fit an n=" + std::to_string(n) + " grid");
}

ComplexField applyProbe(const ComplexField& field, const ProbeWindow& window) {
    checkWindow(field.n(), window);
    ComplexField out(field.n());
    for (int r = window.row0; r < window.row0 + window.width; ++r)
        for (int c = window.col0; c < window.col0 + window.width; ++c)
            out.at(r, c) = field.at(r, c);
    return out;
}

ScanGeometry generateRasterScan(int n, int windowSize, int stride) {
    if (n < 1 || windowSize < 1 || windowSize > n)
        throw GeometryError("raster scan: need 1 <= windowSize <= n");
    if (stride < 1) throw GeometryError("raster scan: stride must be positive");
    if ((n - windowSize) % stride != 0)
        throw GeometryError("raster scan: stride must divide n - windowSize");
    if (stride > windowSize)
        throw GeometryError("raster scan: stride > windowSize leaves coverage gaps");

    const int steps = (n - windowSize) / stride + 1;
    ScanGeometry geo;
    geo.n = n;
    geo.windowSize = windowSize;
    geo.stride = stride;
    geo.windows.reserve(static_cast<std::size_t>(steps) * steps);
    for (int i = 0; i < steps; ++i) {
        const int row0 = i * stride;
        for (int j = 0; j < steps; ++j) {
            const int jj = (i % 2 == 0) ? j : steps - 1 - j;  // serpentine
            geo.windows.push_back(ProbeWindow{row0, jj * stride, windowSize});
        }
    }
    return geo;
}

double norm2sq(const ComplexField& a) { return kernels::norm2sq(a.data(), a.size()); }

double norm2(const ComplexField& a) { return std::sqrt(norm2sq(a)); }

double dotReal(const ComplexField& a, const ComplexField& b) {
    if (a.n() != b.n()) throw DomainError("dotReal: size mismatch");
    return kernels::dotReal(a.data(), b.data(), a.size());
}

ComplexField add(const ComplexField& a, const ComplexField& b) {
    if (a.n() != b.n()) throw DomainError("add: size mismatch");
    ComplexField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

ComplexField sub(const ComplexField& a, const ComplexField& b) {
    if (a.n() != b.n()) throw DomainError("sub: size mismatch");
    ComplexField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

ComplexField scaled(const ComplexField& a, double alpha) {
    ComplexField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= alpha;
    return out;
}

void axpy(ComplexField& y, double alpha, const ComplexField& x) {
    if (y.n() != x.n()) throw DomainError("axpy: size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace ptycho
