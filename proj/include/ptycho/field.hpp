#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ptycho {

using cdouble = std::complex<double>;

// Square n x n grid of complex samples, stored row-major.
class ComplexField {
public:
    ComplexField() = default;
    explicit ComplexField(int n, cdouble fill = cdouble{0.0, 0.0});

    int n() const { return n_; }
    std::size_t size() const { return v_.size(); }

    cdouble& at(int row, int col) { return v_[static_cast<std::size_t>(row) * n_ + col]; }
    const cdouble& at(int row, int col) const {
        return v_[static_cast<std::size_t>(row) * n_ + col];
    }
    cdouble& operator[](std::size_t i) { return v_[i]; }
    const cdouble& operator[](std::size_t i) const { return v_[i]; }

    cdouble* data() { return v_.data(); }
    const cdouble* data() const { return v_.data(); }

    bool isFinite() const;

private:
    int n_ = 0;
    std::vector<cdouble> v_;
};

// Square n x n grid of real samples (images, diffraction patterns).
class RealGrid {
public:
    RealGrid() = default;
    explicit RealGrid(int n, double fill = 0.0);

    int n() const { return n_; }
    std::size_t size() const { return v_.size(); }

    double& at(int row, int col) { return v_[static_cast<std::size_t>(row) * n_ + col]; }
    const double& at(int row, int col) const {
        return v_[static_cast<std::size_t>(row) * n_ + col];
    }
    double& operator[](std::size_t i) { return v_[i]; }
    const double& operator[](std::size_t i) const { return v_[i]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    bool isFinite() const;

private:
    int n_ = 0;
    std::vector<double> v_;
};

// Binary illumination window selecting pixels
// [row0, row0+width) x [col0, col0+width).
struct ProbeWindow {
    int row0 = 0;
    int col0 = 0;
    int width = 0;

    bool contains(int row, int col) const {
        return row >= row0 && row < row0 + width && col >= col0 && col < col0 + width;
    }
};

// Ordered probe windows of a serpentine raster scan over an n x n object:
// window offsets step by `stride` along each row of positions, rows top to
// bottom, direction alternating left-to-right / right-to-left.
struct ScanGeometry {
    int n = 0;
    int windowSize = 0;
    int stride = 0;
    std::vector<ProbeWindow> windows;

    int probeCount() const { return static_cast<int>(windows.size()); }
};

// Unnormalized forward DFT: F[u,v] = sum_{r,c} f[r,c] e^{-2 pi i (ur+vc)/n}.
ComplexField fft2(const ComplexField& field);
// Inverse carrying 1/n^2, so ifft2(fft2(f)) == f up to rounding.
ComplexField ifft2(const ComplexField& field);

// Restriction to a window: pixels inside are copied, outside are zero.
// Idempotent; self-adjoint as an operator on the full grid.
ComplexField applyProbe(const ComplexField& field, const ProbeWindow& window);

// Requires: 1 <= windowSize <= n, stride >= 1, stride | (n - windowSize),
// stride <= windowSize (otherwise the scan would leave coverage gaps).
ScanGeometry generateRasterScan(int n, int windowSize, int stride);

// Linear algebra over the real/imag-stacked coefficient vector.
double norm2sq(const ComplexField& a);
double norm2(const ComplexField& a);
// <a, b>_R = sum_i Re(a_i) Re(b_i) + Im(a_i) Im(b_i)
double dotReal(const ComplexField& a, const ComplexField& b);
ComplexField add(const ComplexField& a, const ComplexField& b);
ComplexField sub(const ComplexField& a, const ComplexField& b);
ComplexField scaled(const ComplexField& a, double alpha);
// y += alpha * x
void axpy(ComplexField& y, double alpha, const ComplexField& x);

}  // namespace ptycho
