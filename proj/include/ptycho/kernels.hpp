#pragma once

#include <complex>
#include <cstddef>

// Compute kernels backing the field operations.  ptycho::kernels holds the
// OpenMP-parallel versions used in production; ptycho::reference holds serial
// twins with identical arithmetic, kept for tests and for the benchmark
// target that compares the two.
//
// Every parallel kernel produces results that are bitwise independent of the
// thread count: row/column transforms touch disjoint data, element-wise maps
// have no cross-iteration state, and reductions accumulate fixed-size blocks
// whose partial sums are combined serially in index order.

namespace ptycho::kernels {

// Grid side below which loops stay serial (fork overhead dominates).
inline constexpr int kOmpMinN = 64;

// Reductions sum blocks of this many elements; block partials are then summed
// in block order regardless of how blocks were scheduled across threads.
inline constexpr std::size_t kReduceBlock = 1024;

// In-place 2-D DFT on a row-major n x n grid, n a power of two.
// forward:  F[u,v] = sum_{r,c} f[r,c] exp(-2*pi*i*(u*r + v*c)/n)   (unnormalized)
// inverse:  carries the 1/n^2 normalization.
void fft2_inplace(std::complex<double>* a, int n, bool inverse);

double norm2sq(const std::complex<double>* a, std::size_t len);
double dotReal(const std::complex<double>* a, const std::complex<double>* b,
               std::size_t len);

}  // namespace ptycho::kernels

namespace ptycho::reference {

void fft2_inplace(std::complex<double>* a, int n, bool inverse);
double norm2sq(const std::complex<double>* a, std::size_t len);
double dotReal(const std::complex<double>* a, const std::complex<double>* b,
               std::size_t len);

}  // namespace ptycho::reference
