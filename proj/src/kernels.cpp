#include "ptycho/kernels.hpp"

#include <bit>
#include <cmath>
#include <utility>
#include <vector>

#include "ptycho/errors.hpp"

namespace ptycho {
namespace {

using cdouble = std::complex<double>;

void checkPow2(int n) {
    if (n <= 0 || !std::has_single_bit(static_cast<unsigned>(n)))
        throw GeometryError("fft2: grid side must be a positive power of two, got " +
                            std::to_string(n));
}

// tw[k] = exp(-+ 2*pi*i*k/n), k < n/2.  Each entry is computed directly from
// its own angle (no recurrences) so the table stays accurate at large n.
std::vector<cdouble> makeTwiddles(int n, bool inverse) {
    std::vector<cdouble> tw(static_cast<std::size_t>(n) / 2);
    const double sign = inverse ? 1.0 : -1.0;
    const double step = sign * 2.0 * 3.141592653589793238462643383279502884 / n;
    for (std::size_t k = 0; k < tw.size(); ++k)
        tw[k] = std::polar(1.0, step * static_cast<double>(k));
    return tw;
}

// Iterative radix-2 Cooley-Tukey on contiguous data.  Unnormalized in both
// directions; the 2-D drivers apply 1/n^2 once on the inverse.
void fft1d(cdouble* a, int n, const cdouble* tw) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int step = n / len;
        for (int i = 0; i < n; i += len) {
            for (int j = 0; j < half; ++j) {
                const cdouble u = a[i + j];
                const cdouble t = a[i + j + half] * tw[static_cast<std::size_t>(j) * step];
                a[i + j] = u + t;
                a[i + j + half] = u - t;
            }
        }
    }
}

template <bool Parallel>
void fft2Impl(cdouble* a, int n, bool inverse) {
    checkPow2(n);
    if (n == 1) {
        return;  // single sample: forward and inverse are both the identity
    }
    const auto tw = makeTwiddles(n, inverse);
    const bool par = Parallel && n >= kernels::kOmpMinN;

#pragma omp parallel for schedule(static) if (par)
    for (int r = 0; r < n; ++r) fft1d(a + static_cast<std::size_t>(r) * n, n, tw.data());

#pragma omp parallel if (par)
    {
        std::vector<cdouble> col(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
        for (int c = 0; c < n; ++c) {
            for (int r = 0; r < n; ++r) col[r] = a[static_cast<std::size_t>(r) * n + c];
            fft1d(col.data(), n, tw.data());
            for (int r = 0; r < n; ++r) a[static_cast<std::size_t>(r) * n + c] = col[r];
        }
    }

    if (inverse) {
        const double s = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
        const std::size_t total = static_cast<std::size_t>(n) * n;
#pragma omp parallel for schedule(static) if (par)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(total); ++i)
            a[i] *= s;
    }
}

template <bool Parallel>
double norm2sqImpl(const cdouble* a, std::size_t len) {
    const std::size_t nb = (len + kernels::kReduceBlock - 1) / kernels::kReduceBlock;
    std::vector<double> partial(nb, 0.0);
#pragma omp parallel for schedule(static) if (Parallel && len >= 4 * kernels::kReduceBlock)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kernels::kReduceBlock;
        const std::size_t hi = std::min(lo + kernels::kReduceBlock, len);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += std::norm(a[i]);
        partial[static_cast<std::size_t>(b)] = s;
    }
    double total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) total += partial[b];
    return total;
}

template <bool Parallel>
double dotRealImpl(const cdouble* a, const cdouble* b, std::size_t len) {
    const std::size_t nb = (len + kernels::kReduceBlock - 1) / kernels::kReduceBlock;
    std::vector<double> partial(nb, 0.0);
#pragma omp parallel for schedule(static) if (Parallel && len >= 4 * kernels::kReduceBlock)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nb); ++blk) {
        const std::size_t lo = static_cast<std::size_t>(blk) * kernels::kReduceBlock;
        const std::size_t hi = std::min(lo + kernels::kReduceBlock, len);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i)
            s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        partial[static_cast<std::size_t>(blk)] = s;
    }
    double total = 0.0;
    for (std::size_t blk = 0; blk < nb; ++blk) total += partial[blk];
    return total;
}

}  // namespace

namespace kernels {

void fft2_inplace(cdouble* a, int n, bool inverse) { fft2Impl<true>(a, n, inverse); }
double norm2sq(const cdouble* a, std::size_t len) { return norm2sqImpl<true>(a, len); }
double dotReal(const cdouble* a, const cdouble* b, std::size_t len) {
    return dotRealImpl<true>(a, b, len);
}

}  // namespace kernels

namespace reference {

void fft2_inplace(cdouble* a, int n, bool inverse) { fft2Impl<false>(a, n, inverse); }
double norm2sq(const cdouble* a, std::size_t len) { return norm2sqImpl<false>(a, len); }
double dotReal(const cdouble* a, const cdouble* b, std::size_t len) {
    return dotRealImpl<false>(a, b, len);
}

}  // namespace reference
}  // namespace ptycho
