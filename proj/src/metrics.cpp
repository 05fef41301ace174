#include "ptycho/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ptycho/errors.hpp"

namespace ptycho {
namespace {

constexpr double kHalfPi = 1.5707963267948966192313216916398;
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

void checkSameSize(const ComplexField& a, const ComplexField& b) {
    if (a.n() != b.n()) throw DomainError("metric: field sizes differ");
    if (a.n() < 1) throw DomainError("metric: empty fields");
}

std::array<double, kSsimWindow> gaussianKernel() {
    std::array<double, kSsimWindow> g{};
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double x = i - half;
        g[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

// Separable valid-mode filtering: rows first (n x m columns survive), then
// columns (m x m), m = n - kSsimWindow + 1.
std::vector<double> filterValid(const RealGrid& in,
                                const std::array<double, kSsimWindow>& g) {
    const int n = in.n();
    const int m = n - kSsimWindow + 1;
    std::vector<double> rowPass(static_cast<std::size_t>(n) * m);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < m; ++c) {
            double s = 0.0;
            for (int j = 0; j < kSsimWindow; ++j) s += g[j] * in.at(r, c + j);
            rowPass[static_cast<std::size_t>(r) * m + c] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(m) * m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            double s = 0.0;
            for (int i = 0; i < kSsimWindow; ++i)
                s += g[i] * rowPass[static_cast<std::size_t>(r + i) * m + c];
            out[static_cast<std::size_t>(r) * m + c] = s;
        }
    return out;
}

RealGrid hadamard(const RealGrid& a, const RealGrid& b) {
    RealGrid out(a.n());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

}  // namespace

double relativeError(const ComplexField& z, const ComplexField& zTrue) {
    checkSameSize(z, zTrue);
    const double denom = norm2(zTrue);
    if (denom == 0.0) throw DomainError("relativeError: zero reference field");
    return norm2(sub(z, zTrue)) / denom;
}

double magnitudeRelError(const ComplexField& z, const ComplexField& zTrue) {
    checkSameSize(z, zTrue);
    double num = 0.0, denom = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double diff = std::abs(z[i]) - std::abs(zTrue[i]);
        num += diff * diff;
        denom += std::norm(zTrue[i]);
    }
    if (denom == 0.0) throw DomainError("magnitudeRelError: zero reference field");
    return std::sqrt(num) / std::sqrt(denom);
}

RealGrid canonicalPhase(const ComplexField& z) {
    const int n = z.n();
    RealGrid p(n);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const cdouble w = z[i];
        p[i] = (w.real() == 0.0 && w.imag() == 0.0) ? 0.0
                                                    : std::atan2(w.imag(), w.real());
    }
    const auto [loIt, hiIt] = std::minmax_element(p.data(), p.data() + p.size());
    const double lo = *loIt, hi = *hiIt;
    if (hi == lo) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.0;
        return p;
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = (p[i] - lo) / (hi - lo) * kHalfPi;
    return p;
}

double phaseSSIM(const ComplexField& z, const ComplexField& zTrue) {
    checkSameSize(z, zTrue);
    const int n = z.n();
    if (n < kSsimWindow)
        throw MetricError("phaseSSIM: grid side " + std::to_string(n) +
                          " is smaller than the 11x11 window");

    const RealGrid x = canonicalPhase(z);
    const RealGrid y = canonicalPhase(zTrue);
    const auto g = gaussianKernel();

    const auto mx = filterValid(x, g);
    const auto my = filterValid(y, g);
    const auto mxx = filterValid(hadamard(x, x), g);
    const auto myy = filterValid(hadamard(y, y), g);
    const auto mxy = filterValid(hadamard(x, y), g);

    const double L = kHalfPi;
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);

    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double mux = mx[i], muy = my[i];
        const double vx = mxx[i] - mux * mux;
        const double vy = myy[i] - muy * muy;
        const double cxy = mxy[i] - mux * muy;
        const double num = (2.0 * mux * muy + c1) * (2.0 * cxy + c2);
        const double den = (mux * mux + muy * muy + c1) * (vx + vy + c2);
        total += num / den;
    }
    return total / static_cast<double>(mx.size());
}

double convergenceFactor(const std::vector<double>& phi, double phiStar, int j) {
    if (j < 0 || static_cast<std::size_t>(j) >= phi.size())
        throw MetricError("convergenceFactor: step index out of range");
    const double denom = phi[0] - phiStar;
    if (denom <= 0.0)
        throw DomainError("convergenceFactor: initial value must exceed the target");
    const double num = phi[static_cast<std::size_t>(j)] - phiStar;
    if (num < 0.0)
        throw DomainError("convergenceFactor: value fell below the target");
    return std::pow(num / denom, 1.0 / (j + 1));
}

}  // namespace ptycho
