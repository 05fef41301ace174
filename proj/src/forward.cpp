#include "ptycho/forward.hpp"

#include <algorithm>
#include <cmath>

#include "ptycho/errors.hpp"
#include "ptycho/kernels.hpp"

namespace ptycho {

GroundTruth buildGroundTruth(const RealGrid& magnitude, const RealGrid& phase) {
    if (magnitude.n() != phase.n())
        throw DomainError("buildGroundTruth: magnitude and phase sizes differ");
    if (magnitude.n() < 1) throw DomainError("buildGroundTruth: empty source images");
    if (!magnitude.isFinite() || !phase.isFinite())
        throw DomainError("buildGroundTruth: source images must be finite");

    const int n = magnitude.n();
    const auto [mMinIt, mMaxIt] =
        std::minmax_element(magnitude.data(), magnitude.data() + magnitude.size());
    const auto [pMinIt, pMaxIt] =
        std::minmax_element(phase.data(), phase.data() + phase.size());
    const double mMin = *mMinIt, mMax = *mMaxIt;
    const double pMin = *pMinIt, pMax = *pMaxIt;
    const double halfPi = 1.5707963267948966192313216916398;

    GroundTruth truth;
    truth.object = ComplexField(n);
    truth.magnitudeMin = (mMax > mMin) ? 0.0 : 1.0;
    truth.magnitudeMax = 1.0;
    for (std::size_t i = 0; i < magnitude.size(); ++i) {
        const double m =
            (mMax > mMin) ? (magnitude[i] - mMin) / (mMax - mMin) : 1.0;
        const double p = (pMax > pMin) ? (phase[i] - pMin) / (pMax - pMin) * halfPi : 0.0;
        truth.object[i] = std::polar(m, p);
    }
    return truth;
}

DiffractionStack simulate(const ComplexField& object, const ScanGeometry& geometry) {
    if (object.n() != geometry.n)
        throw DomainError("simulate: object size does not match scan geometry");
    DiffractionStack data;
    data.n = object.n();
    data.patterns.reserve(geometry.windows.size());
    for (const ProbeWindow& w : geometry.windows) {
        ComplexField buf = applyProbe(object, w);
        kernels::fft2_inplace(buf.data(), buf.n(), false);
        RealGrid d(object.n());
        for (std::size_t i = 0; i < buf.size(); ++i) d[i] = std::norm(buf[i]);
        data.patterns.push_back(std::move(d));
    }
    return data;
}

RealGrid noisePerturbation(const RealGrid& pattern, double level, rng::Engine& eng) {
    if (level < 0.0) throw DomainError("noise level must be non-negative");
    const int n = pattern.n();
    RealGrid g(n);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng::gaussian(eng);

    double dNormSq = 0.0, gNormSq = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        dNormSq += pattern[i] * pattern[i];
        gNormSq += g[i] * g[i];
    }
    const double scale =
        (gNormSq > 0.0) ? level * std::sqrt(dNormSq) / std::sqrt(gNormSq) : 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
    return g;
}

DiffractionStack addNoise(const DiffractionStack& data, const NoiseSpec& spec) {
    rng::Engine eng(spec.seed);
    DiffractionStack out;
    out.n = data.n;
    out.patterns.reserve(data.patterns.size());
    for (const RealGrid& d : data.patterns) {
        RealGrid eps = noisePerturbation(d, spec.level, eng);
        RealGrid noisy(d.n());
        for (std::size_t i = 0; i < d.size(); ++i)
            noisy[i] = std::max(d[i] + eps[i], 0.0);
        out.patterns.push_back(std::move(noisy));
    }
    return out;
}

ComplexField randomInitialGuess(int n, std::uint64_t seed) {
    rng::Engine eng(seed);
    ComplexField z(n);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double re = rng::uniform01(eng);
        const double im = rng::uniform01(eng);
        z[i] = cdouble{re, im};
    }
    return z;
}

}  // namespace ptycho
