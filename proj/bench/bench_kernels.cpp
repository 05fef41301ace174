#include <benchmark/benchmark.h>

#include <vector>

#include "ptycho/forward.hpp"
#include "ptycho/kernels.hpp"
#include "ptycho/objectives.hpp"

using namespace ptycho;

// OpenMP kernels against their serial reference twins.  The two share
// arithmetic bit for bit, so any gap here is pure scheduling overhead or
// speedup.

namespace {

ComplexField makeField(int n) {
    return randomInitialGuess(n, 42);
}

void benchFft2Kernels(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ComplexField z = makeField(n);
    for (auto _ : state) {
        kernels::fft2_inplace(z.data(), n, false);
        kernels::fft2_inplace(z.data(), n, true);
        benchmark::DoNotOptimize(z.data());
    }
    state.SetItemsProcessed(state.iterations() * 2);
}

void benchFft2Reference(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ComplexField z = makeField(n);
    for (auto _ : state) {
        reference::fft2_inplace(z.data(), n, false);
        reference::fft2_inplace(z.data(), n, true);
        benchmark::DoNotOptimize(z.data());
    }
    state.SetItemsProcessed(state.iterations() * 2);
}

void benchNorm2sqKernels(benchmark::State& state) {
    const ComplexField z = makeField(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        double s = kernels::norm2sq(z.data(), z.size());
        benchmark::DoNotOptimize(s);
    }
}

void benchNorm2sqReference(benchmark::State& state) {
    const ComplexField z = makeField(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        double s = reference::norm2sq(z.data(), z.size());
        benchmark::DoNotOptimize(s);
    }
}

// whole objective evaluations, the unit the solvers are budgeted in
void benchDistanceObjective(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ScanGeometry geometry = generateRasterScan(n, n / 2, n / 4);
    const DiffractionStack data = simulate(makeField(n), geometry);
    const ComplexField z = randomInitialGuess(n, 7);
    for (auto _ : state) {
        ObjectiveEval ev = phiDistance(z, geometry, data);
        benchmark::DoNotOptimize(ev.value);
        benchmark::DoNotOptimize(ev.gradient.data());
    }
}

}  // namespace

BENCHMARK(benchFft2Kernels)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(benchFft2Reference)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(benchNorm2sqKernels)->Arg(256)->Arg(512);
BENCHMARK(benchNorm2sqReference)->Arg(256)->Arg(512);
BENCHMARK(benchDistanceObjective)->Arg(64)->Arg(128)->Arg(256);

BENCHMARK_MAIN();
