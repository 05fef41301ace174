#include <cmath>
#include <limits>

#include "doctest.h"
#include "ptycho/errors.hpp"
#include "ptycho/solvers.hpp"
#include "test_support.hpp"

using namespace ptycho;
using test::randomField;

namespace {

// Convex stub: phi(z) = 1/2 sum_i d_i |z_i - z*_i|^2, gradient d .* (z - z*).
CountedObjective quadraticStub(ComplexField zStar, RealGrid diag, long* calls = nullptr) {
    return CountedObjective{
        [zStar = std::move(zStar), diag = std::move(diag), calls](const ComplexField& z) {
            if (calls) ++*calls;
            ObjectiveEval ev;
            ev.gradient = ComplexField(z.n());
            for (std::size_t i = 0; i < z.size(); ++i) {
                const cdouble r = z[i] - zStar[i];
                ev.value += 0.5 * diag[i] * std::norm(r);
                ev.gradient[i] = diag[i] * r;
            }
            return ev;
        },
        0, 1.0};
}

RealGrid constantDiag(int n, double v) { return RealGrid(n, v); }

}  // namespace

TEST_CASE("linesearch accepts a descent step at alpha = 1") {
    const int n = 4;
    const ComplexField zStar(n);
    const ComplexField z0 = randomField(n, 60);
    const CountedObjective obj = quadraticStub(zStar, constantDiag(n, 1.0));
    EvalCounter counter;
    const ObjectiveEval ev = obj.eval(z0, counter);
    const ComplexField dir = scaled(ev.gradient, -1.0);
    const LinesearchResult ls =
        backtrackingLinesearch(obj, z0, dir, counter, 50, ev.value);
    CHECK(ls.alpha == 1.0);
    CHECK_FALSE(ls.stalled);
    CHECK(ls.trials == 1);
    CHECK(ls.eval.value <= ev.value);
    CHECK(counter.weightedEvals == 2.0);  // initial + one trial
}

TEST_CASE("linesearch stalls on an ascent direction and keeps the iterate") {
    const int n = 4;
    const ComplexField zStar(n);
    const ComplexField z0 = randomField(n, 61);
    const CountedObjective obj = quadraticStub(zStar, constantDiag(n, 1.0));
    EvalCounter counter;
    const ObjectiveEval ev = obj.eval(z0, counter);
    const LinesearchResult ls =
        backtrackingLinesearch(obj, z0, ev.gradient, counter, 10, ev.value);
    CHECK(ls.stalled);
    CHECK(ls.alpha == 0.0);
    CHECK(ls.trials == 10);
    CHECK(test::bitwiseEqual(ls.z, z0));
}

TEST_CASE("linesearch accepts immediately on a zero direction") {
    const int n = 4;
    const ComplexField z0 = randomField(n, 62);
    const CountedObjective obj = quadraticStub(ComplexField(n), constantDiag(n, 1.0));
    EvalCounter counter;
    const double phi0 = obj.eval(z0, counter).value;
    const LinesearchResult ls =
        backtrackingLinesearch(obj, z0, ComplexField(n), counter, 50, phi0);
    CHECK(ls.alpha == 1.0);
    CHECK(test::bitwiseEqual(ls.z, z0));
}

TEST_CASE("lbfgs solves the well-conditioned stub in one step, two evaluations") {
    const int n = 8;
    const ComplexField zStar = randomField(n, 63);
    const ComplexField z0 = randomField(n, 64);
    long calls = 0;
    const CountedObjective obj = quadraticStub(zStar, constantDiag(n, 1.0), &calls);
    EvalCounter counter;
    SolverConfig cfg;
    cfg.maxIters = 20;
    const SolverReport rep = lbfgs(obj, z0, cfg, counter);
    CHECK(rep.reason == StopReason::Tolerance);
    CHECK(test::maxAbsDiff(rep.finalIterate, zStar) <= 1e-12);
    // identity curvature: -g steps straight to the minimizer, alpha = 1
    CHECK(counter.weightedEvals == 2.0);
    CHECK(calls == 2);  // every counted evaluation invoked the functional once
    REQUIRE(rep.history.size() == 2);
    CHECK(rep.history[0].weightedEvals < rep.history[1].weightedEvals);
    CHECK(rep.history[1].value <= rep.history[0].value);
}

TEST_CASE("lbfgs terminates immediately when started at the minimizer") {
    const int n = 8;
    const ComplexField zStar = randomField(n, 65);
    const CountedObjective obj = quadraticStub(zStar, constantDiag(n, 2.0));
    EvalCounter counter;
    SolverConfig cfg;
    const SolverReport rep = lbfgs(obj, zStar, cfg, counter);
    CHECK(rep.reason == StopReason::Tolerance);
    CHECK(counter.weightedEvals == 1.0);
    CHECK(rep.history.size() == 1);
    CHECK(test::bitwiseEqual(rep.finalIterate, zStar));
}

TEST_CASE("lbfgs outpaces steepest descent on an ill-conditioned stub") {
    const int n = 8;
    const ComplexField zStar = randomField(n, 66);
    const ComplexField z0 = randomField(n, 67);
    RealGrid diag(n);
    for (std::size_t i = 0; i < diag.size(); ++i)
        diag[i] = (i % 2 == 0) ? 0.05 : 1.0;  // condition number 20, step 1 stable

    SolverConfig cfg;
    cfg.maxIters = 5000;
    cfg.gradTolRel = 1e-8;

    EvalCounter cLbfgs, cSd;
    const SolverReport rLbfgs = lbfgs(quadraticStub(zStar, diag), z0, cfg, cLbfgs);
    SolverConfig sdCfg = cfg;
    sdCfg.lbfgsMemory = 0;  // empty memory degenerates to steepest descent
    const SolverReport rSd = lbfgs(quadraticStub(zStar, diag), z0, sdCfg, cSd);

    CHECK(rLbfgs.reason == StopReason::Tolerance);
    CHECK(rSd.reason == StopReason::Tolerance);
    CHECK(cLbfgs.weightedEvals < cSd.weightedEvals);
}

TEST_CASE("lbfgs respects the evaluation budget") {
    const int n = 8;
    const ComplexField zStar = randomField(n, 68);
    const ComplexField z0 = randomField(n, 69);
    RealGrid diag(n);
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = (i % 2 == 0) ? 0.01 : 1.0;
    SolverConfig cfg;
    cfg.maxIters = 100000;
    cfg.gradTolRel = 0.0;
    cfg.gradTolAbs = 0.0;  // only the budget can stop this run
    cfg.maxWeightedEvals = 7.0;
    EvalCounter counter;
    const SolverReport rep = lbfgs(quadraticStub(zStar, diag), z0, cfg, counter);
    CHECK(rep.reason == StopReason::Budget);
    CHECK(counter.weightedEvals >= 7.0);
    // the budget check sits between iterations, so the overshoot is bounded
    // by the last iteration's linesearch
    CHECK(counter.weightedEvals <= 12.0);
}

TEST_CASE("lbfgs warm start skips the initial evaluation only") {
    const int n = 8;
    const ComplexField zStar = randomField(n, 70);
    const ComplexField z0 = randomField(n, 71);
    RealGrid diag(n);
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = (i % 3 == 0) ? 0.2 : 1.0;
    const CountedObjective obj = quadraticStub(zStar, diag);
    SolverConfig cfg;
    cfg.maxIters = 50;
    cfg.gradTolRel = 1e-10;

    EvalCounter cA, cB;
    const SolverReport a = lbfgs(obj, z0, cfg, cA);
    EvalCounter pre;
    const ObjectiveEval ev0 = obj.eval(z0, pre);
    const SolverReport b = lbfgs(obj, z0, cfg, cB, {}, &ev0);
    CHECK(test::bitwiseEqual(a.finalIterate, b.finalIterate));
    CHECK(cA.weightedEvals == cB.weightedEvals + 1.0);
}

TEST_CASE("lbfgs reports a stall when no decrease is possible") {
    const int n = 4;
    // the reported gradient lies about the slope: the nominal descent
    // direction -g = +z raises phi = |z|^2, so every trial fails
    const CountedObjective rising{
        [](const ComplexField& z) {
            ObjectiveEval ev;
            ev.value = norm2sq(z);
            ev.gradient = scaled(z, -1.0);
            return ev;
        },
        0, 1.0};
    EvalCounter counter;
    SolverConfig cfg;
    cfg.maxIters = 5;
    cfg.linesearchMax = 8;
    const ComplexField z0(n, cdouble{1.0, 0.0});
    const SolverReport rep = lbfgs(rising, z0, cfg, counter);
    CHECK(rep.reason == StopReason::Stall);
    CHECK(test::bitwiseEqual(rep.finalIterate, z0));
}

TEST_CASE("lbfgs rejects non-finite objectives") {
    const CountedObjective bad{
        [](const ComplexField& z) {
            ObjectiveEval ev;
            ev.value = std::numeric_limits<double>::quiet_NaN();
            ev.gradient = ComplexField(z.n(),
                                       cdouble{std::numeric_limits<double>::quiet_NaN(), 0.0});
            return ev;
        },
        0, 1.0};
    EvalCounter counter;
    SolverConfig cfg;
    CHECK_THROWS_AS(lbfgs(bad, ComplexField(4), cfg, counter), NumericError);
}

TEST_CASE("truncated Newton solves the identity-curvature stub in 3 evaluations") {
    const int n = 8;
    const ComplexField zStar = randomField(n, 72);
    const ComplexField z0 = randomField(n, 73);
    long calls = 0;
    const CountedObjective obj = quadraticStub(zStar, constantDiag(n, 1.0), &calls);
    EvalCounter counter;
    SolverConfig cfg;
    cfg.maxIters = 10;
    // the finite-difference Hessian-vector probe leaves ~1e-10 of gradient
    // behind, so ask for a relative reduction the first Newton step delivers
    cfg.gradTolRel = 1e-8;
    const SolverReport rep = truncatedNewton(obj, z0, cfg, counter);
    CHECK(rep.reason == StopReason::Tolerance);
    CHECK(test::maxAbsDiff(rep.finalIterate, zStar) <= 1e-8);
    // 1 initial + 1 Hessian-vector probe (CG converges instantly on identity
    // curvature) + 1 accepted linesearch trial
    CHECK(counter.weightedEvals == 3.0);
    CHECK(calls == 3);
}

TEST_CASE("truncated Newton handles ill conditioning within one outer step") {
    const int n = 8;
    const ComplexField zStar = randomField(n, 74);
    const ComplexField z0 = randomField(n, 75);
    RealGrid diag(n);
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = (i % 2 == 0) ? 0.01 : 1.0;
    const CountedObjective obj = quadraticStub(zStar, diag);
    EvalCounter counter;
    SolverConfig cfg;
    cfg.maxIters = 30;
    cfg.gradTolRel = 1e-9;
    const SolverReport rep = truncatedNewton(obj, z0, cfg, counter);
    CHECK(rep.reason == StopReason::Tolerance);
    CHECK(test::maxAbsDiff(rep.finalIterate, zStar) <= 1e-7);
}

TEST_CASE("pie single-window update equals a unit steepest-descent step") {
    const int n = 16;
    const ComplexField z0 = randomField(n, 76);
    ScanGeometry geo;
    geo.n = n;
    geo.windowSize = n / 2;
    geo.stride = n / 2;
    geo.windows = {ProbeWindow{4, 4, n / 2}};
    const DiffractionStack data = simulate(randomField(n, 77), geo);

    EvalCounter counter;
    const SolverReport rep = pie(z0, geo, data, 0.0, 1, counter);

    const ObjectiveEval ev = phiDistance(z0, geo, data);
    ComplexField want = z0;
    axpy(want, -1.0, ev.gradient);
    CHECK(test::maxAbsDiff(rep.finalIterate, want) <= 1e-12);
}

TEST_CASE("pie damping scales the update by 1/(1+gamma)") {
    const int n = 16;
    const ComplexField z0 = randomField(n, 78);
    ScanGeometry geo;
    geo.n = n;
    geo.windowSize = n / 2;
    geo.stride = n / 2;
    geo.windows = {ProbeWindow{0, 0, n / 2}};
    const DiffractionStack data = simulate(randomField(n, 79), geo);

    const ComplexField proj = projectModulus(z0, geo.windows[0], data.patterns[0]);
    EvalCounter counter;
    const SolverReport rep = pie(z0, geo, data, 1.0, 1, counter);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const cdouble want = geo.windows[0].contains(r, c)
                                     ? z0.at(r, c) + 0.5 * (proj.at(r, c) - z0.at(r, c))
                                     : z0.at(r, c);
            CHECK(std::abs(rep.finalIterate.at(r, c) - want) <= 1e-15);
        }
}

TEST_CASE("pie leaves data-consistent iterates in place") {
    const int n = 16;
    const ComplexField zTrue = randomField(n, 80);
    const ScanGeometry geo = generateRasterScan(n, n / 2, n / 4);
    const DiffractionStack data = simulate(zTrue, geo);
    EvalCounter counter;
    const SolverReport rep = pie(zTrue, geo, data, 0.0, 3, counter);
    CHECK(test::maxAbsDiff(rep.finalIterate, zTrue) <= 1e-12);
}

TEST_CASE("pie charges one evaluation per sweep and honors the budget") {
    const int n = 16;
    const ComplexField z0 = randomField(n, 81);
    const ScanGeometry geo = generateRasterScan(n, n / 2, n / 4);
    const DiffractionStack data = simulate(randomField(n, 82), geo);

    EvalCounter counter;
    const SolverReport rep = pie(z0, geo, data, 0.0, 5, counter);
    CHECK(counter.weightedEvals == 5.0);
    REQUIRE(rep.history.size() == 6);  // initial + five sweeps
    for (std::size_t i = 1; i < rep.history.size(); ++i)
        CHECK(rep.history[i].weightedEvals > rep.history[i - 1].weightedEvals);

    EvalCounter capped;
    const SolverReport rep2 = pie(z0, geo, data, 0.0, 10, capped, {}, 3.0);
    CHECK(rep2.reason == StopReason::Budget);
    CHECK(capped.weightedEvals == 3.0);
}

TEST_CASE("pie objective decreases over sweeps from a random start") {
    const int n = 16;
    const ComplexField z0 = randomField(n, 83);
    const ScanGeometry geo = generateRasterScan(n, n / 2, n / 4);
    const DiffractionStack data = simulate(randomField(n, 84), geo);
    EvalCounter counter;
    const SolverReport rep = pie(z0, geo, data, 0.0, 10, counter);
    CHECK(rep.history.back().value < rep.history.front().value);
}
