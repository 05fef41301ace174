#include "ptycho/multigrid.hpp"

#include <string>

#include "ptycho/errors.hpp"

namespace ptycho {
namespace {

void checkEven(int n, const char* what) {
    if (n < 2 || n % 2 != 0)
        throw GeometryError(std::string(what) + " must be even and >= 2, got " +
                            std::to_string(n));
}

CountedObjective levelObjective(const Hierarchy& h, int level, const ComplexField* v) {
    const GridLevel& L = h.levels[level];
    Objective obj{L.kind, &L.geometry, &L.data, v};
    return counted(obj, L.levelIndex, L.costWeight);
}

SolverConfig smootherConfig(const Hierarchy& h, int level) {
    SolverConfig cfg;
    cfg.gradTolRel = (level == h.depth() - 1) ? h.options.coarsestGradTolRel
                                              : h.options.intermediateGradTolRel;
    cfg.gradTolAbs = h.options.gradTolAbs;
    cfg.lbfgsMemory = h.options.lbfgsMemory;
    cfg.linesearchMax = h.options.linesearchMax;
    return cfg;
}

}  // namespace

ComplexField restrictField(const ComplexField& fine) {
    checkEven(fine.n(), "restrictField: grid side");
    const int nH = fine.n() / 2;
    ComplexField coarse(nH);
    for (int r = 0; r < nH; ++r)
        for (int c = 0; c < nH; ++c)
            coarse.at(r, c) = ((fine.at(2 * r, 2 * c) + fine.at(2 * r, 2 * c + 1)) +
                               (fine.at(2 * r + 1, 2 * c) + fine.at(2 * r + 1, 2 * c + 1))) *
                              0.25;
    return coarse;
}

ComplexField prolongField(const ComplexField& coarse) {
    if (coarse.n() < 1) throw GeometryError("prolongField: empty grid");
    const int n = coarse.n() * 2;
    ComplexField fine(n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) fine.at(r, c) = coarse.at(r / 2, c / 2);
    return fine;
}

DiffractionStack restrictData(const DiffractionStack& fine) {
    if (fine.n < 4 || fine.n % 4 != 0)
        throw GeometryError("restrictData: grid side must be a multiple of 4");
    const int n = fine.n;
    const int nH = n / 2;
    DiffractionStack coarse;
    coarse.n = nH;
    coarse.patterns.reserve(fine.patterns.size());
    for (const RealGrid& p : fine.patterns) {
        RealGrid q(nH);
        for (int u = 0; u < nH; ++u) {
            // frequency u on the coarse grid sits at fine row uf; derivation:
            // fftshift (fine), crop the central half, inverse shift (coarse)
            const int uf = ((u + nH / 2) % nH + 3 * n / 4) % n;
            for (int v = 0; v < nH; ++v) {
                const int vf = ((v + nH / 2) % nH + 3 * n / 4) % n;
                q.at(u, v) = p.at(uf, vf) * (1.0 / 16.0);
            }
        }
        coarse.patterns.push_back(std::move(q));
    }
    return coarse;
}

GridLevel buildCoarseLevel(const GridLevel& fine) {
    if (fine.n < 16)
        throw GeometryError("buildCoarseLevel: refuse to coarsen below n = 8");
    checkEven(fine.geometry.windowSize, "buildCoarseLevel: window size");
    checkEven(fine.geometry.stride, "buildCoarseLevel: stride");
    GridLevel coarse;
    coarse.n = fine.n / 2;
    coarse.geometry = generateRasterScan(fine.n / 2, fine.geometry.windowSize / 2,
                                         fine.geometry.stride / 2);
    coarse.data = restrictData(fine.data);
    coarse.kind = fine.kind;
    coarse.levelIndex = fine.levelIndex + 1;
    coarse.costWeight = fine.costWeight * 0.25;
    return coarse;
}

Hierarchy buildHierarchy(const ScanGeometry& geometry, const DiffractionStack& data,
                         MetricKind kind, int depth, const MgoptConfig& options) {
    if (depth < 1) throw ConfigError("hierarchy depth must be >= 1");
    if (geometry.n != data.n)
        throw DomainError("hierarchy: geometry and data sizes differ");
    if (data.count() != geometry.probeCount())
        throw DomainError("hierarchy: pattern count does not match probe count");
    if ((geometry.n >> (depth - 1)) < 8)
        throw ConfigError("hierarchy depth " + std::to_string(depth) +
                          " would coarsen an n = " + std::to_string(geometry.n) +
                          " grid below 8");

    Hierarchy h;
    h.options = options;
    h.coarsestMaxIters = options.coarsestMaxIters > 0 ? options.coarsestMaxIters
                         : (depth <= 2 ? 3 : 100);
    h.levels.push_back(GridLevel{geometry.n, geometry, data, kind, 0, 1.0});
    for (int l = 1; l < depth; ++l)
        h.levels.push_back(buildCoarseLevel(h.levels.back()));
    return h;
}

CycleResult mgoptCycle(const Hierarchy& h, int level, const ComplexField& z,
                       const ComplexField& v, EvalCounter& counter,
                       const ObjectiveEval* warmStart) {
    if (level < 0 || level >= h.depth()) throw ConfigError("mgoptCycle: bad level");
    CountedObjective obj = levelObjective(h, level, &v);

    if (level == h.depth() - 1) {
        SolverConfig cfg = smootherConfig(h, level);
        cfg.maxIters = h.coarsestMaxIters;
        SolverReport rep = lbfgs(obj, z, cfg, counter, {}, warmStart);
        return {std::move(rep.finalIterate), std::move(rep.finalEval)};
    }

    SolverConfig preCfg = smootherConfig(h, level);
    preCfg.maxIters = h.options.k1;
    SolverReport pre = lbfgs(obj, z, preCfg, counter, {}, warmStart);

    ComplexField zBarH = restrictField(pre.finalIterate);

    // shift for the coarse problem, built from plain (unshifted) gradients:
    // v_H = restrict(v) + grad phi_H(zBarH) - restrict(grad phi_h(zBar))
    ComplexField gFine = pre.finalEval.gradient;  // shifted gradient = grad - v
    axpy(gFine, 1.0, v);
    CountedObjective coarsePlain = levelObjective(h, level + 1, nullptr);
    ObjectiveEval coarseEval = coarsePlain.eval(zBarH, counter);
    ComplexField vH = restrictField(v);
    axpy(vH, 1.0, coarseEval.gradient);
    {
        ComplexField gFineR = restrictField(gFine);
        axpy(vH, -1.0, gFineR);
    }

    // the coarse shifted evaluation at zBarH comes free from coarseEval
    ObjectiveEval coarseShifted;
    coarseShifted.value = coarseEval.value - dotReal(vH, zBarH);
    coarseShifted.gradient = coarseEval.gradient;
    axpy(coarseShifted.gradient, -1.0, vH);

    CycleResult rec = mgoptCycle(h, level + 1, zBarH, vH, counter, &coarseShifted);

    ComplexField correction = prolongField(sub(rec.z, zBarH));
    LinesearchResult ls =
        backtrackingLinesearch(obj, pre.finalIterate, correction, counter,
                               h.options.linesearchMax, pre.finalEval.value);

    const ComplexField& zPlus = ls.stalled ? pre.finalIterate : ls.z;
    const ObjectiveEval& evalPlus = ls.stalled ? pre.finalEval : ls.eval;

    SolverConfig postCfg = smootherConfig(h, level);
    postCfg.maxIters = h.options.k2;
    SolverReport post = lbfgs(obj, zPlus, postCfg, counter, {}, &evalPlus);
    return {std::move(post.finalIterate), std::move(post.finalEval)};
}

SolverReport mgoptDriver(const Hierarchy& h, const ComplexField& z0,
                         const MgoptDriverConfig& config, EvalCounter& counter,
                         const IterationCallback& callback) {
    if (h.depth() < 1) throw ConfigError("mgoptDriver: empty hierarchy");
    if (z0.n() != h.levels[0].n)
        throw DomainError("mgoptDriver: iterate does not match the finest grid");

    SolverConfig base;
    base.gradTolRel = config.gradTolRel;
    base.gradTolAbs = config.gradTolAbs;
    base.lbfgsMemory = h.options.lbfgsMemory;
    base.linesearchMax = h.options.linesearchMax;
    base.maxWeightedEvals = config.budgetWeightedEvals;

    if (h.depth() == 1) {
        // degenerate hierarchy: the whole scheme is plain LBFGS on the top level
        base.maxIters = config.maxCycles;
        return lbfgs(levelObjective(h, 0, nullptr), z0, base, counter, callback);
    }

    CountedObjective top = levelObjective(h, 0, nullptr);
    SolverReport rep;
    ComplexField z = z0;
    ObjectiveEval cur = top.eval(z, counter);
    if (!cur.gradient.isFinite()) throw NumericError("non-finite gradient in mgoptDriver");
    const double g0 = norm2(cur.gradient);
    const double gradFloor = config.gradTolAbs * (1.0 + norm2(z0));
    double gNorm = g0;
    rep.history.push_back({counter.weightedEvals, cur.value, gNorm});
    if (callback) callback(0, z, cur.value, counter.weightedEvals);

    rep.reason = StopReason::MaxIters;
    const ComplexField vZero(z.n());
    if (gNorm <= std::max(config.gradTolRel * g0, gradFloor)) {
        rep.reason = StopReason::Tolerance;
    } else {
        for (int cycle = 1; cycle <= config.maxCycles; ++cycle) {
            CycleResult res = mgoptCycle(h, 0, z, vZero, counter, &cur);
            z = std::move(res.z);
            cur = std::move(res.eval);
            gNorm = norm2(cur.gradient);
            rep.history.push_back({counter.weightedEvals, cur.value, gNorm});
            if (callback) callback(cycle, z, cur.value, counter.weightedEvals);
            if (gNorm <= std::max(config.gradTolRel * g0, gradFloor)) {
                rep.reason = StopReason::Tolerance;
                break;
            }
            if (counter.weightedEvals >= config.budgetWeightedEvals) {
                rep.reason = StopReason::Budget;
                break;
            }
        }
    }
    rep.finalIterate = std::move(z);
    rep.finalEval = std::move(cur);
    return rep;
}

}  // namespace ptycho
