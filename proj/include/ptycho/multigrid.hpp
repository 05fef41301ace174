#pragma once

#include <vector>

#include "ptycho/solvers.hpp"

namespace ptycho {

// Grid transfers connecting an n grid to its n/2 coarse companion.
//
// restrictField averages disjoint 2x2 blocks (summed pairwise so that
// restrictField(prolongField(u)) == u bitwise); prolongField copies each
// coarse pixel into its 2x2 block.  As real-linear maps they satisfy
// <prolong u, w>_R = 4 <u, restrict w>_R.
ComplexField restrictField(const ComplexField& fine);
ComplexField prolongField(const ComplexField& coarse);

// Diffraction data moves to the coarse grid through its frequency support:
// keep the centered (n/2)x(n/2) block of the fftshifted pattern, undo the
// shift on the small grid, and scale by (1/2)^4 = 1/16 so that coarse
// intensities match what simulating the restricted object would produce
// (|F_H|^2 of a field with half the samples carries 1/16 of the DC energy).
DiffractionStack restrictData(const DiffractionStack& fine);

// One level of the multigrid hierarchy.  Geometry is regenerated at each
// size (window n/2, stride n/4 scale down with the grid), not algebraically
// restricted, so every level is a genuine ptychography problem.
struct GridLevel {
    int n = 0;
    ScanGeometry geometry;
    DiffractionStack data;
    MetricKind kind = MetricKind::Distance;
    int levelIndex = 0;
    double costWeight = 1.0;  // 4^-levelIndex
};

GridLevel buildCoarseLevel(const GridLevel& fine);

struct MgoptConfig {
    int k1 = 1;  // pre-smoothing iterations
    int k2 = 1;  // post-smoothing iterations
    // 0 resolves to 3 for depth <= 2 and 100 for deeper hierarchies
    int coarsestMaxIters = 0;
    double coarsestGradTolRel = 1e-4;
    double intermediateGradTolRel = 1e-3;
    int lbfgsMemory = 25;
    int linesearchMax = 50;
    double gradTolAbs = 1e-13;
};

struct Hierarchy {
    std::vector<GridLevel> levels;  // [0] is the finest
    MgoptConfig options;
    int coarsestMaxIters = 3;  // resolved from options at build time

    int depth() const { return static_cast<int>(levels.size()); }
};

// Builds depth levels by repeated coarsening.  Requires the coarsest grid to
// be at least 8 (so depth <= log2(n) - 2).
Hierarchy buildHierarchy(const ScanGeometry& geometry, const DiffractionStack& data,
                         MetricKind kind, int depth, const MgoptConfig& options = {});

struct CycleResult {
    ComplexField z;
    ObjectiveEval eval;  // at the level's v-shifted objective, final iterate
};

// One V-cycle of the optimization-based multigrid scheme at `level` with
// shift v (zero field at the top):
//   coarsest: solve the shifted problem with LBFGS (capped iterations);
//   else:     k1 LBFGS iterations, restrict the iterate, recurse with the
//             first-order-coherent shift
//                 v_H = restrict(v) + grad phi_H(z_H) - restrict(grad phi_h(z_h))
//             (plain gradients), prolong the coarse correction, accept it
//             through a backtracking linesearch, k2 LBFGS iterations.
// warmStart, if given, must be the shifted objective evaluation at z.
CycleResult mgoptCycle(const Hierarchy& hierarchy, int level, const ComplexField& z,
                       const ComplexField& v, EvalCounter& counter,
                       const ObjectiveEval* warmStart = nullptr);

struct MgoptDriverConfig {
    double budgetWeightedEvals = 100.0;
    double gradTolRel = 0.0;
    double gradTolAbs = 1e-13;
    int maxCycles = 1000000;
};

// Repeats top-level V-cycles until the relative gradient tolerance, the
// weighted evaluation budget, or maxCycles is hit.  History carries one entry
// for the initial point and one per completed cycle.  A depth-1 hierarchy
// degenerates to plain LBFGS with the same stopping rules.
SolverReport mgoptDriver(const Hierarchy& hierarchy, const ComplexField& z0,
                         const MgoptDriverConfig& config, EvalCounter& counter,
                         const IterationCallback& callback = {});

}  // namespace ptycho
