#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "ptycho/objectives.hpp"

namespace ptycho {

// Weighted objective-evaluation ledger.  Every counted evaluation costs the
// weight of its grid level (1 on the finest, 4^-l on level l), so totals are
// in fine-grid evaluation units.
struct EvalCounter {
    double weightedEvals = 0.0;
    std::map<int, long> perLevelEvals;

    void record(int level, double weight) {
        weightedEvals += weight;
        ++perLevelEvals[level];
    }
};

// An objective bound to its accounting identity (level index + cost weight).
// All solver entry points consume this; each eval() charges the counter once.
struct CountedObjective {
    std::function<ObjectiveEval(const ComplexField&)> fn;
    int level = 0;
    double weight = 1.0;

    ObjectiveEval eval(const ComplexField& z, EvalCounter& counter) const {
        counter.record(level, weight);
        return fn(z);
    }
};

CountedObjective counted(Objective objective, int level = 0, double weight = 1.0);

enum class StopReason { Tolerance, Budget, MaxIters, Stall };

struct HistoryPoint {
    double weightedEvals = 0.0;
    double value = 0.0;
    double gradNorm = 0.0;
};

struct SolverReport {
    ComplexField finalIterate;
    ObjectiveEval finalEval;
    std::vector<HistoryPoint> history;  // initial point + one entry per iteration
    StopReason reason = StopReason::MaxIters;
};

struct SolverConfig {
    int maxIters = 100;
    // stop when ||g|| <= max(gradTolRel * ||g0||, gradTolAbs * (1 + ||z0||))
    double gradTolRel = 0.0;
    double gradTolAbs = 1e-13;
    int lbfgsMemory = 25;
    int linesearchMax = 50;
    int cgMaxIters = 20;
    double cgRelTol = 0.1;
    double maxWeightedEvals = std::numeric_limits<double>::infinity();
};

// (iteration index, current iterate, objective value, weighted evals so far);
// invoked once for the initial point (index 0) and after every iteration.
using IterationCallback =
    std::function<void(int, const ComplexField&, double, double)>;

struct LinesearchResult {
    double alpha = 0.0;
    ComplexField z;
    ObjectiveEval eval;  // at the accepted point; unset when stalled
    bool stalled = false;
    int trials = 0;
};

// Backtracking on plain decrease: alpha = 1, 1/2, 1/4, ... accepted as soon
// as phi(z + alpha d) <= phi(z), at most maxTrials trials.  On stall returns
// alpha = 0 and the input iterate unchanged.  phi0, if given, must be the
// objective value at z (saves one evaluation).
LinesearchResult backtrackingLinesearch(const CountedObjective& obj,
                                        const ComplexField& z, const ComplexField& dir,
                                        EvalCounter& counter, int maxTrials,
                                        std::optional<double> phi0 = std::nullopt);

// Limited-memory BFGS over the real/imag-stacked coefficients.  warmStart, if
// given, must be the objective evaluation at z0 (already paid for).
SolverReport lbfgs(const CountedObjective& obj, const ComplexField& z0,
                   const SolverConfig& config, EvalCounter& counter,
                   const IterationCallback& callback = {},
                   const ObjectiveEval* warmStart = nullptr);

// Newton-CG: each outer iteration solves H p = -g approximately by conjugate
// gradients with finite-difference Hessian-vector products (one counted
// gradient evaluation each), stopping at relative residual cgRelTol or
// cgMaxIters, truncating on negative curvature.
SolverReport truncatedNewton(const CountedObjective& obj, const ComplexField& z0,
                             const SolverConfig& config, EvalCounter& counter,
                             const IterationCallback& callback = {},
                             const ObjectiveEval* warmStart = nullptr);

// Sequential projection sweeps: for each probe in scan order,
//   z <- z + Q_k^T (P_k(z) - Q_k z) / (1 + gamma).
// One full sweep is charged as one fine-level evaluation.  Per-sweep history
// values come from an uncounted diagnostic evaluation of the distance
// objective.
SolverReport pie(const ComplexField& z0, const ScanGeometry& geometry,
                 const DiffractionStack& data, double gamma, int sweeps,
                 EvalCounter& counter, const IterationCallback& callback = {},
                 double maxWeightedEvals = std::numeric_limits<double>::infinity());

}  // namespace ptycho
