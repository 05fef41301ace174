#include "ptycho/solvers.hpp"

#include <cmath>
#include <deque>

#include "ptycho/errors.hpp"

namespace ptycho {
namespace {

struct CurvaturePair {
    ComplexField s, y;
    double sy = 0.0;
};

// Two-loop recursion; returns the search direction -H g.  H0 is the
// Barzilai-Borwein scaling (s'y / y'y) from the newest pair; an empty memory
// yields plain steepest descent.
ComplexField twoLoopDirection(const std::deque<CurvaturePair>& pairs,
                              const ComplexField& g) {
    if (pairs.empty()) return scaled(g, -1.0);
    ComplexField q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
        alpha[i] = dotReal(pairs[i].s, q) / pairs[i].sy;
        axpy(q, -alpha[i], pairs[i].y);
    }
    const CurvaturePair& newest = pairs.back();
    const double gamma = newest.sy / dotReal(newest.y, newest.y);
    q = scaled(q, gamma);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double beta = dotReal(pairs[i].y, q) / pairs[i].sy;
        axpy(q, alpha[i] - beta, pairs[i].s);
    }
    return scaled(q, -1.0);
}

void checkFinite(const ComplexField& z, const char* where) {
    if (!z.isFinite())
        throw NumericError(std::string("non-finite iterate in ") + where);
}

struct StopRule {
    double gradFloor = 0.0;  // absolute
    double gradTolRel = 0.0;
    double g0Norm = 0.0;

    bool satisfied(double gNorm) const {
        return gNorm <= std::max(gradTolRel * g0Norm, gradFloor);
    }
};

}  // namespace

CountedObjective counted(Objective objective, int level, double weight) {
    return CountedObjective{
        [obj = objective](const ComplexField& z) { return evaluate(obj, z); }, level,
        weight};
}

LinesearchResult backtrackingLinesearch(const CountedObjective& obj,
                                        const ComplexField& z, const ComplexField& dir,
                                        EvalCounter& counter, int maxTrials,
                                        std::optional<double> phi0) {
    const double base = phi0 ? *phi0 : obj.eval(z, counter).value;
    double alpha = 1.0;
    LinesearchResult res;
    for (int t = 0; t < maxTrials; ++t) {
        ComplexField trial = z;
        axpy(trial, alpha, dir);
        ObjectiveEval ev = obj.eval(trial, counter);
        ++res.trials;
        if (ev.value <= base) {
            res.alpha = alpha;
            res.z = std::move(trial);
            res.eval = std::move(ev);
            return res;
        }
        alpha *= 0.5;
    }
    res.alpha = 0.0;
    res.z = z;
    res.stalled = true;
    return res;
}

SolverReport lbfgs(const CountedObjective& obj, const ComplexField& z0,
                   const SolverConfig& config, EvalCounter& counter,
                   const IterationCallback& callback, const ObjectiveEval* warmStart) {
    SolverReport rep;
    ComplexField z = z0;
    ObjectiveEval cur = warmStart ? *warmStart : obj.eval(z, counter);
    checkFinite(cur.gradient, "lbfgs");
    const StopRule stop{config.gradTolAbs * (1.0 + norm2(z0)), config.gradTolRel,
                        norm2(cur.gradient)};
    double gNorm = stop.g0Norm;
    rep.history.push_back({counter.weightedEvals, cur.value, gNorm});
    if (callback) callback(0, z, cur.value, counter.weightedEvals);

    std::deque<CurvaturePair> pairs;
    rep.reason = StopReason::MaxIters;
    if (stop.satisfied(gNorm)) {
        rep.reason = StopReason::Tolerance;
    } else {
        for (int iter = 1; iter <= config.maxIters; ++iter) {
            ComplexField dir = twoLoopDirection(pairs, cur.gradient);
            if (dotReal(dir, cur.gradient) >= 0.0) dir = scaled(cur.gradient, -1.0);
            LinesearchResult ls = backtrackingLinesearch(obj, z, dir, counter,
                                                         config.linesearchMax, cur.value);
            if (ls.stalled) {
                rep.reason = StopReason::Stall;
                break;
            }
            checkFinite(ls.z, "lbfgs");
            ComplexField s = sub(ls.z, z);
            ComplexField y = sub(ls.eval.gradient, cur.gradient);
            const double sy = dotReal(s, y);
            if (sy > 1e-12 * norm2(s) * norm2(y)) {
                pairs.push_back({std::move(s), std::move(y), sy});
                if (static_cast<int>(pairs.size()) > config.lbfgsMemory)
                    pairs.pop_front();
            }
            z = std::move(ls.z);
            cur = std::move(ls.eval);
            gNorm = norm2(cur.gradient);
            rep.history.push_back({counter.weightedEvals, cur.value, gNorm});
            if (callback) callback(iter, z, cur.value, counter.weightedEvals);
            if (stop.satisfied(gNorm)) {
                rep.reason = StopReason::Tolerance;
                break;
            }
            if (counter.weightedEvals >= config.maxWeightedEvals) {
                rep.reason = StopReason::Budget;
                break;
            }
        }
    }
    rep.finalIterate = std::move(z);
    rep.finalEval = std::move(cur);
    return rep;
}

SolverReport truncatedNewton(const CountedObjective& obj, const ComplexField& z0,
                             const SolverConfig& config, EvalCounter& counter,
                             const IterationCallback& callback,
                             const ObjectiveEval* warmStart) {
    SolverReport rep;
    ComplexField z = z0;
    ObjectiveEval cur = warmStart ? *warmStart : obj.eval(z, counter);
    checkFinite(cur.gradient, "truncatedNewton");
    const StopRule stop{config.gradTolAbs * (1.0 + norm2(z0)), config.gradTolRel,
                        norm2(cur.gradient)};
    double gNorm = stop.g0Norm;
    rep.history.push_back({counter.weightedEvals, cur.value, gNorm});
    if (callback) callback(0, z, cur.value, counter.weightedEvals);

    // finite-difference Hessian-vector product: (grad(z + delta v) - g) / delta
    const auto hessVec = [&](const ComplexField& v) {
        const double vNorm = norm2(v);
        if (vNorm == 0.0) return ComplexField(z.n());
        const double delta = 1e-6 * (1.0 + norm2(z)) / vNorm;
        ComplexField zp = z;
        axpy(zp, delta, v);
        ObjectiveEval ev = obj.eval(zp, counter);
        ComplexField hv = sub(ev.gradient, cur.gradient);
        return scaled(hv, 1.0 / delta);
    };

    rep.reason = StopReason::MaxIters;
    if (stop.satisfied(gNorm)) {
        rep.reason = StopReason::Tolerance;
    } else {
        for (int iter = 1; iter <= config.maxIters; ++iter) {
            // CG on H x = -g from x = 0
            ComplexField x(z.n());
            ComplexField r = scaled(cur.gradient, -1.0);
            const double rhsNorm = norm2(r);
            ComplexField p = r;
            double rs = dotReal(r, r);
            for (int cg = 0; cg < config.cgMaxIters; ++cg) {
                ComplexField hp = hessVec(p);
                const double pHp = dotReal(p, hp);
                if (pHp <= 0.0) {
                    // negative curvature: keep what CG built, or fall back to
                    // steepest descent if it happened on the first iteration
                    if (cg == 0) x = r;
                    break;
                }
                const double step = rs / pHp;
                axpy(x, step, p);
                axpy(r, -step, hp);
                const double rsNew = dotReal(r, r);
                if (std::sqrt(rsNew) <= config.cgRelTol * rhsNorm) break;
                ComplexField pNext = r;
                axpy(pNext, rsNew / rs, p);  // p = r + beta p
                p = std::move(pNext);
                rs = rsNew;
            }
            ComplexField dir = std::move(x);
            if (norm2(dir) == 0.0 || dotReal(dir, cur.gradient) >= 0.0)
                dir = scaled(cur.gradient, -1.0);
            LinesearchResult ls = backtrackingLinesearch(obj, z, dir, counter,
                                                         config.linesearchMax, cur.value);
            if (ls.stalled) {
                rep.reason = StopReason::Stall;
                break;
            }
            checkFinite(ls.z, "truncatedNewton");
            z = std::move(ls.z);
            cur = std::move(ls.eval);
            gNorm = norm2(cur.gradient);
            rep.history.push_back({counter.weightedEvals, cur.value, gNorm});
            if (callback) callback(iter, z, cur.value, counter.weightedEvals);
            if (stop.satisfied(gNorm)) {
                rep.reason = StopReason::Tolerance;
                break;
            }
            if (counter.weightedEvals >= config.maxWeightedEvals) {
                rep.reason = StopReason::Budget;
                break;
            }
        }
    }
    rep.finalIterate = std::move(z);
    rep.finalEval = std::move(cur);
    return rep;
}

SolverReport pie(const ComplexField& z0, const ScanGeometry& geometry,
                 const DiffractionStack& data, double gamma, int sweeps,
                 EvalCounter& counter, const IterationCallback& callback,
                 double maxWeightedEvals) {
    if (gamma < 0.0) throw ConfigError("pie: gamma must be non-negative");
    Objective diag{MetricKind::Distance, &geometry, &data, nullptr};
    SolverReport rep;
    ComplexField z = z0;
    {
        ObjectiveEval ev = evaluate(diag, z);  // uncounted diagnostic
        rep.history.push_back({counter.weightedEvals, ev.value, norm2(ev.gradient)});
        if (callback) callback(0, z, ev.value, counter.weightedEvals);
    }
    rep.reason = StopReason::MaxIters;
    const double damping = 1.0 / (1.0 + gamma);
    for (int sweep = 1; sweep <= sweeps; ++sweep) {
        for (int k = 0; k < geometry.probeCount(); ++k) {
            const ProbeWindow& w = geometry.windows[k];
            ComplexField proj = projectModulus(z, w, data.patterns[k]);
            for (int r = w.row0; r < w.row0 + w.width; ++r)
                for (int c = w.col0; c < w.col0 + w.width; ++c)
                    z.at(r, c) += damping * (proj.at(r, c) - z.at(r, c));
        }
        checkFinite(z, "pie");
        counter.record(0, 1.0);  // one sweep costs one fine-level evaluation
        ObjectiveEval ev = evaluate(diag, z);  // uncounted diagnostic
        rep.history.push_back({counter.weightedEvals, ev.value, norm2(ev.gradient)});
        if (callback) callback(sweep, z, ev.value, counter.weightedEvals);
        if (counter.weightedEvals >= maxWeightedEvals) {
            rep.reason = StopReason::Budget;
            break;
        }
    }
    rep.finalIterate = std::move(z);
    rep.finalEval = evaluate(diag, rep.finalIterate);  // uncounted diagnostic
    return rep;
}

}  // namespace ptycho
