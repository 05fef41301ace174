#include "ptycho/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ptycho/errors.hpp"
#include "ptycho/image_io.hpp"
#include "ptycho/metrics.hpp"

namespace ptycho {
namespace {

namespace fs = std::filesystem;

std::string noiseLabel(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", level);
    std::string s(buf);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

void checkConfig(const ExperimentConfig& cfg) {
    if (cfg.n < 16 || !std::has_single_bit(static_cast<unsigned>(cfg.n)))
        throw ConfigError("n must be a power of two >= 16");
    if (cfg.noiseLevels.empty()) throw ConfigError("need at least one noise level");
    for (double level : cfg.noiseLevels)
        if (level < 0.0) throw ConfigError("noise levels must be non-negative");
    if (cfg.budgetWeightedEvals <= 0.0) throw ConfigError("budget must be positive");
    if (cfg.maxCycles < 1) throw ConfigError("max cycles must be positive");
    if (cfg.solver == SolverKind::Mgopt) {
        if (cfg.depth < 1) throw ConfigError("hierarchy depth must be >= 1");
        if ((cfg.n >> (cfg.depth - 1)) < 8)
            throw ConfigError("hierarchy depth too large for n = " +
                              std::to_string(cfg.n));
    }
    if (cfg.pieGamma < 0.0) throw ConfigError("gamma must be non-negative");
}

void checkFiniteRun(const RunResult& run) {
    if (!run.reconstruction.isFinite())
        throw NumericError("reconstruction contains NaN/Inf");
    for (const ConvergenceRecord& r : run.records)
        if (!std::isfinite(r.phi) || !std::isfinite(r.relErr))
            throw NumericError("non-finite value in convergence history");
}

}  // namespace

std::string solverName(SolverKind kind) {
    switch (kind) {
        case SolverKind::Pie: return "pie";
        case SolverKind::Lbfgs: return "lbfgs";
        case SolverKind::TruncatedNewton: return "tn";
        case SolverKind::Mgopt: return "mgopt";
    }
    throw ConfigError("unknown solver kind");
}

SolverKind parseSolverKind(const std::string& name) {
    if (name == "pie") return SolverKind::Pie;
    if (name == "lbfgs") return SolverKind::Lbfgs;
    if (name == "tn") return SolverKind::TruncatedNewton;
    if (name == "mgopt") return SolverKind::Mgopt;
    throw ConfigError("unknown solver '" + name + "' (pie, lbfgs, tn, mgopt)");
}

MetricKind parseMetricKind(const std::string& name) {
    if (name == "distance") return MetricKind::Distance;
    if (name == "intensity") return MetricKind::IntensityGaussian;
    throw ConfigError("unknown metric '" + name + "' (distance, intensity)");
}

std::string stopReasonName(StopReason reason) {
    switch (reason) {
        case StopReason::Tolerance: return "tolerance";
        case StopReason::Budget: return "budget";
        case StopReason::MaxIters: return "max_iters";
        case StopReason::Stall: return "stall";
    }
    return "unknown";
}

std::string formatDouble(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

RunResult runReconstruction(const ExperimentConfig& config, const GroundTruth& truth,
                            const ScanGeometry& geometry, const DiffractionStack& data,
                            double noiseLevel) {
    RunResult run;
    run.noiseLevel = noiseLevel;
    const ComplexField z0 = randomInitialGuess(config.n, config.seed);

    const IterationCallback record = [&](int cycle, const ComplexField& z, double value,
                                         double weightedEvals) {
        ConvergenceRecord r;
        r.cycle = cycle;
        r.weightedEvals = weightedEvals;
        r.phi = value;
        r.relErr = relativeError(z, truth.object);
        r.magErr = magnitudeRelError(z, truth.object);
        r.phaseSsim = phaseSSIM(z, truth.object);
        run.records.push_back(r);
    };

    const MetricKind effectiveMetric =
        config.solver == SolverKind::Pie ? MetricKind::Distance : config.metric;
    {
        Objective diag{effectiveMetric, &geometry, &data, nullptr};
        run.phiAtTruth = evaluate(diag, truth.object).value;  // uncounted diagnostic
    }

    SolverReport rep;
    switch (config.solver) {
        case SolverKind::Pie: {
            const int sweeps = std::max(1, static_cast<int>(config.budgetWeightedEvals));
            rep = pie(z0, geometry, data, config.pieGamma, sweeps, run.counter, record,
                      config.budgetWeightedEvals);
            run.levelSizes = {config.n};
            break;
        }
        case SolverKind::Lbfgs:
        case SolverKind::TruncatedNewton: {
            Objective obj{config.metric, &geometry, &data, nullptr};
            SolverConfig sc;
            sc.maxIters = config.maxCycles;
            sc.gradTolRel = config.gradTolRel;
            sc.gradTolAbs = config.mgopt.gradTolAbs;
            sc.lbfgsMemory = config.mgopt.lbfgsMemory;
            sc.linesearchMax = config.mgopt.linesearchMax;
            sc.maxWeightedEvals = config.budgetWeightedEvals;
            rep = (config.solver == SolverKind::Lbfgs)
                      ? lbfgs(counted(obj), z0, sc, run.counter, record)
                      : truncatedNewton(counted(obj), z0, sc, run.counter, record);
            run.levelSizes = {config.n};
            break;
        }
        case SolverKind::Mgopt: {
            Hierarchy h = buildHierarchy(geometry, data, config.metric, config.depth,
                                         config.mgopt);
            MgoptDriverConfig dc;
            dc.budgetWeightedEvals = config.budgetWeightedEvals;
            dc.gradTolRel = config.gradTolRel;
            dc.gradTolAbs = config.mgopt.gradTolAbs;
            dc.maxCycles = config.maxCycles;
            rep = mgoptDriver(h, z0, dc, run.counter, record);
            for (const GridLevel& level : h.levels) run.levelSizes.push_back(level.n);
            break;
        }
    }

    run.reconstruction = std::move(rep.finalIterate);
    run.reason = rep.reason;
    checkFiniteRun(run);
    return run;
}

void writeHistoryCsv(const std::string& path,
                     const std::vector<ConvergenceRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "cycle,weighted_evals,phi,rel_err,mag_err,phase_ssim\n";
    for (const ConvergenceRecord& r : records)
        out << r.cycle << ',' << formatDouble(r.weightedEvals) << ','
            << formatDouble(r.phi) << ',' << formatDouble(r.relErr) << ','
            << formatDouble(r.magErr) << ',' << formatDouble(r.phaseSsim) << '\n';
    if (!out) throw IoError(path + ": write failed");
}

void writeWorkAllocationCsv(const std::string& path, const std::string& scheme,
                            double noiseLevel, const EvalCounter& counter,
                            const std::vector<int>& levelSizes) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "scheme,noise_level";
    for (int n : levelSizes) out << ",evals_n" << n;
    out << ",weighted_total\n";
    out << scheme << ',' << formatDouble(noiseLevel);
    for (std::size_t l = 0; l < levelSizes.size(); ++l) {
        const auto it = counter.perLevelEvals.find(static_cast<int>(l));
        out << ',' << (it == counter.perLevelEvals.end() ? 0L : it->second);
    }
    out << ',' << formatDouble(counter.weightedEvals) << '\n';
    if (!out) throw IoError(path + ": write failed");
}

std::vector<std::string> runExperiment(const ExperimentConfig& config) {
    checkConfig(config);
    const RealGrid magnitude = loadImage(config.magnitudePath);
    const RealGrid phase = loadImage(config.phasePath);
    if (magnitude.n() != config.n || phase.n() != config.n)
        throw ConfigError("source images must be " + std::to_string(config.n) + "x" +
                          std::to_string(config.n));

    const GroundTruth truth = buildGroundTruth(magnitude, phase);
    const ScanGeometry geometry = generateRasterScan(config.n, config.n / 2, config.n / 4);
    const DiffractionStack clean = simulate(truth.object, geometry);

    std::error_code ec;
    fs::create_directories(config.outputDir, ec);
    if (ec) throw IoError(config.outputDir + ": cannot create output directory");

    std::vector<std::string> written;
    const std::string truthPath = config.outputDir + "/ground_truth.ptyf";
    saveRawField(truth.object, truthPath);
    written.push_back(truthPath);

    const std::string runsPath = config.outputDir + "/runs.csv";
    std::ofstream runs(runsPath, std::ios::trunc);
    if (!runs) throw IoError(runsPath + ": cannot open for writing");
    runs << "scheme,metric,noise_level,rows,weighted_evals,final_phi,final_rel_err,"
            "final_mag_err,final_phase_ssim,stop_reason\n";

    for (double level : config.noiseLevels) {
        const DiffractionStack data = addNoise(clean, NoiseSpec{level, config.seed});
        const RunResult run =
            runReconstruction(config, truth, geometry, data, level);

        const std::string dir =
            config.outputDir + "/" + solverName(config.solver) + "_noise" +
            noiseLabel(level);
        fs::create_directories(dir, ec);
        if (ec) throw IoError(dir + ": cannot create run directory");

        const std::string historyPath = dir + "/history.csv";
        writeHistoryCsv(historyPath, run.records);
        written.push_back(historyPath);

        const std::string workPath = dir + "/work_allocation.csv";
        writeWorkAllocationCsv(workPath, solverName(config.solver), level, run.counter,
                               run.levelSizes);
        written.push_back(workPath);

        const std::string fieldPath = dir + "/reconstruction.ptyf";
        saveRawField(run.reconstruction, fieldPath);
        written.push_back(fieldPath);

        RealGrid mag(run.reconstruction.n());
        for (std::size_t i = 0; i < mag.size(); ++i)
            mag[i] = std::abs(run.reconstruction[i]);
        const RealGrid ph = canonicalPhase(run.reconstruction);
        savePgm(mag, dir + "/magnitude.pgm");
        saveRawGrid(mag, dir + "/magnitude.ptyf");
        savePgm(ph, dir + "/phase.pgm");
        saveRawGrid(ph, dir + "/phase.ptyf");
        written.push_back(dir + "/magnitude.pgm");
        written.push_back(dir + "/magnitude.ptyf");
        written.push_back(dir + "/phase.pgm");
        written.push_back(dir + "/phase.ptyf");

        const ConvergenceRecord& last = run.records.back();
        runs << solverName(config.solver) << ','
             << (config.solver == SolverKind::Pie
                     ? "distance"
                     : (config.metric == MetricKind::Distance ? "distance" : "intensity"))
             << ',' << formatDouble(level) << ',' << run.records.size() << ','
             << formatDouble(run.counter.weightedEvals) << ',' << formatDouble(last.phi)
             << ',' << formatDouble(last.relErr) << ',' << formatDouble(last.magErr)
             << ',' << formatDouble(last.phaseSsim) << ',' << stopReasonName(run.reason)
             << '\n';
    }
    if (!runs) throw IoError(runsPath + ": write failed");
    runs.close();
    written.push_back(runsPath);
    return written;
}

}  // namespace ptycho
