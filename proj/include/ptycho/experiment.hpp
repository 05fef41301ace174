#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptycho/forward.hpp"
#include "ptycho/multigrid.hpp"
#include "ptycho/solvers.hpp"

namespace ptycho {

enum class SolverKind { Pie, Lbfgs, TruncatedNewton, Mgopt };

std::string solverName(SolverKind kind);
SolverKind parseSolverKind(const std::string& name);
MetricKind parseMetricKind(const std::string& name);
std::string stopReasonName(StopReason reason);

struct ExperimentConfig {
    int n = 128;
    std::string magnitudePath;
    std::string phasePath;
    std::vector<double> noiseLevels = {0.0};
    SolverKind solver = SolverKind::Mgopt;
    MetricKind metric = MetricKind::Distance;  // ignored by PIE (modulus-based)
    int depth = 2;
    double budgetWeightedEvals = 100.0;
    std::uint64_t seed = 1;
    std::string outputDir = "out";
    double pieGamma = 0.0;
    double gradTolRel = 0.0;
    int maxCycles = 1000000;
    MgoptConfig mgopt;
};

// One row per driver iteration (LBFGS/TN iteration, MG/OPT cycle, PIE sweep),
// plus the initial point as row 0.  Metric columns are diagnostics computed
// outside the evaluation budget.
struct ConvergenceRecord {
    int cycle = 0;
    double weightedEvals = 0.0;
    double phi = 0.0;
    double relErr = 0.0;
    double magErr = 0.0;
    double phaseSsim = 0.0;
};

struct RunResult {
    std::vector<ConvergenceRecord> records;
    ComplexField reconstruction;
    EvalCounter counter;
    StopReason reason = StopReason::MaxIters;
    double noiseLevel = 0.0;
    double phiAtTruth = 0.0;  // objective at the true object on this run's data
    std::vector<int> levelSizes;  // grid side per hierarchy level used
};

// Reconstructs from one noisy stack.  `geometry`/`data` must live on the
// config's grid; the ground truth drives the diagnostic metric columns.
RunResult runReconstruction(const ExperimentConfig& config, const GroundTruth& truth,
                            const ScanGeometry& geometry, const DiffractionStack& data,
                            double noiseLevel);

// Full protocol: load source images, synthesize the object, simulate clean
// data, then for each configured noise level perturb + reconstruct + write
//   <outputDir>/<solver>_noise<label>/{history.csv, work_allocation.csv,
//       reconstruction.ptyf, magnitude.pgm/.ptyf, phase.pgm/.ptyf}
// plus <outputDir>/{ground_truth.ptyf, runs.csv}.  Returns all written paths.
std::vector<std::string> runExperiment(const ExperimentConfig& config);

void writeHistoryCsv(const std::string& path,
                     const std::vector<ConvergenceRecord>& records);
void writeWorkAllocationCsv(const std::string& path, const std::string& scheme,
                            double noiseLevel, const EvalCounter& counter,
                            const std::vector<int>& levelSizes);

// %.17g, enough digits for exact double round-trips in the CSV files.
std::string formatDouble(double v);

}  // namespace ptycho
