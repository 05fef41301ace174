#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ptycho/errors.hpp"
#include "ptycho/experiment.hpp"
#include "ptycho/image_io.hpp"
#include "ptycho/metrics.hpp"
#include "ptycho/multigrid.hpp"

namespace fs = std::filesystem;
using namespace ptycho;

namespace {

struct SimulateArgs {
    int n = 128;
    std::string magnitudePath, phasePath, outputPath, truthOutPath;
    double noise = 0.0;
    std::uint64_t seed = 1;
};

int runSimulate(const SimulateArgs& a) {
    const RealGrid magnitude = loadImage(a.magnitudePath);
    const RealGrid phase = loadImage(a.phasePath);
    if (magnitude.n() != a.n || phase.n() != a.n)
        throw ConfigError("source images must be " + std::to_string(a.n) + "x" +
                          std::to_string(a.n));
    const GroundTruth truth = buildGroundTruth(magnitude, phase);
    const ScanGeometry geometry = generateRasterScan(a.n, a.n / 2, a.n / 4);
    DiffractionStack data = simulate(truth.object, geometry);
    if (a.noise > 0.0) data = addNoise(data, NoiseSpec{a.noise, a.seed});
    saveRawStack(data, a.outputPath);
    if (!a.truthOutPath.empty()) saveRawField(truth.object, a.truthOutPath);
    std::cout << "wrote " << a.outputPath << ": n=" << a.n
              << " probes=" << geometry.probeCount() << " noise=" << a.noise << "\n";
    return 0;
}

int runMetrics(const std::string& reconstructionPath, const std::string& truthPath) {
    const ComplexField z = loadRawField(reconstructionPath);
    const ComplexField zTrue = loadRawField(truthPath);
    std::cout << "rel_err,mag_err,phase_ssim\n"
              << formatDouble(relativeError(z, zTrue)) << ','
              << formatDouble(magnitudeRelError(z, zTrue)) << ','
              << formatDouble(phaseSSIM(z, zTrue)) << "\n";
    return 0;
}

int runHierarchyCheck(int n, int depth, std::uint64_t seed) {
    if (depth < 2) throw ConfigError("hierarchy-check needs depth >= 2");

    // synthetic problem: random smooth-ish object, standard scan
    const ComplexField object = randomInitialGuess(n, seed);
    const ScanGeometry geometry = generateRasterScan(n, n / 2, n / 4);
    const DiffractionStack data = simulate(object, geometry);
    const Hierarchy h = buildHierarchy(geometry, data, MetricKind::Distance, depth);

    bool allPass = true;
    const auto report = [&](const char* name, bool pass, double residual) {
        std::cout << (pass ? "PASS" : "FAIL") << " " << name
                  << " (residual = " << formatDouble(residual) << ")\n";
        allPass = allPass && pass;
    };

    // 1. restrict(prolong(u)) == u, bitwise
    {
        const ComplexField u = randomInitialGuess(n / 2, seed + 1);
        const ComplexField rt = restrictField(prolongField(u));
        double maxDiff = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            maxDiff = std::max(maxDiff, std::abs(rt[i] - u[i]));
        report("restrict-prolong identity", maxDiff == 0.0, maxDiff);
    }

    // 2. <prolong u, w> == 4 <u, restrict w>
    {
        const ComplexField u = randomInitialGuess(n / 2, seed + 2);
        const ComplexField w = randomInitialGuess(n, seed + 3);
        const double lhs = dotReal(prolongField(u), w);
        const double rhs = 4.0 * dotReal(u, restrictField(w));
        const double rel = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
        report("transfer adjointness", rel <= 1e-12, rel);
    }

    // 3. data restriction calibration on a constant object: the restricted
    //    DC intensity must equal the coarse-simulated DC intensity
    {
        const ComplexField constant(n, cdouble{0.7, 0.0});
        const DiffractionStack fine = simulate(constant, geometry);
        const DiffractionStack restricted = restrictData(fine);
        const DiffractionStack coarse =
            simulate(restrictField(constant), h.levels[1].geometry);
        double worst = 0.0;
        for (int k = 0; k < restricted.count(); ++k) {
            const double a = restricted.patterns[k].at(0, 0);
            const double b = coarse.patterns[k].at(0, 0);
            worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
        }
        report("data restriction DC calibration", worst <= 1e-10, worst);
    }

    // 4. first-order coherence of the corrected coarse objective: its
    //    gradient at the restricted point equals the restricted fine gradient
    {
        const ComplexField z = randomInitialGuess(n, seed + 4);
        const ComplexField v = scaled(randomInitialGuess(n, seed + 5), 0.1);
        Objective fineObj{MetricKind::Distance, &h.levels[0].geometry, &h.levels[0].data,
                          &v};
        const ObjectiveEval fine = evaluate(fineObj, z);
        const ComplexField zH = restrictField(z);

        Objective coarsePlain{MetricKind::Distance, &h.levels[1].geometry,
                              &h.levels[1].data, nullptr};
        const ObjectiveEval coarse = evaluate(coarsePlain, zH);
        ComplexField gFine = fine.gradient;  // shifted gradient
        axpy(gFine, 1.0, v);                 // plain fine gradient
        ComplexField vH = restrictField(v);
        axpy(vH, 1.0, coarse.gradient);
        {
            ComplexField gFineR = restrictField(gFine);
            axpy(vH, -1.0, gFineR);
        }
        Objective coarseShifted{MetricKind::Distance, &h.levels[1].geometry,
                                &h.levels[1].data, &vH};
        const ObjectiveEval shifted = evaluate(coarseShifted, zH);
        const ComplexField want = restrictField(fine.gradient);
        const double rel =
            norm2(sub(shifted.gradient, want)) / std::max(1.0, norm2(want));
        report("first-order coherence of the shifted coarse objective", rel <= 1e-12,
               rel);
    }

    if (!allPass) throw NumericError("hierarchy-check failed");
    std::cout << "all hierarchy checks passed\n";
    return 0;
}

// Collect runs.csv + work_allocation.csv summaries under each directory.
int runReport(const std::vector<std::string>& dirs) {
    bool printedHeader = false;
    for (const std::string& dir : dirs) {
        const fs::path runsPath = fs::path(dir) / "runs.csv";
        if (!fs::exists(runsPath)) throw IoError(runsPath.string() + ": not found");
        std::ifstream in(runsPath);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first) {
                if (!printedHeader) {
                    std::cout << "directory," << line << "\n";
                    printedHeader = true;
                }
                first = false;
                continue;
            }
            if (!line.empty()) std::cout << dir << "," << line << "\n";
        }
    }
    std::cout << "\nwork allocation:\n";
    for (const std::string& dir : dirs) {
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (entry.path().filename() != "work_allocation.csv") continue;
            std::ifstream in(entry.path());
            std::string header, row;
            std::getline(in, header);
            std::getline(in, row);
            std::cout << entry.path().string() << "\n  " << header << "\n  " << row
                      << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ptychographic phase retrieval: simulation, reconstruction, metrics"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simCmd = app.add_subcommand("simulate", "synthesize diffraction data");
    simCmd->add_option("--n", sim.n, "grid side (power of two)");
    simCmd->add_option("--magnitude", sim.magnitudePath, "magnitude image (PGM/PTYF)")
        ->required();
    simCmd->add_option("--phase", sim.phasePath, "phase image (PGM/PTYF)")->required();
    simCmd->add_option("--noise", sim.noise, "relative L2 noise level");
    simCmd->add_option("--seed", sim.seed, "noise RNG seed");
    simCmd->add_option("--output", sim.outputPath, "output stack (PTYF)")->required();
    simCmd->add_option("--truth-out", sim.truthOutPath,
                       "also write the synthesized object (PTYF)");

    ExperimentConfig cfg;
    std::string solverName_ = "mgopt", metricName = "distance";
    int threads = 0;
    CLI::App* recCmd = app.add_subcommand("reconstruct", "run the reconstruction protocol");
    recCmd->set_config("--config", "", "read options from an INI file");
    recCmd->add_option("--n", cfg.n, "grid side (power of two >= 16)");
    recCmd->add_option("--magnitude", cfg.magnitudePath, "magnitude image")->required();
    recCmd->add_option("--phase", cfg.phasePath, "phase image")->required();
    recCmd->add_option("--noise-levels", cfg.noiseLevels,
                       "relative noise levels (repeatable)");
    recCmd->add_option("--solver", solverName_, "pie | lbfgs | tn | mgopt");
    recCmd->add_option("--metric", metricName, "distance | intensity");
    recCmd->add_option("--depth", cfg.depth, "hierarchy depth (mgopt)");
    recCmd->add_option("--budget", cfg.budgetWeightedEvals,
                       "weighted objective-evaluation budget");
    recCmd->add_option("--seed", cfg.seed, "seed for noise and initial guess");
    recCmd->add_option("--output-dir", cfg.outputDir, "output directory");
    recCmd->add_option("--gamma", cfg.pieGamma, "PIE damping");
    recCmd->add_option("--grad-tol-rel", cfg.gradTolRel, "relative gradient tolerance");
    recCmd->add_option("--max-cycles", cfg.maxCycles, "cycle/iteration cap");
    recCmd->add_option("--k1", cfg.mgopt.k1, "pre-smoothing iterations");
    recCmd->add_option("--k2", cfg.mgopt.k2, "post-smoothing iterations");
    recCmd->add_option("--coarsest-max-iters", cfg.mgopt.coarsestMaxIters,
                       "coarsest-solve iteration cap (0 = auto)");
    recCmd->add_option("--memory", cfg.mgopt.lbfgsMemory, "LBFGS memory");
    recCmd->add_option("--linesearch-max", cfg.mgopt.linesearchMax,
                       "maximum linesearch trials");
    recCmd->add_option("--threads", threads, "OpenMP thread count (0 = default)");

    std::string metReconPath, metTruthPath;
    CLI::App* metCmd = app.add_subcommand("metrics", "compare a reconstruction to truth");
    metCmd->add_option("--reconstruction", metReconPath, "reconstruction (PTYF field)")
        ->required();
    metCmd->add_option("--truth", metTruthPath, "ground truth (PTYF field)")->required();

    int hcN = 64, hcDepth = 2;
    std::uint64_t hcSeed = 1;
    CLI::App* hcCmd = app.add_subcommand("hierarchy-check",
                                         "verify the grid-transfer operators");
    hcCmd->add_option("--n", hcN, "fine grid side");
    hcCmd->add_option("--depth", hcDepth, "hierarchy depth (>= 2)");
    hcCmd->add_option("--seed", hcSeed, "RNG seed");

    std::vector<std::string> reportDirs;
    CLI::App* repCmd = app.add_subcommand("report", "summarize experiment outputs");
    repCmd->add_option("--dir", reportDirs, "experiment output directory (repeatable)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (simCmd->parsed()) return runSimulate(sim);
        if (recCmd->parsed()) {
            cfg.solver = parseSolverKind(solverName_);
            cfg.metric = parseMetricKind(metricName);
            if (threads > 0) omp_set_num_threads(threads);
            const auto written = runExperiment(cfg);
            for (const std::string& path : written) std::cout << "wrote " << path << "\n";
            return 0;
        }
        if (metCmd->parsed()) return runMetrics(metReconPath, metTruthPath);
        if (hcCmd->parsed()) return runHierarchyCheck(hcN, hcDepth, hcSeed);
        if (repCmd->parsed()) return runReport(reportDirs);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
