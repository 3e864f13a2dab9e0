#pragma once

#include "adm/config.hpp"
#include "adm/control_loop.hpp"
#include "adm/estimator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adm {

enum class RunMode { adaptive, baseline };

std::string to_string(RunMode mode);

struct RunOutcome {
    RunMode mode = RunMode::adaptive;
    ProbeDataset probes;
    InitReport init;
    BvlsSummary initial_solve;
    /// RMS residual of the raw probe surfaces after projection onto the basis.
    double probe_fit_rms = 0.0;
    LoopResult loop;
};

/// Probes -> batch init -> bounded solve -> control loop, entirely in memory.
/// The baseline mode freezes the model at its batch estimate.
RunOutcome simulate(const ExperimentConfig& cfg, RunMode mode, const IterationSink& sink = {});

/// Writes the run directory. summary.json is written last, and every file goes through
/// write-then-rename, so a directory holding summary.json is complete.
///
///   config.json         resolved configuration
///   iterations.csv      one row per iteration (kIterationColumns)
///   voltages.csv        applied voltages per iteration
///   summary.json        best iteration and headline numbers
///   final_state.rls     estimator state after the last update
///   desired.surf        target surface
///   best_produced.surf  produced surface at the best iteration
///   probes/             U.txt, B.txt, Z.txt, theta.txt
///   checkpoints/        k_NNN.rls, k_NNN_b.txt, k_NNN_z.txt (when record_checkpoints)
void write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunOutcome& outcome);

/// simulate + write_run into cfg.output_dir.
RunOutcome cmd_run(const ExperimentConfig& cfg);
RunOutcome cmd_baseline(const ExperimentConfig& cfg);

struct SweepRow {
    int n = 0;
    bool ok = false;
    int best_k = -1;
    double best_rms_central = 0.0;
    double best_rms_global = 0.0;
    double probe_fit_rms = 0.0;
    std::string error;
};

inline const std::vector<std::string> kSweepColumns = {"n",         "best_k",        "best_rms_central",
                                                       "best_rms_global", "probe_fit_rms", "status",
                                                       "error"};

/// Runs one adaptive experiment per n (fresh basis, probes from the shared seed) into
/// cfg.output_dir/n_NNN and writes cfg.output_dir/sweep.csv. Failures are recorded per
/// row and the sweep continues. Up to `jobs` entries run concurrently.
std::vector<SweepRow> cmd_sweep_n(const ExperimentConfig& cfg, const std::vector<int>& n_list, int jobs = 1,
                                  bool write_runs = true);

std::string sweep_csv(const std::vector<SweepRow>& rows);

/// cfg.output_dir/n_NNN.
std::filesystem::path sweep_entry_dir(const ExperimentConfig& cfg, int n);

struct ReportSummary {
    int best_k = 0;
    int csv_best_k = 0;
    double best_rms_central = 0.0;
    std::vector<std::filesystem::path> files;
};

/// Reads a run directory and writes plots/ (epsilon.svg, rms.svg, desired.png,
/// produced.png, error_global.png, error_central.png) and report.txt.
/// Throws IoError for missing or inconsistent artifacts.
ReportSummary cmd_report(const std::filesystem::path& run_dir);

}  // namespace adm
