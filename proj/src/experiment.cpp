#include "adm/experiment.hpp"

#include "adm/csv.hpp"
#include "adm/errors.hpp"
#include "adm/estimator_io.hpp"
#include "adm/plot.hpp"
#include "adm/surface_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace adm {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string padded(int v)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", v);
    return buf;
}

std::string vector_text(const Eigen::VectorXd& v)
{
    std::ostringstream os;
    write_text_matrix(os, v);
    return os.str();
}

std::string summary_json(const ExperimentConfig& cfg, const RunOutcome& out)
{
    const auto& recs = out.loop.records;
    const auto& best = recs[static_cast<std::size_t>(out.loop.best_index)];
    int nonconverged = out.initial_solve.converged ? 0 : 1;
    for (const auto& r : recs) {
        if (r.k > 0 && !r.bvls.converged) {
            ++nonconverged;
        }
    }
    ordered_json j;
    j["mode"] = to_string(out.mode);
    j["n_modes"] = cfg.n_modes;
    j["actuators"] = cfg.layout.count();
    j["s_probes"] = cfg.s_probes;
    j["iterations"] = static_cast<int>(recs.size());
    j["best_k"] = out.loop.best_index;
    j["best_rms_central"] = best.rms_central;
    j["best_rms_global"] = best.rms_global;
    j["best_pv_produced"] = best.pv_produced;
    j["final_rms_central"] = recs.back().rms_central;
    j["final_epsilon_norm"] = recs.back().epsilon_norm;
    j["desired_pv"] = peak_to_valley(out.loop.desired);
    j["init_condition_BBt"] = out.init.condition_BBt;
    j["init_residual_fro"] = out.init.residual_fro;
    j["probe_fit_rms"] = out.probe_fit_rms;
    j["nonconverged_solves"] = nonconverged;
    return j.dump(2) + "\n";
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_safe(std::string s)
{
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r' || c == '"') {
            c = ';';
        }
    }
    return s;
}

Eigen::VectorXd values_within(const SurfaceMap& s, double radius_fraction)
{
    std::vector<double> v;
    for (int r = 0; r < s.grid.height_px; ++r) {
        for (int c = 0; c < s.grid.width_px; ++c) {
            if (s.grid.normalized_radius(r, c) <= radius_fraction) {
                v.push_back(s.heights_um(r, c));
            }
        }
    }
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string to_string(RunMode mode)
{
    return mode == RunMode::adaptive ? "adaptive" : "baseline";
}

RunOutcome simulate(const ExperimentConfig& cfg, RunMode mode, const IterationSink& sink)
{
    cfg.validate();
    const ZernikeBasis basis(cfg.grid, cfg.n_modes);
    const DmPlant plant(cfg.plant_config(), cfg.grid);
    const int m = plant.actuator_count();

    double resid_sq = 0.0;
    long resid_count = 0;
    const Eigen::MatrixXd& A = basis.sample_matrix();
    ProbeDataset probes = generate_probes(m, cfg.s_probes, cfg.theta_assumed, cfg.seed,
                                          [&](const Eigen::VectorXd& u, int j) -> Eigen::VectorXd {
                                              const Eigen::VectorXd v =
                                                  plant.actuate(u, j, PlantPhase::calibration).masked_values();
                                              const Eigen::VectorXd z = basis.fit_masked(v).col(0);
                                              resid_sq += (v - A * z).squaredNorm();
                                              resid_count += v.size();
                                              return z;
                                          });
    const double probe_fit_rms = std::sqrt(resid_sq / static_cast<double>(resid_count));

    InitReport init = batch_init(probes);
    LoopConfig loop_cfg = cfg.loop_config();
    loop_cfg.adapt = mode == RunMode::adaptive;
    const TargetShape target = make_target(basis, cfg.target_noll(), cfg.target.pv_um, cfg.target.piston_um);
    const BvlsSolution initial = solve_bvls(init.L0_hat, target.z_D, BoxBounds::unit(m), loop_cfg.bvls);

    EstimatorState state = EstimatorState::init(init.L0_hat, loop_cfg.delta, loop_cfg.beta, loop_cfg.estimator_form);
    LoopResult loop = run_loop(plant, basis, target, std::move(state), initial, loop_cfg, sink);
    return RunOutcome{mode, std::move(probes), std::move(init), summarize(initial), probe_fit_rms, std::move(loop)};
}

void write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunOutcome& outcome)
{
    std::filesystem::create_directories(dir);
    std::filesystem::remove(dir / "summary.json");

    write_file_atomic(dir / "config.json", serialize_config(cfg));
    write_file_atomic(dir / "iterations.csv", iterations_csv(outcome.loop.records));
    write_file_atomic(dir / "voltages.csv", voltages_csv(outcome.loop.records));
    save_estimator(dir / "final_state.rls", outcome.loop.final_state);
    save_surface_binary(dir / "desired.surf", outcome.loop.desired);
    save_surface_binary(dir / "best_produced.surf", outcome.loop.best_produced);
    save_probes(dir / "probes", outcome.probes);

    bool any_checkpoint = false;
    for (const auto& rec : outcome.loop.records) {
        if (!rec.checkpoint) {
            continue;
        }
        if (!any_checkpoint) {
            std::filesystem::create_directories(dir / "checkpoints");
            any_checkpoint = true;
        }
        const auto stem = dir / "checkpoints" / ("k_" + padded(rec.k));
        save_estimator(stem.string() + ".rls", rec.checkpoint->before);
        write_file_atomic(stem.string() + "_b.txt", vector_text(rec.checkpoint->b));
        write_file_atomic(stem.string() + "_z.txt", vector_text(rec.checkpoint->z_next));
    }

    write_file_atomic(dir / "summary.json", summary_json(cfg, outcome));
}

RunOutcome cmd_run(const ExperimentConfig& cfg)
{
    RunOutcome out = simulate(cfg, RunMode::adaptive);
    write_run(cfg.output_dir, cfg, out);
    return out;
}

RunOutcome cmd_baseline(const ExperimentConfig& cfg)
{
    RunOutcome out = simulate(cfg, RunMode::baseline);
    write_run(cfg.output_dir, cfg, out);
    return out;
}

std::vector<SweepRow> cmd_sweep_n(const ExperimentConfig& cfg, const std::vector<int>& n_list, int jobs,
                                  bool write_runs)
{
    if (n_list.empty()) {
        throw ConfigError("sweep.n_list", "must not be empty");
    }
    std::vector<SweepRow> rows(n_list.size());
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < n_list.size(); i = next++) {
            SweepRow& row = rows[i];
            row.n = n_list[i];
            try {
                ExperimentConfig c = cfg;
                c.n_modes = row.n;
                c.output_dir = sweep_entry_dir(cfg, row.n).string();
                const RunOutcome out = simulate(c, RunMode::adaptive);
                if (write_runs) {
                    write_run(c.output_dir, c, out);
                }
                const auto& best = out.loop.records[static_cast<std::size_t>(out.loop.best_index)];
                row.best_k = out.loop.best_index;
                row.best_rms_central = best.rms_central;
                row.best_rms_global = best.rms_global;
                row.probe_fit_rms = out.probe_fit_rms;
                row.ok = true;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    };

    const int workers = std::clamp(jobs, 1, static_cast<int>(n_list.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back(work);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    std::filesystem::create_directories(cfg.output_dir);
    write_file_atomic(std::filesystem::path(cfg.output_dir) / "sweep.csv", sweep_csv(rows));
    return rows;
}

std::filesystem::path sweep_entry_dir(const ExperimentConfig& cfg, int n)
{
    return std::filesystem::path(cfg.output_dir) / ("n_" + padded(n));
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::string out;
    for (std::size_t i = 0; i < kSweepColumns.size(); ++i) {
        out += (i ? "," : "") + kSweepColumns[i];
    }
    out += "\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n) + ",";
        if (r.ok) {
            out += std::to_string(r.best_k) + "," + format_double(r.best_rms_central) + "," +
                   format_double(r.best_rms_global) + "," + format_double(r.probe_fit_rms) + ",ok,\n";
        } else {
            out += ",,,,error," + csv_safe(r.error) + "\n";
        }
    }
    return out;
}

ReportSummary cmd_report(const std::filesystem::path& run_dir)
{
    for (const char* name : {"config.json", "iterations.csv", "summary.json", "desired.surf", "best_produced.surf"}) {
        if (!std::filesystem::exists(run_dir / name)) {
            throw IoError("report: " + (run_dir / name).string() + " is missing");
        }
    }
    const ExperimentConfig cfg = load_config(run_dir / "config.json");
    const CsvTable table = load_csv(run_dir / "iterations.csv");
    if (table.header != kIterationColumns) {
        throw IoError("report: iterations.csv has an unexpected header");
    }
    if (table.rows.empty()) {
        throw IoError("report: iterations.csv has no rows");
    }

    nlohmann::json summary;
    try {
        summary = nlohmann::json::parse(read_text(run_dir / "summary.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("report: summary.json: " + std::string(e.what()));
    }

    const auto k = table.numbers("k");
    const auto eps = table.numbers("epsilon_norm");
    const auto rms_g = table.numbers("rms_global");
    const auto rms_c = table.numbers("rms_central");

    ReportSummary rep;
    rep.csv_best_k = static_cast<int>(std::min_element(rms_c.begin(), rms_c.end()) - rms_c.begin());
    try {
        rep.best_k = summary.at("best_k").get<int>();
        rep.best_rms_central = summary.at("best_rms_central").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("report: summary.json: " + std::string(e.what()));
    }
    if (rep.best_k != rep.csv_best_k) {
        throw IoError("report: summary best_k " + std::to_string(rep.best_k) + " disagrees with CSV argmin " +
                      std::to_string(rep.csv_best_k));
    }

    const SurfaceMap desired = load_surface_binary(run_dir / "desired.surf", cfg.grid);
    const SurfaceMap produced = load_surface_binary(run_dir / "best_produced.surf", cfg.grid);
    const SurfaceMap error(cfg.grid, produced.heights_um - desired.heights_um);

    const auto plots = run_dir / "plots";
    std::filesystem::create_directories(plots);

    write_line_plot_svg(plots / "epsilon.svg", "Model error", "iteration k", "||epsilon_k||_2",
                        {{"model error", k, eps, "#1f77b4"}}, true);
    write_line_plot_svg(plots / "rms.svg", "Surface shape error", "iteration k", "RMS (um)",
                        {{"global", k, rms_g, "#ff7f0e"}, {"central", k, rms_c, "#1f77b4"}}, true);

    Eigen::VectorXd both(desired.masked_values().size() * 2);
    both << desired.masked_values(), produced.masked_values();
    const ColorScale shape_scale = range_scale(both);
    write_heatmap_png(plots / "desired.png", desired, 1.0, shape_scale);
    write_heatmap_png(plots / "produced.png", produced, 1.0, shape_scale);
    write_heatmap_png(plots / "error_global.png", error, 1.0, symmetric_scale(values_within(error, 1.0)));
    write_heatmap_png(plots / "error_central.png", error, cfg.crop_fraction,
                      symmetric_scale(values_within(error, cfg.crop_fraction)));

    std::ostringstream txt;
    txt << "run directory: " << run_dir.string() << "\n";
    txt << "mode: " << summary.value("mode", std::string("unknown")) << "\n";
    txt << "modes: " << cfg.n_modes << ", actuators: " << cfg.layout.count() << ", probes: " << cfg.s_probes
        << ", iterations: " << table.rows.size() << "\n";
    txt << "target: " << cfg.target.mode << " P-V " << format_double(cfg.target.pv_um) << " um, piston "
        << format_double(cfg.target.piston_um) << " um\n";
    txt << "best iteration: " << rep.best_k << "\n";
    txt << "best rms central (um): " << format_double(rms_c[static_cast<std::size_t>(rep.best_k)]) << "\n";
    txt << "best rms global (um): " << format_double(rms_g[static_cast<std::size_t>(rep.best_k)]) << "\n";
    txt << "final rms central (um): " << format_double(rms_c.back()) << "\n";
    txt << "final model error: " << format_double(eps.back()) << "\n";
    txt << "desired P-V (um): " << format_double(peak_to_valley(desired)) << "\n";
    txt << "best produced P-V (um): " << format_double(peak_to_valley(produced)) << "\n";
    write_file_atomic(run_dir / "report.txt", txt.str());

    rep.files = {plots / "epsilon.svg",       plots / "rms.svg",          plots / "desired.png",
                 plots / "produced.png",      plots / "error_global.png", plots / "error_central.png",
                 run_dir / "report.txt"};
    return rep;
}

}  // namespace adm
