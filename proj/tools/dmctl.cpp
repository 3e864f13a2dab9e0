// dmctl: command-line front end for the deformable-mirror experiments.

#include "adm/config.hpp"
#include "adm/errors.hpp"
#include "adm/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3, kNumerical = 4 };

struct Options {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string plots = "off";
    std::string estimator;
    std::vector<int> n_list;
    int jobs = 1;
    std::string run_dir;
};

adm::ExperimentConfig resolve(const Options& o)
{
    adm::ExperimentConfig cfg = adm::load_config(o.config_path);
    if (!o.out.empty()) {
        cfg.output_dir = o.out;
    }
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.plant_seed = *o.seed;
    }
    if (o.estimator == "dense") {
        cfg.estimator = adm::EstimatorForm::dense;
    } else if (o.estimator == "factored") {
        cfg.estimator = adm::EstimatorForm::factored;
    }
    if (!o.n_list.empty()) {
        cfg.n_list = o.n_list;
    }
    cfg.validate();
    return cfg;
}

void warn_if_heavy(const adm::ExperimentConfig& cfg)
{
    const long nm = static_cast<long>(cfg.n_modes) * cfg.layout.count();
    if (cfg.n_modes >= 300) {
        std::cerr << "warning: " << cfg.n_modes
                  << " modes is a full-scale profile; a run takes minutes rather than seconds\n";
    }
    if (cfg.estimator == adm::EstimatorForm::dense && nm > 4000) {
        std::cerr << "warning: dense estimator stores a " << nm << " x " << nm
                  << " matrix; use --estimator factored for anything but small checks\n";
    }
}

void print_run(const adm::RunOutcome& out, const std::string& dir)
{
    const auto& best = out.loop.records[static_cast<std::size_t>(out.loop.best_index)];
    std::cout << adm::to_string(out.mode) << " run written to " << dir << "\n"
              << "  best k = " << out.loop.best_index << ", rms central = " << best.rms_central
              << " um, rms global = " << best.rms_global << " um\n";
}

int report(const std::string& dir)
{
    const auto rep = adm::cmd_report(dir);
    std::cout << "report written to " << dir << " (best k = " << rep.best_k << ")\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Adaptive open-loop deformable mirror control experiments"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output directory (overrides output_dir)");
        sub->add_option("--seed", o.seed, "Seed for probes and plant noise (overrides config)");
        sub->add_option("--plots", o.plots, "Write plots after the run")->check(CLI::IsMember({"on", "off"}));
        sub->add_option("--estimator", o.estimator, "Estimator form")->check(CLI::IsMember({"dense", "factored"}));
    };

    auto* run = app.add_subcommand("run", "Adaptive run");
    add_common(run);
    auto* baseline = app.add_subcommand("baseline", "Run with the model frozen at its batch estimate");
    add_common(baseline);
    auto* sweep = app.add_subcommand("sweep-n", "Best RMS as a function of the number of modes");
    add_common(sweep);
    sweep->add_option("--n-list", o.n_list, "Mode counts, e.g. 15,28,45")->delimiter(',');
    sweep->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    auto* rep = app.add_subcommand("report", "Plots and text summary for a finished run");
    rep->add_option("run_dir", o.run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*rep) {
            return report(o.run_dir);
        }
        const adm::ExperimentConfig cfg = resolve(o);
        warn_if_heavy(cfg);
        if (*sweep) {
            const auto rows = adm::cmd_sweep_n(cfg, cfg.n_list, o.jobs);
            std::cout << adm::sweep_csv(rows);
            for (const auto& r : rows) {
                if (r.ok && o.plots == "on") {
                    adm::cmd_report(adm::sweep_entry_dir(cfg, r.n));
                }
            }
            return kOk;
        }
        const auto out = *run ? adm::cmd_run(cfg) : adm::cmd_baseline(cfg);
        print_run(out, cfg.output_dir);
        if (o.plots == "on") {
            return report(cfg.output_dir);
        }
        return kOk;
    } catch (const adm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const adm::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
}
