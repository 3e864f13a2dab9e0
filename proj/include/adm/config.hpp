#pragma once

#include "adm/control_loop.hpp"
#include "adm/dm_plant.hpp"
#include "adm/zernike.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace adm {

/// Step drift on a rectangular actuator block, in layout (row, col) coordinates.
struct DriftConfig {
    int onset = 15;
    double multiplier = 1.1;
    int row = 4;
    int col = 4;
    int rows = 4;
    int cols = 4;

    bool operator==(const DriftConfig&) const = default;
};

struct TargetConfig {
    std::string mode = "Z4^2";
    double pv_um = 1.1829;
    double piston_um = 1.0;

    bool operator==(const TargetConfig&) const = default;
};

/// Everything a run needs. Defaults are the desk-scale profile.
struct ExperimentConfig {
    std::uint64_t seed = 1;  // probe voltages
    std::string output_dir = "runs/desk";
    ApertureGrid grid = ApertureGrid::centered(64, 64, 60.0, 4400.0 / 60.0);
    int n_modes = 66;
    int s_probes = 200;
    double theta_assumed = kDefaultTheta;

    ActuatorLayout layout;
    double theta_true = kDefaultTheta;
    double stroke_um = 2.0;
    double influence_sigma_um = 340.0;
    double coupling_gamma = 0.05;
    double noise_sigma_um = 5e-3;
    std::optional<DriftConfig> drift;
    std::uint64_t plant_seed = 1;  // measurement noise

    int iterations = 30;
    double beta = 0.98;
    double delta = 1e-2;
    EstimatorForm estimator = EstimatorForm::factored;
    double crop_fraction = 0.85;
    bool record_checkpoints = false;
    BvlsOptions bvls;

    TargetConfig target;
    std::vector<int> n_list = {15, 28, 45, 66, 91, 120};

    /// Throws ConfigError naming the offending key.
    void validate() const;

    PlantConfig plant_config() const;
    LoopConfig loop_config() const;
    /// Noll index of target.mode.
    int target_noll() const;
};

/// Parses JSON text. Unknown keys, wrong types and invalid values raise ConfigError
/// with the dotted key path (e.g. "plant.drift.block.rows").
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Pretty-printed JSON containing every key, so parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace adm
