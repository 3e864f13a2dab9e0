#pragma once

#include "adm/bounded_lsq.hpp"
#include "adm/dm_plant.hpp"
#include "adm/estimator.hpp"
#include "adm/zernike.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace adm {

struct TargetShape {
    ZernikeCoeffs z_D;
    std::string description;
};

/// alpha * Z_j + piston_um * Z_1 with alpha chosen so the mode alone has the requested
/// peak-to-valley over the aperture.
TargetShape make_target(const ZernikeBasis& basis, int noll_index, double pv_um, double piston_um);

struct LoopConfig {
    int iterations = 30;
    double beta = 0.98;
    double delta = 1e-2;
    EstimatorForm estimator_form = EstimatorForm::factored;
    double crop_fraction = 0.85;
    bool record_checkpoints = false;
    /// false freezes the model at its initial value (open-loop baseline).
    bool adapt = true;
    double theta_assumed = kDefaultTheta;
    BvlsOptions bvls;

    void validate() const;
};

struct BvlsSummary {
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int active_lower = 0;
    int active_upper = 0;
};

BvlsSummary summarize(const BvlsSolution& solution);

/// Model before the update of iteration k together with the data that drove it.
struct Checkpoint {
    EstimatorState before;
    Eigen::VectorXd b;
    Eigen::VectorXd z_next;
};

struct IterationRecord {
    int k = 0;
    Eigen::VectorXd u;  // applied voltages
    Eigen::VectorXd b;  // lifted input the model saw
    double epsilon_norm = 0.0;  // ||z_{k+1} - L_k b_k||_2
    double rms_global = 0.0;
    double rms_central = 0.0;
    double pv_produced = 0.0;
    BvlsSummary bvls;  // the solve that produced b_k
    std::optional<Checkpoint> checkpoint;
};

struct RmsError {
    double global = 0.0;
    double central = 0.0;
};

/// RMS of produced - desired over the aperture and over pixels within
/// crop_fraction * radius of the center. Throws DomainError if the central region is empty.
RmsError rms_error(const SurfaceMap& produced, const SurfaceMap& desired, double crop_fraction);

struct LoopResult {
    std::vector<IterationRecord> records;
    int best_index = 0;  // argmin rms_central, lowest k on ties
    SurfaceMap desired;
    SurfaceMap best_produced;
    EstimatorState final_state;
};

using IterationSink = std::function<void(const IterationRecord&)>;

/// Runs the adaptive open-loop iteration for cfg.iterations steps:
///   apply u_k = b_k^(1/theta), observe z_{k+1}, RLS update with (b_k, z_{k+1}),
///   then b_{k+1} = argmin ||z_D - L_{k+1} b|| over [0, 1]^m.
/// `initial` is the bounded solve against the initial model. A non-converged solve is
/// recorded and the loop carries on with the returned iterate.
LoopResult run_loop(const DmPlant& plant, const ZernikeBasis& basis, const TargetShape& target,
                    EstimatorState estimator, const BvlsSolution& initial, const LoopConfig& cfg,
                    const IterationSink& sink = {});

}  // namespace adm
