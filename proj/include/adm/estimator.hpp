#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace adm {

/// Random probe inputs and the responses they produced; column j is probe j.
struct ProbeDataset {
    Eigen::MatrixXd U;  // m x s raw voltages in [0, 1]
    Eigen::MatrixXd B;  // m x s lifted inputs, B = U.^theta_assumed
    Eigen::MatrixXd Z;  // n x s observed coefficients
    double theta_assumed = 0.0;

    int probes() const { return static_cast<int>(U.cols()); }
};

/// Returns the observed coefficient vector for probe `j` driven with voltages `u`.
using ProbeObserver = std::function<Eigen::VectorXd(const Eigen::VectorXd& u, int j)>;

/// Draws s probes with every voltage ~ Normal(0.5, 0.15) clamped to [0, 1] and records
/// the observer's responses. Throws DomainError when s < m.
ProbeDataset generate_probes(int m, int s, double theta_assumed, std::uint64_t seed, const ProbeObserver& observe);

struct InitReport {
    Eigen::MatrixXd L0_hat;
    double condition_BBt = 0.0;
    double residual_fro = 0.0;
};

/// Least-squares influence estimate L0 = Z B^T (B B^T)^-1, computed by a QR solve on B^T.
/// Throws NumericalError when cond(B B^T) exceeds `condition_cap` or is not finite.
InitReport batch_init(const ProbeDataset& probes, double condition_cap = 1e10);

/// Column-stacked vectorization and its inverse.
Eigen::VectorXd vec(const Eigen::MatrixXd& L);
Eigen::MatrixXd unvec(const Eigen::VectorXd& x, Eigen::Index rows);

enum class EstimatorForm : std::uint32_t { dense = 0, factored = 1 };

/// Recursive least-squares estimate of an n x m influence matrix with forgetting factor beta.
///
/// The dense form carries the full (n*m) x (n*m) matrix S and applies the regressor
/// H = b^T (x) I_n literally. The factored form keeps only the m x m factor P of
/// S = P (x) I_n, a structure the update preserves:
///
///   q = b^T P b,  g = P b / (beta + q),  eps = z - L b,
///   L <- L + eps g^T,  P <- (P - g (P b)^T) / beta.
///
/// Both forms produce the same iterates up to rounding. The covariance-like matrix is
/// symmetrized after every update.
class EstimatorState {
public:
    /// S0 = delta * I (dense) or P0 = delta * I_m (factored). Throws DomainError unless
    /// delta > 0 and 0 < beta <= 1.
    static EstimatorState init(const Eigen::MatrixXd& L0, double delta, double beta, EstimatorForm form);

    /// Restores a state verbatim (used by checkpoint loading); `covariance` is S or P.
    static EstimatorState restore(EstimatorForm form, double beta, double delta, Eigen::MatrixXd L,
                                  Eigen::MatrixXd covariance, Eigen::VectorXd last_epsilon, std::int64_t updates);

    /// One RLS step with lifted input b (length m) and the observation z_next it produced.
    /// Throws NumericalError when the innovation covariance is not positive definite.
    void update(const Eigen::VectorXd& b, const Eigen::VectorXd& z_next);

    /// Model prediction L b for a lifted input.
    Eigen::VectorXd predict(const Eigen::VectorXd& b) const;

    Eigen::MatrixXd current_L() const { return unvec(x_hat_, n_); }
    const Eigen::VectorXd& x_hat() const { return x_hat_; }
    const Eigen::VectorXd& last_epsilon() const { return last_epsilon_; }

    /// S for the dense form, P for the factored form.
    const Eigen::MatrixXd& covariance() const { return cov_; }
    /// The full S in either form (P (x) I_n for factored); only for small n*m.
    Eigen::MatrixXd full_covariance() const;
    double min_covariance_eigenvalue() const;

    EstimatorForm form() const { return form_; }
    double beta() const { return beta_; }
    double delta() const { return delta_; }
    Eigen::Index n() const { return n_; }
    Eigen::Index m() const { return m_; }
    std::int64_t updates() const { return updates_; }

private:
    EstimatorState() = default;

    void update_dense(const Eigen::VectorXd& b, const Eigen::VectorXd& z_next);
    void update_factored(const Eigen::VectorXd& b, const Eigen::VectorXd& z_next);

    EstimatorForm form_ = EstimatorForm::factored;
    double beta_ = 1.0;
    double delta_ = 1.0;
    Eigen::Index n_ = 0;
    Eigen::Index m_ = 0;
    Eigen::VectorXd x_hat_;
    Eigen::MatrixXd cov_;
    Eigen::VectorXd last_epsilon_;
    std::int64_t updates_ = 0;
};

/// Functional spelling of EstimatorState::update.
EstimatorState rls_update(EstimatorState state, const Eigen::VectorXd& b, const Eigen::VectorXd& z_next);

}  // namespace adm
