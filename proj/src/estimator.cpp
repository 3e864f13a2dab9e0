#include "adm/estimator.hpp"

#include "adm/dm_plant.hpp"
#include "adm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace adm {

ProbeDataset generate_probes(int m, int s, double theta_assumed, std::uint64_t seed, const ProbeObserver& observe)
{
    if (m < 1) {
        throw DomainError("generate_probes: m must be >= 1");
    }
    if (s < m) {
        throw DomainError("generate_probes: s = " + std::to_string(s) + " < m = " + std::to_string(m) +
                          " (the probe count must be at least the number of actuators)");
    }
    ProbeDataset data;
    data.theta_assumed = theta_assumed;
    data.U.resize(m, s);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> voltage(0.5, 0.15);
    for (int j = 0; j < s; ++j) {
        for (int i = 0; i < m; ++i) {
            data.U(i, j) = std::clamp(voltage(rng), 0.0, 1.0);
        }
    }
    data.B.resize(m, s);
    for (int j = 0; j < s; ++j) {
        data.B.col(j) = lift(data.U.col(j), theta_assumed);
    }
    for (int j = 0; j < s; ++j) {
        Eigen::VectorXd z = observe(data.U.col(j), j);
        if (j == 0) {
            data.Z.resize(z.size(), s);
        } else if (z.size() != data.Z.rows()) {
            throw DimensionError("generate_probes: observer returned inconsistent lengths");
        }
        data.Z.col(j) = z;
    }
    return data;
}

InitReport batch_init(const ProbeDataset& probes, double condition_cap)
{
    const auto& B = probes.B;
    const auto& Z = probes.Z;
    if (B.cols() != Z.cols()) {
        throw DimensionError("batch_init: B and Z have different probe counts");
    }
    if (B.cols() < B.rows()) {
        throw DomainError("batch_init: fewer probes than actuators");
    }

    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(B).singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
    const double cond = (smin > 0.0) ? (smax / smin) * (smax / smin) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(cond) || cond > condition_cap) {
        throw NumericalError("batch_init: cond(B B^T) = " + std::to_string(cond) + " exceeds cap " +
                             std::to_string(condition_cap) + " (probe inputs are rank deficient)");
    }

    InitReport report;
    // L B ~= Z  <=>  B^T L^T ~= Z^T
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(B.transpose());
    report.L0_hat = qr.solve(Z.transpose()).transpose();
    report.condition_BBt = cond;
    report.residual_fro = (Z - report.L0_hat * B).norm();
    return report;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& L)
{
    return Eigen::Map<const Eigen::VectorXd>(L.data(), L.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& x, Eigen::Index rows)
{
    if (rows <= 0 || x.size() % rows != 0) {
        throw DimensionError("unvec: length is not a multiple of the row count");
    }
    return Eigen::Map<const Eigen::MatrixXd>(x.data(), rows, x.size() / rows);
}

EstimatorState EstimatorState::init(const Eigen::MatrixXd& L0, double delta, double beta, EstimatorForm form)
{
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw DomainError("init_state: delta must be a positive finite number");
    }
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw DomainError("init_state: beta must lie in (0, 1]");
    }
    EstimatorState s;
    s.form_ = form;
    s.beta_ = beta;
    s.delta_ = delta;
    s.n_ = L0.rows();
    s.m_ = L0.cols();
    s.x_hat_ = vec(L0);
    const Eigen::Index dim = (form == EstimatorForm::dense) ? s.n_ * s.m_ : s.m_;
    s.cov_ = delta * Eigen::MatrixXd::Identity(dim, dim);
    s.last_epsilon_ = Eigen::VectorXd::Zero(s.n_);
    return s;
}

EstimatorState EstimatorState::restore(EstimatorForm form, double beta, double delta, Eigen::MatrixXd L,
                                       Eigen::MatrixXd covariance, Eigen::VectorXd last_epsilon,
                                       std::int64_t updates)
{
    EstimatorState s = init(L, delta, beta, form);
    if (covariance.rows() != s.cov_.rows() || covariance.cols() != s.cov_.cols()) {
        throw DimensionError("estimator restore: covariance has the wrong shape");
    }
    if (last_epsilon.size() != s.n_) {
        throw DimensionError("estimator restore: last_epsilon has the wrong length");
    }
    s.cov_ = std::move(covariance);
    s.last_epsilon_ = std::move(last_epsilon);
    s.updates_ = updates;
    return s;
}

Eigen::VectorXd EstimatorState::predict(const Eigen::VectorXd& b) const
{
    if (b.size() != m_) {
        throw DimensionError("estimator: input length " + std::to_string(b.size()) + " != m = " +
                             std::to_string(m_));
    }
    return Eigen::Map<const Eigen::MatrixXd>(x_hat_.data(), n_, m_) * b;
}

void EstimatorState::update(const Eigen::VectorXd& b, const Eigen::VectorXd& z_next)
{
    if (b.size() != m_ || z_next.size() != n_) {
        throw DimensionError("rls_update: expected b of length " + std::to_string(m_) + " and z of length " +
                             std::to_string(n_));
    }
    if (form_ == EstimatorForm::dense) {
        update_dense(b, z_next);
    } else {
        update_factored(b, z_next);
    }
    ++updates_;
}

void EstimatorState::update_dense(const Eigen::VectorXd& b, const Eigen::VectorXd& z_next)
{
    const Eigen::Index nm = n_ * m_;
    // H = b^T (x) I_n
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n_, nm);
    for (Eigen::Index j = 0; j < m_; ++j) {
        H.block(0, j * n_, n_, n_).diagonal().setConstant(b[j]);
    }

    const Eigen::MatrixXd SHt = cov_ * H.transpose();
    Eigen::MatrixXd innovation = H * SHt;
    innovation.diagonal().array() += beta_;
    const Eigen::LLT<Eigen::MatrixXd> llt(innovation);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("rls_update: beta I + H S H^T is not positive definite (state corrupted)");
    }
    // F = S H^T (beta I + H S H^T)^-1; the inner matrix is symmetric.
    const Eigen::MatrixXd F = llt.solve(SHt.transpose()).transpose();

    // H S = (S H^T)^T because S is symmetric.
    Eigen::MatrixXd S_next = (cov_ - F * SHt.transpose()) / beta_;
    cov_ = 0.5 * (S_next + S_next.transpose());

    last_epsilon_ = z_next - H * x_hat_;
    x_hat_ += F * last_epsilon_;
}

void EstimatorState::update_factored(const Eigen::VectorXd& b, const Eigen::VectorXd& z_next)
{
    const Eigen::VectorXd Pb = cov_ * b;
    const double q = b.dot(Pb);
    const double denom = beta_ + q;
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        throw NumericalError("rls_update: beta + b^T P b <= 0 (state corrupted)");
    }
    const Eigen::VectorXd g = Pb / denom;

    Eigen::Map<Eigen::MatrixXd> L(x_hat_.data(), n_, m_);
    last_epsilon_ = z_next - L * b;
    L.noalias() += last_epsilon_ * g.transpose();

    Eigen::MatrixXd P_next = (cov_ - g * Pb.transpose()) / beta_;
    cov_ = 0.5 * (P_next + P_next.transpose());
}

Eigen::MatrixXd EstimatorState::full_covariance() const
{
    if (form_ == EstimatorForm::dense) {
        return cov_;
    }
    const Eigen::Index nm = n_ * m_;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nm, nm);
    for (Eigen::Index i = 0; i < m_; ++i) {
        for (Eigen::Index j = 0; j < m_; ++j) {
            S.block(i * n_, j * n_, n_, n_).diagonal().setConstant(cov_(i, j));
        }
    }
    return S;
}

double EstimatorState::min_covariance_eigenvalue() const
{
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

EstimatorState rls_update(EstimatorState state, const Eigen::VectorXd& b, const Eigen::VectorXd& z_next)
{
    state.update(b, z_next);
    return state;
}

}  // namespace adm
