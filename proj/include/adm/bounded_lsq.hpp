#pragma once

#include <Eigen/Dense>

#include <vector>

namespace adm {

struct BoxBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    /// [0, 1]^m, the scaled actuator range.
    static BoxBounds unit(Eigen::Index m);
    /// Throws DimensionError / DomainError unless lower <= upper element-wise.
    void validate(Eigen::Index m) const;
};

struct BvlsOptions {
    double tol = 1e-10;  // relative to kkt_scale()
    int max_iter = 0;    // 0 selects 10 * m
};

struct BvlsSolution {
    Eigen::VectorXd b_star;
    double objective = 0.0;  // ||z - L b||^2
    std::vector<int> active_lower;
    std::vector<int> active_upper;
    double kkt_residual = 0.0;  // worst scaled KKT violation
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_history;  // one entry per accepted iterate
};

/// 2 ||L||_inf ||z||_2 + 1, the scale KKT violations are measured against.
double kkt_scale(const Eigen::MatrixXd& L, const Eigen::VectorXd& z);

/// Worst KKT violation of b for min ||z - L b||^2 on the box, divided by kkt_scale.
/// Coordinates equal to a bound are classified as active at that bound.
double kkt_violation(const Eigen::MatrixXd& L, const Eigen::VectorXd& z, const BoxBounds& bounds,
                     const Eigen::VectorXd& b);

/// Bounded-variable least squares: min_b ||z - L b||_2^2 s.t. lower <= b <= upper.
///
/// Primal active-set method of the Stark-Parker family, warm-started from the clipped
/// minimum-norm unconstrained solution. Free-set subproblems are minimum-norm least
/// squares, so rank-deficient L is accepted; the minimizer is then not unique and the
/// returned one is whatever the pivot order reaches. The entering variable is the one
/// with the largest KKT violation, lowest index on ties; the same rule picks among
/// blocking variables. If max_iter is hit the best iterate is returned with
/// converged = false. The result is feasible bit-exactly.
BvlsSolution solve_bvls(const Eigen::MatrixXd& L, const Eigen::VectorXd& z, const BoxBounds& bounds,
                        const BvlsOptions& options = {});

/// u_i = b_i^(1 / theta). Throws DomainError for b outside [0, 1] or theta <= 0.
Eigen::VectorXd voltages_from_b(const Eigen::VectorXd& b, double theta_assumed);

}  // namespace adm
