#include "adm/bounded_lsq.hpp"

#include "adm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace adm {

BoxBounds BoxBounds::unit(Eigen::Index m)
{
    return {Eigen::VectorXd::Zero(m), Eigen::VectorXd::Ones(m)};
}

void BoxBounds::validate(Eigen::Index m) const
{
    if (lower.size() != m || upper.size() != m) {
        throw DimensionError("box bounds: expected " + std::to_string(m) + " entries");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
            throw DomainError("box bounds: need finite lower <= upper at index " + std::to_string(i));
        }
    }
}

double kkt_scale(const Eigen::MatrixXd& L, const Eigen::VectorXd& z)
{
    const double l_inf = L.size() ? L.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
    return 2.0 * l_inf * z.norm() + 1.0;
}

double kkt_violation(const Eigen::MatrixXd& L, const Eigen::VectorXd& z, const BoxBounds& bounds,
                     const Eigen::VectorXd& b)
{
    const Eigen::VectorXd g = 2.0 * L.transpose() * (L * b - z);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        double v = 0.0;
        if (b[i] < bounds.lower[i] || b[i] > bounds.upper[i]) {
            return std::numeric_limits<double>::infinity();
        }
        if (b[i] == bounds.lower[i] && b[i] == bounds.upper[i]) {
            v = 0.0;
        } else if (b[i] == bounds.lower[i]) {
            v = std::max(0.0, -g[i]);
        } else if (b[i] == bounds.upper[i]) {
            v = std::max(0.0, g[i]);
        } else {
            v = std::abs(g[i]);
        }
        worst = std::max(worst, v);
    }
    return worst / kkt_scale(L, z);
}

namespace {

enum class Status { lower, upper, free };

class ActiveSetSolver {
public:
    ActiveSetSolver(const Eigen::MatrixXd& L, const Eigen::VectorXd& z, const BoxBounds& bounds, int max_iter)
        : L_(L), z_(z), lo_(bounds.lower), hi_(bounds.upper), max_iter_(max_iter), m_(L.cols()),
          status_(static_cast<std::size_t>(m_), Status::free), b_(m_)
    {
    }

    BvlsSolution run(double tol, double scale)
    {
        warm_start();
        bool budget_left = relax(std::nullopt);
        std::vector<bool> rejected(static_cast<std::size_t>(m_), false);

        while (budget_left) {
            const Eigen::VectorXd w = L_.transpose() * (z_ - L_ * b_);
            const int t = entering(w, rejected, tol * scale);
            if (t < 0) {
                break;
            }
            if (iterations_ >= max_iter_) {
                budget_left = false;
                break;
            }
            const Status previous = status_[static_cast<std::size_t>(t)];
            status_[static_cast<std::size_t>(t)] = Status::free;
            ++iterations_;
            Eigen::VectorXd y = solve_free();
            const bool wrong_way = (previous == Status::lower && y[t] <= lo_[t]) ||
                                   (previous == Status::upper && y[t] >= hi_[t]);
            if (wrong_way) {
                // Gradient sign was rounding noise; keep t bound and try the next candidate.
                status_[static_cast<std::size_t>(t)] = previous;
                rejected[static_cast<std::size_t>(t)] = true;
                continue;
            }
            std::fill(rejected.begin(), rejected.end(), false);
            budget_left = relax(std::move(y));
        }
        return finish(tol, scale, budget_left);
    }

private:
    void warm_start()
    {
        const Eigen::VectorXd y = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(L_).solve(z_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            auto& s = status_[static_cast<std::size_t>(i)];
            if (lo_[i] == hi_[i] || y[i] <= lo_[i]) {
                s = Status::lower;
                b_[i] = lo_[i];
            } else if (y[i] >= hi_[i]) {
                s = Status::upper;
                b_[i] = hi_[i];
            } else {
                s = Status::free;
                b_[i] = y[i];
            }
        }
        history_.push_back(objective());
    }

    double objective() const { return (z_ - L_ * b_).squaredNorm(); }

    // Minimizer over the free coordinates with bound coordinates held at b_.
    Eigen::VectorXd solve_free() const
    {
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (status_[static_cast<std::size_t>(i)] == Status::free) {
                free.push_back(i);
            }
        }
        Eigen::VectorXd y = b_;
        if (free.empty()) {
            return y;
        }
        Eigen::VectorXd rhs = z_;
        Eigen::MatrixXd LF(L_.rows(), static_cast<Eigen::Index>(free.size()));
        for (Eigen::Index i = 0, f = 0; i < m_; ++i) {
            if (status_[static_cast<std::size_t>(i)] == Status::free) {
                LF.col(f++) = L_.col(i);
            } else {
                rhs -= L_.col(i) * b_[i];
            }
        }
        const Eigen::VectorXd yf = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(LF).solve(rhs);
        for (std::size_t f = 0; f < free.size(); ++f) {
            y[free[f]] = yf[static_cast<Eigen::Index>(f)];
        }
        return y;
    }

    // Moves toward the free-set minimizer, binding blocking variables, until the
    // minimizer is feasible. Returns false when the iteration budget runs out.
    bool relax(std::optional<Eigen::VectorXd> first)
    {
        while (true) {
            Eigen::VectorXd y = first ? std::move(*first) : solve_free();
            first.reset();

            double alpha = 1.0;
            int blocking = -1;
            for (Eigen::Index i = 0; i < m_; ++i) {
                if (status_[static_cast<std::size_t>(i)] != Status::free) {
                    continue;
                }
                double ratio = 1.0;
                if (y[i] < lo_[i]) {
                    ratio = (lo_[i] - b_[i]) / (y[i] - b_[i]);
                } else if (y[i] > hi_[i]) {
                    ratio = (hi_[i] - b_[i]) / (y[i] - b_[i]);
                } else {
                    continue;
                }
                ratio = std::clamp(ratio, 0.0, 1.0);
                if (blocking < 0 || ratio < alpha) {
                    alpha = ratio;
                    blocking = static_cast<int>(i);
                }
            }

            if (blocking < 0) {
                b_ = y;
                history_.push_back(objective());
                return true;
            }

            for (Eigen::Index i = 0; i < m_; ++i) {
                if (status_[static_cast<std::size_t>(i)] == Status::free) {
                    b_[i] += alpha * (y[i] - b_[i]);
                }
            }
            bind(blocking, y[blocking] < lo_[blocking] ? Status::lower : Status::upper);
            for (Eigen::Index i = 0; i < m_; ++i) {
                if (status_[static_cast<std::size_t>(i)] != Status::free) {
                    continue;
                }
                if (b_[i] <= lo_[i]) {
                    bind(static_cast<int>(i), Status::lower);
                } else if (b_[i] >= hi_[i]) {
                    bind(static_cast<int>(i), Status::upper);
                }
            }
            history_.push_back(objective());
            if (++iterations_ >= max_iter_) {
                return false;
            }
        }
    }

    void bind(int i, Status s)
    {
        status_[static_cast<std::size_t>(i)] = s;
        b_[i] = (s == Status::lower) ? lo_[i] : hi_[i];
    }

    int entering(const Eigen::VectorXd& w, const std::vector<bool>& rejected, double threshold) const
    {
        int best = -1;
        double best_violation = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const auto s = status_[static_cast<std::size_t>(i)];
            if (s == Status::free || rejected[static_cast<std::size_t>(i)] || lo_[i] == hi_[i]) {
                continue;
            }
            // gradient of the objective is -2 w
            const double violation = (s == Status::lower) ? 2.0 * w[i] : -2.0 * w[i];
            if (violation > threshold && violation > best_violation) {
                best = static_cast<int>(i);
                best_violation = violation;
            }
        }
        return best;
    }

    BvlsSolution finish(double tol, double scale, bool budget_left)
    {
        BvlsSolution out;
        for (Eigen::Index i = 0; i < m_; ++i) {
            switch (status_[static_cast<std::size_t>(i)]) {
            case Status::lower:
                b_[i] = lo_[i];
                out.active_lower.push_back(static_cast<int>(i));
                break;
            case Status::upper:
                b_[i] = hi_[i];
                out.active_upper.push_back(static_cast<int>(i));
                break;
            case Status::free:
                b_[i] = std::clamp(b_[i], lo_[i], hi_[i]);
                break;
            }
        }
        const Eigen::VectorXd g = 2.0 * L_.transpose() * (L_ * b_ - z_);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const auto s = status_[static_cast<std::size_t>(i)];
            double v = 0.0;
            if (lo_[i] == hi_[i]) {
                v = 0.0;
            } else if (s == Status::lower) {
                v = std::max(0.0, -g[i]);
            } else if (s == Status::upper) {
                v = std::max(0.0, g[i]);
            } else {
                v = std::abs(g[i]);
            }
            worst = std::max(worst, v);
        }
        out.b_star = b_;
        out.objective = objective();
        out.kkt_residual = worst / scale;
        out.iterations = iterations_;
        out.converged = budget_left && out.kkt_residual <= tol;
        out.objective_history = std::move(history_);
        return out;
    }

    const Eigen::MatrixXd& L_;
    const Eigen::VectorXd& z_;
    const Eigen::VectorXd& lo_;
    const Eigen::VectorXd& hi_;
    int max_iter_;
    Eigen::Index m_;
    std::vector<Status> status_;
    Eigen::VectorXd b_;
    std::vector<double> history_;
    int iterations_ = 0;
};

}  // namespace

BvlsSolution solve_bvls(const Eigen::MatrixXd& L, const Eigen::VectorXd& z, const BoxBounds& bounds,
                        const BvlsOptions& options)
{
    if (z.size() != L.rows()) {
        throw DimensionError("bvls: z has " + std::to_string(z.size()) + " entries, L has " +
                             std::to_string(L.rows()) + " rows");
    }
    if (L.cols() < 1) {
        throw DimensionError("bvls: L has no columns");
    }
    bounds.validate(L.cols());
    if (!L.allFinite() || !z.allFinite()) {
        throw DomainError("bvls: non-finite entries in L or z");
    }
    if (!(options.tol > 0.0)) {
        throw DomainError("bvls: tol must be positive");
    }
    const int max_iter = options.max_iter > 0 ? options.max_iter : static_cast<int>(10 * L.cols());
    ActiveSetSolver solver(L, z, bounds, max_iter);
    return solver.run(options.tol, kkt_scale(L, z));
}

Eigen::VectorXd voltages_from_b(const Eigen::VectorXd& b, double theta_assumed)
{
    if (!(theta_assumed > 0.0)) {
        throw DomainError("voltages_from_b: theta must be positive");
    }
    Eigen::VectorXd u(b.size());
    const double inv = 1.0 / theta_assumed;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        if (!(b[i] >= 0.0 && b[i] <= 1.0)) {
            throw DomainError("voltages_from_b: b[" + std::to_string(i) + "] = " + std::to_string(b[i]) +
                              " is outside [0, 1]");
        }
        u[i] = std::pow(b[i], inv);
    }
    return u;
}

}  // namespace adm
