#pragma once

#include <optional>

#include "heatrec/forward.hpp"
#include "heatrec/solvers.hpp"

namespace heatrec {

/// First-order optimality system of
///   min ||C y - z||^2 / sigma^2 + ||D_theta^{-1/2} u0||^2   s.t.  K_st y = M0 u0,
/// kept in Kronecker form. The TT representation lifts u0 to a space-time
/// vector (zero except the first time slice) so that all three blocks share
/// the mode sizes (3, N_t, n_1, ..., n_D).
class KktSystem {
public:
    KktSystem(const SpaceTimeSystem& sys, Eigen::VectorXd theta, Eigen::VectorXd z, double sigma);

    const SpaceTimeSystem& system() const { return *sys_; }
    const Eigen::VectorXd& theta() const { return theta_; }

    /// Symmetric block operator over modes (3, N_t, spatial...).
    TTOperator tt_operator(double dtheta_eps = 1e-12) const;
    TTVector tt_rhs(double eps = 1e-12) const;
    std::vector<Index> tt_modes() const;

    /// Dense unlifted KKT matrix [s^2 C^T C, 0, K^T; 0, D^{-1}, -M0^T;
    /// K, -M0, 0] for oracle tests (small systems only).
    Eigen::MatrixXd dense(Index cap = kDenseCap) const;
    Eigen::VectorXd dense_rhs() const;
    /// Direct dense solve, returning the u0 block.
    Eigen::VectorXd dense_solve_u0() const;

private:
    const SpaceTimeSystem* sys_;
    Eigen::VectorXd theta_;
    Eigen::VectorXd z_;
    double sigma_;
    double s2_;  // 1/sigma^2 (1 when sigma == 0)
};

KktSystem build_kkt(const SpaceTimeSystem& sys, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& z, double sigma = 0.0);

/// Block-AMEn solve of the KKT system; returns the u0 block. `warm_start`
/// carries the previous solution between outer iterations.
std::pair<Eigen::VectorXd, SolverReport> amen_block_solve(
    const KktSystem& kkt, const AmenOptions& opts,
    std::optional<TTVector>* warm_start = nullptr);

}  // namespace heatrec
