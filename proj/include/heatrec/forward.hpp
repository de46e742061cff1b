#pragma once

#include <optional>

#include "heatrec/assembly.hpp"
#include "heatrec/solvers.hpp"

namespace heatrec {

/// Implicit-Euler space-time discretization of the heat problem on an IGA
/// patch with homogeneous Dirichlet data. Spatial operators act on interior
/// coefficients (first/last basis function per dimension removed). The block
/// system is
///   K_st = tau I_{N_t} (x) (nu K) + II (x) M,     M0 = e_1 (x) M,
///   C = e_{N_t}^T (x) I,
/// with II lower bidiagonal (+1 diagonal, -1 first subdiagonal).
struct SpaceTimeSystem {
    ControlNet net;
    WeightSet weights;
    KroneckerSumOperator mass;       // interior
    KroneckerSumOperator stiffness;  // interior
    double nu = 0.1;
    double t_end = 1.0;
    Index n_t = 50;
    double tau = 0.02;

    std::vector<Index> space_sizes;  // interior basis counts per dimension
    Index n_space = 0;

    // caches built on construction
    Eigen::MatrixXd mass_dense;       // when n_space <= dense_cache_limit
    Eigen::MatrixXd stiffness_dense;
    Eigen::LLT<Eigen::MatrixXd> step_llt;  // tau nu K + M
    bool has_dense = false;

    TTOperator mass_tt;  // spatial modes
    TTOperator step_tt;  // tau nu K + M

    Index time_index(Index step, Index dof) const { return step * n_space + dof; }
};

inline constexpr Index kDenseCacheLimit = 2500;

SpaceTimeSystem build_system(ControlNet net, double nu, double t_end, Index n_t,
                             double eps_w = 1e-8);
SpaceTimeSystem build_system(ControlNet net, WeightSet weights, double nu, double t_end,
                             Index n_t);

/// Sequential implicit Euler steps (dense factorization path); returns the
/// trajectory y_1..y_{N_t}.
std::vector<Eigen::VectorXd> simulate_forward_dense(const SpaceTimeSystem& sys,
                                                    const Eigen::VectorXd& u0);

Eigen::VectorXd apply_A_dense(const SpaceTimeSystem& sys, const Eigen::VectorXd& u0);
/// Adjoint: solves the transposed block system backward in time, returns
/// M0^T lambda.
Eigen::VectorXd apply_At_dense(const SpaceTimeSystem& sys, const Eigen::VectorXd& w);

/// Full parameter-to-observable matrix A = C K_st^{-1} M0 via one
/// generalized eigendecomposition of (K, M); consistent with the sequential
/// path to solver precision.
Eigen::MatrixXd materialize_A_dense(const SpaceTimeSystem& sys);

/// Dense block matrices for oracle tests (small systems only).
Eigen::MatrixXd dense_block_K(const SpaceTimeSystem& sys, Index cap = kDenseCap);
Eigen::MatrixXd dense_block_M0(const SpaceTimeSystem& sys, Index cap = kDenseCap);

struct TTForwardOptions {
    double round_eps = 1e-8;   // rounding tolerance for state vectors
    Index max_rank = -1;       // optional rank cap on states
    AmenOptions amen;          // per-step inner solver settings

    TTForwardOptions() { amen.tol = 1e-8; }
};

/// TT path: per-step AMEn solves of (tau nu K + M) y_i = M y_{i-1}.
TTVector simulate_forward_tt(const SpaceTimeSystem& sys, const TTVector& u0,
                             const TTForwardOptions& opts, SolverReport* report = nullptr);
Eigen::VectorXd apply_A_tt(const SpaceTimeSystem& sys, const Eigen::VectorXd& u0,
                           const TTForwardOptions& opts, SolverReport* report = nullptr);
Eigen::VectorXd apply_At_tt(const SpaceTimeSystem& sys, const Eigen::VectorXd& w,
                            const TTForwardOptions& opts, SolverReport* report = nullptr);

/// Terminal observation with seeded additive Gaussian noise.
struct Observation {
    Eigen::VectorXd z;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

Observation make_observation(const SpaceTimeSystem& sys, const Eigen::VectorXd& u0_true,
                             double sigma, std::uint64_t seed);

}  // namespace heatrec
