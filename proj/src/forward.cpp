#include "heatrec/forward.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace heatrec {

namespace {

KroneckerSumOperator step_operator(const SpaceTimeSystem& sys) {
    return sys.stiffness.scaled(sys.tau * sys.nu) + sys.mass;
}

void check_forward_residual(const char* what, double rel, double tol) {
    if (!(rel <= tol)) {
        std::ostringstream msg;
        msg << what << ": inner solver did not converge (relative residual " << rel << " > "
            << tol << ")";
        throw std::runtime_error(msg.str());
    }
}

}  // namespace

SpaceTimeSystem build_system(ControlNet net, double nu, double t_end, Index n_t, double eps_w) {
    WeightInterpOptions wopts;
    wopts.eps = eps_w;
    WeightSet weights = interpolate_weights(net, wopts);
    return build_system(std::move(net), std::move(weights), nu, t_end, n_t);
}

SpaceTimeSystem build_system(ControlNet net, WeightSet weights, double nu, double t_end,
                             Index n_t) {
    if (n_t < 1) throw std::invalid_argument("build_system: need at least one time step");
    SpaceTimeSystem sys{std::move(net), std::move(weights), {}, {}, nu, t_end, n_t,
                        t_end / static_cast<double>(n_t)};
    sys.mass = assemble_mass(sys.net, sys.weights.omega, /*interior=*/true);
    sys.stiffness = assemble_stiffness(sys.net, sys.weights, /*interior=*/true);
    sys.space_sizes = sys.mass.row_sizes();
    sys.n_space = product(sys.space_sizes);

    if (sys.n_space <= kDenseCacheLimit) {
        sys.mass_dense = sys.mass.dense();
        sys.stiffness_dense = sys.stiffness.dense();
        // symmetrize roundoff before factorization
        sys.mass_dense = 0.5 * (sys.mass_dense + sys.mass_dense.transpose()).eval();
        sys.stiffness_dense = 0.5 * (sys.stiffness_dense + sys.stiffness_dense.transpose()).eval();
        sys.step_llt.compute(sys.tau * sys.nu * sys.stiffness_dense + sys.mass_dense);
        if (sys.step_llt.info() != Eigen::Success)
            throw std::runtime_error("build_system: step matrix is not positive definite");
        sys.has_dense = true;
    }
    sys.mass_tt = sys.mass.to_tt();
    sys.step_tt = step_operator(sys).to_tt();
    return sys;
}

std::vector<Eigen::VectorXd> simulate_forward_dense(const SpaceTimeSystem& sys,
                                                    const Eigen::VectorXd& u0) {
    if (!sys.has_dense) throw std::runtime_error("simulate_forward_dense: no dense cache");
    if (u0.size() != sys.n_space)
        throw std::invalid_argument("simulate_forward_dense: u0 has wrong length");
    std::vector<Eigen::VectorXd> traj;
    traj.reserve(sys.n_t);
    Eigen::VectorXd y = u0;
    for (Index i = 0; i < sys.n_t; ++i) {
        y = sys.step_llt.solve(sys.mass_dense * y);
        traj.push_back(y);
    }
    return traj;
}

Eigen::VectorXd apply_A_dense(const SpaceTimeSystem& sys, const Eigen::VectorXd& u0) {
    return simulate_forward_dense(sys, u0).back();
}

Eigen::VectorXd apply_At_dense(const SpaceTimeSystem& sys, const Eigen::VectorXd& w) {
    if (!sys.has_dense) throw std::runtime_error("apply_At_dense: no dense cache");
    if (w.size() != sys.n_space) throw std::invalid_argument("apply_At_dense: wrong length");
    // K_st^T is block upper bidiagonal with S on the diagonal and -M above;
    // sweep backwards: S lambda_{N_t} = C^T w, then S lambda_i = M lambda_{i+1}.
    Eigen::VectorXd lambda = sys.step_llt.solve(w);
    for (Index i = sys.n_t - 1; i >= 1; --i) lambda = sys.step_llt.solve(sys.mass_dense * lambda);
    return sys.mass_dense * lambda;
}

Eigen::MatrixXd materialize_A_dense(const SpaceTimeSystem& sys) {
    if (!sys.has_dense) throw std::runtime_error("materialize_A_dense: no dense cache");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.stiffness_dense,
                                                                  sys.mass_dense);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("materialize_A_dense: generalized eigensolve failed");
    // K v = lambda M v with V^T M V = I gives (S^{-1} M)^{N_t} =
    // V (1 + tau nu lambda)^{-N_t} V^T M.
    Eigen::VectorXd scale(eig.eigenvalues().size());
    for (Index i = 0; i < scale.size(); ++i)
        scale[i] = std::pow(1.0 + sys.tau * sys.nu * eig.eigenvalues()[i],
                            -static_cast<double>(sys.n_t));
    const Eigen::MatrixXd& v = eig.eigenvectors();
    return v * scale.asDiagonal() * v.transpose() * sys.mass_dense;
}

Eigen::MatrixXd dense_block_K(const SpaceTimeSystem& sys, Index cap) {
    const Index n = sys.n_space * sys.n_t;
    if (n * n > cap) throw std::runtime_error("dense_block_K: size cap exceeded");
    if (!sys.has_dense) throw std::runtime_error("dense_block_K: no dense cache");
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd s = sys.tau * sys.nu * sys.stiffness_dense + sys.mass_dense;
    for (Index i = 0; i < sys.n_t; ++i) {
        big.block(i * sys.n_space, i * sys.n_space, sys.n_space, sys.n_space) = s;
        if (i > 0)
            big.block(i * sys.n_space, (i - 1) * sys.n_space, sys.n_space, sys.n_space) =
                -sys.mass_dense;
    }
    return big;
}

Eigen::MatrixXd dense_block_M0(const SpaceTimeSystem& sys, Index cap) {
    const Index n = sys.n_space * sys.n_t;
    if (n * sys.n_space > cap) throw std::runtime_error("dense_block_M0: size cap exceeded");
    if (!sys.has_dense) throw std::runtime_error("dense_block_M0: no dense cache");
    Eigen::MatrixXd m0 = Eigen::MatrixXd::Zero(n, sys.n_space);
    m0.topRows(sys.n_space) = sys.mass_dense;
    return m0;
}

TTVector simulate_forward_tt(const SpaceTimeSystem& sys, const TTVector& u0,
                             const TTForwardOptions& opts, SolverReport* report) {
    TTVector y = u0;
    TTVector guess = u0;
    int sweeps = 0;
    double worst = 0.0;
    for (Index i = 0; i < sys.n_t; ++i) {
        TTVector rhs = tt_apply(sys.mass_tt, y);
        rhs.round(opts.round_eps, opts.max_rank);
        auto [sol, rep] = amen_solve(sys.step_tt, rhs, guess, opts.amen);
        sweeps += rep.iterations;
        worst = std::max(worst, rep.residual);
        check_forward_residual("simulate_forward_tt", rep.residual,
                               std::max(10.0 * opts.amen.tol, 1e-6));
        sol.round(opts.round_eps, opts.max_rank);
        y = sol;
        guess = sol;
    }
    if (report) {
        report->iterations = sweeps;
        report->residual = worst;
        report->converged = true;
    }
    return y;
}

Eigen::VectorXd apply_A_tt(const SpaceTimeSystem& sys, const Eigen::VectorXd& u0,
                           const TTForwardOptions& opts, SolverReport* report) {
    TTVector u0tt = TTVector::from_dense(u0, sys.space_sizes, opts.round_eps, opts.max_rank);
    return simulate_forward_tt(sys, u0tt, opts, report).to_dense();
}

Eigen::VectorXd apply_At_tt(const SpaceTimeSystem& sys, const Eigen::VectorXd& w,
                            const TTForwardOptions& opts, SolverReport* report) {
    TTVector lambda = TTVector::from_dense(w, sys.space_sizes, opts.round_eps, opts.max_rank);
    TTVector guess = lambda;
    int sweeps = 0;
    double worst = 0.0;
    for (Index i = 0; i < sys.n_t; ++i) {
        TTVector rhs = (i == 0) ? lambda : tt_apply(sys.mass_tt, lambda);
        if (i > 0) rhs.round(opts.round_eps, opts.max_rank);
        auto [sol, rep] = amen_solve(sys.step_tt, rhs, guess, opts.amen);
        sweeps += rep.iterations;
        worst = std::max(worst, rep.residual);
        check_forward_residual("apply_At_tt", rep.residual, std::max(10.0 * opts.amen.tol, 1e-6));
        sol.round(opts.round_eps, opts.max_rank);
        lambda = sol;
        guess = sol;
    }
    TTVector out = tt_apply(sys.mass_tt, lambda);
    out.round(opts.round_eps, opts.max_rank);
    if (report) {
        report->iterations = sweeps;
        report->residual = worst;
        report->converged = true;
    }
    return out.to_dense();
}

Observation make_observation(const SpaceTimeSystem& sys, const Eigen::VectorXd& u0_true,
                             double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("make_observation: sigma must be nonnegative");
    Observation obs;
    obs.sigma = sigma;
    obs.seed = seed;
    if (sys.has_dense) {
        obs.z = apply_A_dense(sys, u0_true);
    } else {
        TTForwardOptions opts;
        opts.round_eps = 1e-9;
        obs.z = apply_A_tt(sys, u0_true, opts);
    }
    if (sigma > 0.0) {
        GaussianSampler rng(seed);
        obs.z += sigma * rng.vector(obs.z.size());
    }
    return obs;
}

}  // namespace heatrec
