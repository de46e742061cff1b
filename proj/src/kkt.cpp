#include "heatrec/kkt.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace heatrec {

namespace {

Eigen::MatrixXd elementary3(int i, int j) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3, 3);
    e(i, j) = 1.0;
    return e;
}

Eigen::MatrixXd bidiagonal_time(Index n_t) {
    Eigen::MatrixXd ii = Eigen::MatrixXd::Identity(n_t, n_t);
    for (Index i = 1; i < n_t; ++i) ii(i, i - 1) = -1.0;
    return ii;
}

Eigen::MatrixXd last_selector(Index n_t) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n_t, n_t);
    e(n_t - 1, n_t - 1) = 1.0;
    return e;
}

Eigen::MatrixXd first_selector(Index n_t) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n_t, n_t);
    e(0, 0) = 1.0;
    return e;
}

/// TT operator over (3, N_t, spatial...) from a block position matrix, a time
/// factor, and a spatial TT operator.
TTOperator compose_block(const Eigen::MatrixXd& block, const Eigen::MatrixXd& time,
                         const TTOperator& spatial) {
    std::vector<Index> rows{3, time.rows()};
    std::vector<Index> cols{3, time.cols()};
    std::vector<Index> ranks{1, 1, 1};
    std::vector<Eigen::VectorXd> cores;
    Eigen::VectorXd c0(9);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) c0[i * 3 + j] = block(i, j);
    cores.push_back(std::move(c0));
    Eigen::VectorXd c1(time.size());
    for (Index i = 0; i < time.rows(); ++i)
        for (Index j = 0; j < time.cols(); ++j) c1[i * time.cols() + j] = time(i, j);
    cores.push_back(std::move(c1));
    for (int k = 0; k < spatial.order(); ++k) {
        rows.push_back(spatial.row_modes()[k]);
        cols.push_back(spatial.col_modes()[k]);
        ranks.push_back(spatial.ranks()[k + 1]);
        cores.push_back(spatial.core(k));
    }
    return TTOperator(std::move(rows), std::move(cols), std::move(ranks), std::move(cores));
}

}  // namespace

KktSystem::KktSystem(const SpaceTimeSystem& sys, Eigen::VectorXd theta, Eigen::VectorXd z,
                     double sigma)
    : sys_(&sys), theta_(std::move(theta)), z_(std::move(z)), sigma_(sigma) {
    if (theta_.size() != sys.n_space || z_.size() != sys.n_space)
        throw std::invalid_argument("build_kkt: theta/z length mismatch");
    for (Index j = 0; j < theta_.size(); ++j)
        if (!(theta_[j] > 0.0)) throw std::domain_error("build_kkt: nonpositive variance");
    s2_ = sigma_ > 0.0 ? 1.0 / (sigma_ * sigma_) : 1.0;
}

KktSystem build_kkt(const SpaceTimeSystem& sys, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& z, double sigma) {
    return KktSystem(sys, theta, z, sigma);
}

std::vector<Index> KktSystem::tt_modes() const {
    std::vector<Index> modes{3, sys_->n_t};
    for (Index n : sys_->space_sizes) modes.push_back(n);
    return modes;
}

TTOperator KktSystem::tt_operator(double dtheta_eps) const {
    const Index n_t = sys_->n_t;
    const TTOperator spaceId = TTOperator::identity(sys_->space_sizes);
    const TTOperator massTt = sys_->mass_tt;
    const TTOperator stiffTt = sys_->stiffness.to_tt();
    const Eigen::MatrixXd idT = Eigen::MatrixXd::Identity(n_t, n_t);
    const Eigen::MatrixXd iiT = bidiagonal_time(n_t);

    const Eigen::VectorXd thetaInv = theta_.cwiseInverse();
    TTVector thetaInvTt = TTVector::from_dense(thetaInv, sys_->space_sizes, dtheta_eps);
    const TTOperator dInv = TTOperator::diagonal(thetaInvTt);

    // (1,1): s^2 C^T C = s^2 E11 (x) e_Nt e_Nt^T (x) I
    TTOperator op = compose_block(s2_ * elementary3(0, 0), last_selector(n_t), spaceId);
    // (1,3): K_st^T = tau nu I (x) K + II^T (x) M
    op = tt_op_axpby(1.0, op, sys_->tau * sys_->nu,
                     compose_block(elementary3(0, 2), idT, stiffTt));
    op = tt_op_axpby(1.0, op, 1.0,
                     compose_block(elementary3(0, 2), iiT.transpose(), massTt));
    // (3,1): K_st
    op = tt_op_axpby(1.0, op, sys_->tau * sys_->nu,
                     compose_block(elementary3(2, 0), idT, stiffTt));
    op = tt_op_axpby(1.0, op, 1.0, compose_block(elementary3(2, 0), iiT, massTt));
    // (2,2): I_t (x) D^{-1} on the lifted parameter block
    op = tt_op_axpby(1.0, op, 1.0, compose_block(elementary3(1, 1), idT, dInv));
    // (2,3) and (3,2): -M0 lifted to -E1 (x) M
    op = tt_op_axpby(1.0, op, -1.0, compose_block(elementary3(1, 2), first_selector(n_t), massTt));
    op = tt_op_axpby(1.0, op, -1.0, compose_block(elementary3(2, 1), first_selector(n_t), massTt));
    return op;
}

TTVector KktSystem::tt_rhs(double eps) const {
    // [s^2 C^T z; 0; 0]
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
    e1[0] = 1.0;
    Eigen::VectorXd et = Eigen::VectorXd::Zero(sys_->n_t);
    et[sys_->n_t - 1] = 1.0;
    TTVector zSpace = TTVector::from_dense(s2_ * z_, sys_->space_sizes, eps);
    std::vector<Index> modes = tt_modes();
    std::vector<Index> ranks{1, 1, 1};
    std::vector<Eigen::VectorXd> cores{e1, et};
    for (int k = 0; k < zSpace.order(); ++k) {
        ranks.push_back(zSpace.ranks()[k + 1]);
        cores.push_back(zSpace.core(k));
    }
    return TTVector(std::move(modes), std::move(ranks), std::move(cores));
}

Eigen::MatrixXd KktSystem::dense(Index cap) const {
    const Index ny = sys_->n_space * sys_->n_t;
    const Index nu = sys_->n_space;
    const Index total = 2 * ny + nu;
    if (total * total > cap) throw std::runtime_error("dense KKT exceeds size cap");
    const Eigen::MatrixXd bigK = dense_block_K(*sys_, cap);
    const Eigen::MatrixXd m0 = dense_block_M0(*sys_, cap);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(total, total);
    // (1,1) block: s^2 C^T C selects the terminal slice
    for (Index i = 0; i < nu; ++i) kkt(ny - nu + i, ny - nu + i) = s2_;
    kkt.block(0, ny + nu, ny, ny) = bigK.transpose();
    kkt.block(ny + nu, 0, ny, ny) = bigK;
    for (Index j = 0; j < nu; ++j) kkt(ny + j, ny + j) = 1.0 / theta_[j];
    kkt.block(ny, ny + nu, nu, ny) = -m0.transpose();
    kkt.block(ny + nu, ny, ny, nu) = -m0;
    return kkt;
}

Eigen::VectorXd KktSystem::dense_rhs() const {
    const Index ny = sys_->n_space * sys_->n_t;
    const Index nu = sys_->n_space;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * ny + nu);
    rhs.segment(ny - nu, nu) = s2_ * z_;
    return rhs;
}

Eigen::VectorXd KktSystem::dense_solve_u0() const {
    const Eigen::MatrixXd kkt = dense();
    const Eigen::VectorXd rhs = dense_rhs();
    const Eigen::VectorXd sol = Eigen::PartialPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
    const Index ny = sys_->n_space * sys_->n_t;
    return sol.segment(ny, sys_->n_space);
}

std::pair<Eigen::VectorXd, SolverReport> amen_block_solve(const KktSystem& kkt,
                                                          const AmenOptions& opts,
                                                          std::optional<TTVector>* warm_start) {
    const TTOperator op = kkt.tt_operator();
    const TTVector rhs = kkt.tt_rhs();
    const std::vector<Index> modes = kkt.tt_modes();

    TTVector x0 = TTVector::zeros(modes);
    if (warm_start && warm_start->has_value() && (*warm_start)->modes() == modes) {
        x0 = **warm_start;
    } else {
        std::vector<Index> ranks(modes.size() + 1, 2);
        ranks.front() = ranks.back() = 1;
        x0 = TTVector::random(modes, ranks, 20240711ull);
        x0.scale(1e-8);
    }

    AmenOptions o = opts;
    o.symmetric_indefinite = true;
    auto [sol, rep] = amen_solve(op, rhs, x0, o);
    if (warm_start) *warm_start = sol;

    // extract u0: block index 1, first time slice; the leading rank is folded
    // into the first spatial core.
    Eigen::RowVectorXd acc = sol.core_slice(0, 1).row(0);  // block core has r0 = 1
    acc = acc * sol.core_slice(1, 0);
    const int d = sol.order();
    const Index n2 = sol.modes()[2];
    const Index r3 = sol.ranks()[3];
    Eigen::VectorXd firstCore(n2 * r3);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> fc(
        firstCore.data(), n2, r3);
    for (Index j = 0; j < n2; ++j) fc.row(j) = acc * sol.core_slice(2, j);

    std::vector<Index> spatialModes(sol.modes().begin() + 2, sol.modes().end());
    std::vector<Index> spatialRanks{1};
    for (int k = 3; k <= d; ++k) spatialRanks.push_back(sol.ranks()[k]);
    std::vector<Eigen::VectorXd> cores{firstCore};
    for (int k = 3; k < d; ++k) cores.push_back(sol.core(k));
    TTVector u0tt(std::move(spatialModes), std::move(spatialRanks), std::move(cores));
    return {u0tt.to_dense(), rep};
}

}  // namespace heatrec
