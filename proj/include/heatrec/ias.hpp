#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "heatrec/util.hpp"

namespace heatrec {

/// Generalized-gamma hypermodel (r, beta, eta, vartheta); eta = |r beta - 3/2|
/// is stored explicitly because the parameter tables couple it to beta
/// differently per row. vartheta is per-component (size n) or scalar
/// broadcast (size 1).
struct HyperModel {
    double r = 1.0;
    double beta = 1.5;
    double eta = 0.0;
    Eigen::VectorXd vartheta;

    double signed_coeff() const { return r > 0 ? eta : -eta; }  // r beta - 3/2
    double vartheta_at(Index j) const { return vartheta.size() == 1 ? vartheta[0] : vartheta[j]; }

    /// Globally convex model, r = 1 (eta 1e-5, beta 3/2 + eta, vartheta 3.3).
    static HyperModel convex_gauss(double vartheta = 3.3);
    /// Gamma model, r = 0.5 (eta 1e-3, beta (3/2 + eta)/r, vartheta 8.3).
    static HyperModel gamma_sparse(double vartheta = 8.3);
    /// Inverse-gamma model, r = -1 (beta 3, eta beta + 3/2, vartheta 1.5e-4).
    static HyperModel inverse_gamma(double vartheta = 1.5e-4);
    static HyperModel by_r(double r);
};

/// MAP objective
///   F = 1/2 ||z - A u||^2 + 1/2 sum u_j^2/theta_j
///       - (r beta - 3/2) sum log(theta_j / vartheta_j) + sum (theta_j/vartheta_j)^r.
double objective(const Eigen::VectorXd& u, const Eigen::VectorXd& theta, const HyperModel& m,
                 const Eigen::VectorXd& residual);
double objective(const Eigen::VectorXd& u, const Eigen::VectorXd& theta, const HyperModel& m,
                 const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_A,
                 const Eigen::VectorXd& z);

/// Positive stationary point of F in theta_j. Closed forms for r = 1 and
/// r = -1; safeguarded bisection on the stationarity equation otherwise.
double update_theta(double u_j, double vartheta_j, const HyperModel& m);

/// xi = phi(|z|) from the initial value problem
///   phi'(z) = 2 z phi / (2 r^2 phi^{r+1} + z^2),  phi(0) = (eta/r)^{1/r},
/// integrated by adaptive RK4; theta_j = vartheta_j * xi. Requires r > 0.
double update_theta_ode(double z_abs, const HyperModel& m);
double update_theta_via_ode(double u_j, double vartheta_j, const HyperModel& m);

/// Per-index sensitivity scaling vartheta_j = C / ||A e_j||^2.
struct SensitivityScale {
    Eigen::VectorXd vartheta;
    std::vector<Index> flagged;  // zero-norm columns patched with the median
    double stochastic_error = 0.0;
};
SensitivityScale sensitivity_scale(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_A,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_At, Index n, double c,
    int probes = 0, std::uint64_t seed = 7);

/// Convexity threshold t_j = vartheta_j * (eta / (|r| |r-1|))^e for the
/// sparsity model; e = 1 reproduces the printed form.
Eigen::VectorXd convexity_threshold(const HyperModel& m2, Index n, double exponent = 1.0);

struct IasOptions {
    int max_iter = 50;
    double tol = 1e-6;          // relative change of u
    int switch_iteration = 10;  // i_s for the global hybrid (1-based)
    double bound_c = 1.0;       // box |u_j| <= bound_c sqrt(t_j) on switched indices
    double threshold_exponent = 1.0;
    double nonzero_cutoff = 1e-3;  // relative to max |u|
    bool track_objective = true;
};

struct IasTrace {
    std::vector<double> objective;
    std::vector<int> nonzeros;
    std::vector<int> inner_iterations;
    std::vector<int> switched_count;
    std::vector<double> rel_change;
};

struct IasState {
    Eigen::VectorXd u;
    Eigen::VectorXd theta;
    std::vector<bool> in_second_model;  // the switched set I
    int iterations = 0;
    bool converged = false;
    IasTrace trace;
};

/// Inner u-update: given theta and the previous iterate, returns the new u
/// and the inner iteration count.
using USolver =
    std::function<std::pair<Eigen::VectorXd, int>(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct IasProblem {
    Index n = 0;
    Eigen::VectorXd z;  // whitened data
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_A;  // whitened map
    USolver solve_u;
};

IasState ias_plain(const IasProblem& problem, const HyperModel& m, const IasOptions& opts = {});
IasState ias_global_hybrid(const IasProblem& problem, const HyperModel& m1, const HyperModel& m2,
                           const IasOptions& opts = {});
IasState ias_local_hybrid(const IasProblem& problem, const HyperModel& m1, const HyperModel& m2,
                          const IasOptions& opts = {});

int count_nonzeros(const Eigen::VectorXd& u, double relative_cutoff);

}  // namespace heatrec
