#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "heatrec/tensor_train.hpp"

namespace heatrec {

/// Convergence record for an inner solve.
struct SolverReport {
    int iterations = 0;
    double residual = 0.0;  // final relative residual
    bool converged = false;
    bool regularized = false;  // a singular local system needed a trace shift
    bool residual_estimated = false;  // residual from local projections, not the full TT
    std::vector<double> residual_trace;
    std::vector<double> energy_trace;  // AMEn energy J(x) per core update (optional)
    std::string note;

    void write_csv(std::ostream& out) const;
};

using LinOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Regularized least squares via CGLS on the reduced problem
///   min_w || A D^{1/2} w - z ||^2 + ||w||^2,       u = D^{1/2} w,
/// the minimizer of ||A u - z||^2 + ||D^{-1/2} u||^2. Stops at max_iter or
/// when the normal-equation residual has dropped by `tol` relative to its
/// initial value. Throws for nonpositive variances.
std::pair<Eigen::VectorXd, SolverReport> cgls(const LinOp& apply_A, const LinOp& apply_At,
                                              const Eigen::VectorXd& theta,
                                              const Eigen::VectorXd& z, int max_iter = 30,
                                              double tol = 1e-8);

struct AmenOptions {
    double tol = 1e-8;          // relative residual target
    int max_sweeps = 20;
    Index enrich_rank = 3;      // residual-based basis expansion per site
    Index max_rank = 80;        // solution rank cap
    Index direct_size = 500;    // dense factorization for local systems up to this
    double cg_tol_factor = 0.1; // inner iterative tolerance = tol * factor
    int local_max_iter = 400;
    bool track_energy = false;  // record J(x) = (x,Ax) - 2(b,x) per core update
    bool symmetric_indefinite = false;  // saddle systems: LU/MINRES local solves
    Index exact_residual_cost_cap = Index(1) << 27;  // flop guard for exact residual norms
};

/// Alternating-minimal-energy solve of A x = b in TT format for symmetric A.
/// One sweep solves the Galerkin-projected local system at every core,
/// truncates, and expands the basis with a low-rank approximation of the
/// projected residual.
std::pair<TTVector, SolverReport> amen_solve(const TTOperator& a, const TTVector& b,
                                             const TTVector& x0, const AmenOptions& opts = {});

// Small dense/iterative kernels shared by the solvers (exposed for tests).
Eigen::VectorXd conjugate_gradient(const LinOp& apply, const Eigen::VectorXd& rhs,
                                   const Eigen::VectorXd& x0, double tol, int max_iter,
                                   int* iters_out = nullptr);
Eigen::VectorXd minres(const LinOp& apply, const Eigen::VectorXd& rhs, const Eigen::VectorXd& x0,
                       double tol, int max_iter, int* iters_out = nullptr);

}  // namespace heatrec
