#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "heatrec/util.hpp"

namespace heatrec {

/// Univariate B-spline space on [0,1]: degree p and an open knot vector of
/// length n+p+1 (first and last knot repeated p+1 times). Evaluation follows
/// the Cox-de Boor recursion with half-open spans; the right endpoint is
/// closed so that the last basis function evaluates to 1 at x=1.
class SplineSpace {
public:
    SplineSpace(int degree, std::vector<double> knots);

    /// Open knot vector with n-p-1 equally spaced simple interior knots.
    static SplineSpace uniform_open(Index n, int degree);

    int degree() const { return degree_; }
    Index size() const { return n_; }
    const std::vector<double>& knots() const { return knots_; }

    /// Index of the knot span containing x (clamped so that x=1 lands in the
    /// last nonempty span).
    Index find_span(double x) const;

    /// All n basis values at x. At most p+1 entries are nonzero.
    Eigen::VectorXd eval(double x) const;

    /// First derivatives of all n basis functions at x.
    Eigen::VectorXd eval_deriv(double x) const;

    /// The p+1 possibly-nonzero values at x, plus the first active index.
    void eval_local(double x, Index& first, Eigen::VectorXd& values) const;
    void eval_local_deriv(double x, Index& first, Eigen::VectorXd& values,
                          Eigen::VectorXd& derivs) const;

    /// Greville abscissae (knot averages), the interpolation nodes used for
    /// spline collocation.
    std::vector<double> greville() const;

    /// Value of the spline with the given coefficients at x.
    double spline_value(const Eigen::VectorXd& coeffs, double x) const;

    /// Distinct breakpoints of the knot vector (span boundaries).
    std::vector<double> breakpoints() const;

private:
    void check_domain(double x) const;

    int degree_;
    Index n_;
    std::vector<double> knots_;
};

/// Gauss-Legendre nodes and weights on [-1,1].
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

/// Per-span Gauss rule for a spline space: `order` points on every nonempty
/// knot span, mapped to the span.
struct QuadratureRule {
    std::vector<double> points;
    std::vector<double> weights;
    int order = 0;

    static QuadratureRule per_span(const SplineSpace& space, int order);
};

/// Which factor of the integrand carries a derivative. `mass` integrates
/// beta_i beta_j w; `stiff_ab` differentiates the first factor when a=1 and
/// the second when b=1.
enum class FactorMode { mass, stiff_00, stiff_01, stiff_10, stiff_11 };

/// Weighted univariate factor matrix
///   M_ij = int_0^1 (d? beta_i)(d? beta_j) w(x) dx,
/// assembled with the per-span Gauss rule. quad_order 0 picks degree+2 points
/// per span. Throws if the weight evaluates to a non-finite value, naming the
/// offending Gauss point.
Eigen::MatrixXd univariate_matrix(const SplineSpace& space,
                                  const std::function<double(double)>& weight,
                                  FactorMode mode, int quad_order = 0);

}  // namespace heatrec
