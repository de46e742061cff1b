#pragma once

#include "heatrec/geometry.hpp"
#include "heatrec/kron.hpp"

namespace heatrec {

enum class OperatorKind { mass, stiffness };

/// Quadrature order used for both the Kronecker factors and the dense oracle:
/// exact for products of two degree-p splines times a degree-p~ weight spline.
int assembly_quad_order(int p, int p_tilde);

/// Mass operator as a Kronecker sum with one term per weight rank:
///   M = sum_r (x)_d M^(d)(w_r^(d) . B~^(d)).
KroneckerSumOperator assemble_mass(const ControlNet& net, const LowRankWeight& omega,
                                   bool interior = false);

/// Stiffness operator: for every (k,l) block and weight rank one Kronecker
/// term whose d-th factor differentiates the first basis when l=d and the
/// second when k=d.
KroneckerSumOperator assemble_stiffness(const ControlNet& net, const WeightSet& weights,
                                        bool interior = false);

/// Direct multi-dimensional Gauss quadrature of the mass/stiffness bilinear
/// forms with the exact geometry weights; ground truth for the Kronecker
/// path. Uses the same per-dimension rule as the low-rank assembly.
Eigen::MatrixXd dense_oracle_assemble(const ControlNet& net, OperatorKind kind,
                                      bool interior = false, int p_tilde = 4,
                                      Index cap = kDenseCap);

}  // namespace heatrec
