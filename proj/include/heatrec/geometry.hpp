#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "heatrec/bspline.hpp"
#include "heatrec/util.hpp"

namespace heatrec {

/// B-spline geometry mapping G from [0,1]^D onto a physical domain, given by
/// per-dimension spline spaces and a control-point tensor. Control coordinate
/// a is stored flat in row-major order over (n_1,...,n_D).
class ControlNet {
public:
    ControlNet(std::vector<SplineSpace> spaces, std::vector<Eigen::VectorXd> coords);

    int dim() const { return static_cast<int>(spaces_.size()); }
    const std::vector<SplineSpace>& spaces() const { return spaces_; }
    const Eigen::VectorXd& coord(int a) const { return coords_[a]; }
    std::vector<Index> basis_counts() const;

    /// G(x) = sum_i C_i beta_i(x).
    Eigen::VectorXd point(const std::vector<double>& xhat) const;
    /// J(a,b) = dG_a / dx_b.
    Eigen::MatrixXd jacobian(const std::vector<double>& xhat) const;
    /// omega(x) = |det J(x)|; throws for |det| below 1e-14.
    double weight_omega(const std::vector<double>& xhat) const;
    /// Q(x) = (J^T J)^{-1} |det J|, symmetric positive definite.
    Eigen::MatrixXd weight_Q(const std::vector<double>& xhat) const;

    /// Checks that det J keeps one sign on the tensor Gauss grid.
    void validate_nondegenerate(int quad_order = 3) const;

    static ControlNet from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    std::vector<SplineSpace> spaces_;
    std::vector<Eigen::VectorXd> coords_;
};

/// Canonical low-rank representation of an interpolated weight function:
/// W ~ sum_r (x)_d w_r^(d), with coefficients in the interpolation spaces.
struct LowRankWeight {
    int rank = 0;
    std::vector<std::vector<Eigen::VectorXd>> factors;  // [r][d]
    std::vector<SplineSpace> spaces;                    // interpolation spaces
    double reported_error = 0.0;  // Frobenius reconstruction error, relative

    double eval(const std::vector<double>& xhat) const;
    /// Univariate factor function w_r^(d) . B~^(d)(x) for assembly.
    std::function<double(double)> factor_function(int r, int d) const;
    /// Dense reconstruction (for oracle checks on small sizes).
    Eigen::VectorXd reconstruct_dense(Index cap = kWeightDenseCap) const;

    static constexpr Index kWeightDenseCap = Index(1) << 22;
};

struct WeightSet {
    LowRankWeight omega;
    std::vector<std::vector<LowRankWeight>> q;  // D x D, q[k][l] shares factors with q[l][k]
    std::vector<SplineSpace> spaces;            // interpolation spaces actually used
    double eps = 1e-8;
    double interp_error = 0.0;  // validated pointwise interpolation error, relative

    int mass_rank() const { return omega.rank; }
    int stiffness_term_count() const;
};

struct WeightInterpOptions {
    double eps = 1e-8;
    int max_refine = 3;  // interpolation grid doublings if validation misses eps
};

/// Interpolates omega and all q_{k,l} into a finer spline space at the
/// Greville tensor grid and factors the coefficient tensors (SVD in 2D,
/// TT-SVD with core unfolding in 3D).
WeightSet interpolate_weights(const ControlNet& net, const WeightInterpOptions& opts = {});

// Built-in geometries. All fit control points by Greville interpolation of an
// exact map, so the corner control points coincide with the mapped corners.
ControlNet make_identity_net(const std::vector<SplineSpace>& spaces);
ControlNet make_quarter_annulus(const std::vector<SplineSpace>& spaces, double r_inner = 1.0,
                                double r_outer = 2.0);
/// Quarter annulus cross-section extruded along z.
ControlNet make_quarter_pipe(const std::vector<SplineSpace>& spaces, double r_inner = 1.0,
                             double r_outer = 2.0, double length = 3.0);
/// Square cross-section bar, twisted about its axis along z; nonseparable
/// Jacobian weights.
ControlNet make_twisted_bar(const std::vector<SplineSpace>& spaces, double width = 1.0,
                            double length = 3.0, double twist = 0.9);
/// Unit square warped by a smooth nonseparable displacement (for rank
/// diversity in tests).
ControlNet make_warped_square(const std::vector<SplineSpace>& spaces, double amplitude = 0.12);

/// Built-in lookup by name ("unit_square", "unit_cube", "quarter_annulus",
/// "quarter_pipe", "twisted_bar", "warped_square").
ControlNet make_builtin_geometry(const std::string& name, const std::vector<SplineSpace>& spaces);

/// Greville interpolation of a smooth map into the given tensor spline space.
ControlNet fit_net(const std::vector<SplineSpace>& spaces,
                   const std::function<Eigen::VectorXd(const std::vector<double>&)>& map);

}  // namespace heatrec
