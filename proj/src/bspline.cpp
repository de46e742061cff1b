#include "heatrec/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace heatrec {

SplineSpace::SplineSpace(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
    if (degree_ < 0) throw std::invalid_argument("spline degree must be nonnegative");
    const Index m = static_cast<Index>(knots_.size());
    n_ = m - degree_ - 1;
    if (n_ < degree_ + 1) throw std::invalid_argument("spline space needs at least degree+1 basis functions");
    if (!std::is_sorted(knots_.begin(), knots_.end()))
        throw std::invalid_argument("knot vector must be sorted");
    for (int i = 0; i <= degree_; ++i) {
        if (knots_[i] != knots_.front() || knots_[m - 1 - i] != knots_.back())
            throw std::invalid_argument("knot vector must be open (degree+1 repeats at both ends)");
    }
    if (knots_.front() != 0.0 || knots_.back() != 1.0)
        throw std::invalid_argument("knot vector must span [0,1]");
    // interior multiplicity <= degree
    Index run = 1;
    for (Index i = degree_ + 2; i + degree_ < m; ++i) {
        run = (knots_[i] == knots_[i - 1]) ? run + 1 : 1;
        if (run > degree_) throw std::invalid_argument("interior knot multiplicity exceeds degree");
    }
}

SplineSpace SplineSpace::uniform_open(Index n, int degree) {
    if (degree < 0) throw std::invalid_argument("spline degree must be nonnegative");
    if (n < degree + 1) throw std::invalid_argument("basis count must be at least degree+1");
    std::vector<double> knots(n + degree + 1);
    const Index interior = n - degree - 1;
    for (int i = 0; i <= degree; ++i) {
        knots[i] = 0.0;
        knots[n + degree - i] = 1.0;
    }
    for (Index k = 1; k <= interior; ++k)
        knots[degree + k] = static_cast<double>(k) / static_cast<double>(interior + 1);
    return SplineSpace(degree, std::move(knots));
}

void SplineSpace::check_domain(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream msg;
        msg << "evaluation point " << x << " outside [0,1]";
        throw std::domain_error(msg.str());
    }
}

Index SplineSpace::find_span(double x) const {
    check_domain(x);
    const int p = degree_;
    if (x >= knots_[n_]) return n_ - 1;  // right-closed last span
    // binary search for i with knots[i] <= x < knots[i+1]
    Index lo = p, hi = n_;
    while (hi - lo > 1) {
        const Index mid = (lo + hi) / 2;
        if (x < knots_[mid])
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

void SplineSpace::eval_local(double x, Index& first, Eigen::VectorXd& values) const {
    const int p = degree_;
    const Index span = find_span(x);
    first = span - p;
    values.resize(p + 1);
    values[0] = 1.0;
    std::vector<double> left(p + 1), right(p + 1);
    for (int j = 1; j <= p; ++j) {
        left[j] = x - knots_[span + 1 - j];
        right[j] = knots_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        values[j] = saved;
    }
}

void SplineSpace::eval_local_deriv(double x, Index& first, Eigen::VectorXd& values,
                                   Eigen::VectorXd& derivs) const {
    const int p = degree_;
    const Index span = find_span(x);
    first = span - p;
    values.resize(p + 1);
    derivs.resize(p + 1);

    // ndu[j][r]: triangular table of basis values and knot differences
    std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
    std::vector<double> left(p + 1), right(p + 1);
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - knots_[span + 1 - j];
        right[j] = knots_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double tmp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        ndu[j][j] = saved;
    }
    for (int r = 0; r <= p; ++r) values[r] = ndu[r][p];

    if (p == 0) {
        derivs.setZero();
        return;
    }
    // first derivative from degree p-1 values:
    //   b'_{i,p} = p * ( N_{i,p-1}/(x_{i+p}-x_i) - N_{i+1,p-1}/(x_{i+p+1}-x_{i+1}) )
    for (int r = 0; r <= p; ++r) {
        double d = 0.0;
        if (r > 0) d += ndu[r - 1][p - 1] / ndu[p][r - 1];
        if (r < p) d -= ndu[r][p - 1] / ndu[p][r];
        derivs[r] = p * d;
    }
}

Eigen::VectorXd SplineSpace::eval(double x) const {
    Index first;
    Eigen::VectorXd local;
    eval_local(x, first, local);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    out.segment(first, degree_ + 1) = local;
    return out;
}

Eigen::VectorXd SplineSpace::eval_deriv(double x) const {
    Index first;
    Eigen::VectorXd vals, ders;
    eval_local_deriv(x, first, vals, ders);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    out.segment(first, degree_ + 1) = ders;
    return out;
}

std::vector<double> SplineSpace::greville() const {
    std::vector<double> g(n_);
    for (Index i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int j = 1; j <= degree_; ++j) s += knots_[i + j];
        g[i] = degree_ > 0 ? s / degree_ : 0.5 * (knots_[i] + knots_[i + 1]);
    }
    return g;
}

double SplineSpace::spline_value(const Eigen::VectorXd& coeffs, double x) const {
    Index first;
    Eigen::VectorXd local;
    eval_local(x, first, local);
    return coeffs.segment(first, degree_ + 1).dot(local);
}

std::vector<double> SplineSpace::breakpoints() const {
    std::vector<double> b;
    b.push_back(knots_.front());
    for (double k : knots_)
        if (k > b.back()) b.push_back(k);
    return b;
}

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 1) throw std::invalid_argument("quadrature order must be positive");
    nodes.assign(order, 0.0);
    weights.assign(order, 0.0);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton on the Legendre polynomial from the Chebyshev initial guess
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) nodes[order / 2] = 0.0;
}

QuadratureRule QuadratureRule::per_span(const SplineSpace& space, int order) {
    QuadratureRule rule;
    rule.order = order;
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    const auto bps = space.breakpoints();
    for (std::size_t s = 0; s + 1 < bps.size(); ++s) {
        const double a = bps[s], b = bps[s + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int i = 0; i < order; ++i) {
            rule.points.push_back(mid + half * gx[i]);
            rule.weights.push_back(half * gw[i]);
        }
    }
    return rule;
}

Eigen::MatrixXd univariate_matrix(const SplineSpace& space,
                                  const std::function<double(double)>& weight,
                                  FactorMode mode, int quad_order) {
    const int p = space.degree();
    const int q = quad_order > 0 ? quad_order : p + 2;
    const bool d_first = mode == FactorMode::stiff_10 || mode == FactorMode::stiff_11;
    const bool d_second = mode == FactorMode::stiff_01 || mode == FactorMode::stiff_11;

    const QuadratureRule rule = QuadratureRule::per_span(space, q);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(space.size(), space.size());
    Index first;
    Eigen::VectorXd vals, ders;
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
        const double x = rule.points[g];
        const double w = weight(x);
        if (!std::isfinite(w)) {
            std::ostringstream msg;
            msg << "non-finite weight sample at Gauss point x=" << x;
            throw std::runtime_error(msg.str());
        }
        space.eval_local_deriv(x, first, vals, ders);
        const Eigen::VectorXd& fi = d_first ? ders : vals;
        const Eigen::VectorXd& fj = d_second ? ders : vals;
        const double scale = w * rule.weights[g];
        for (int a = 0; a <= p; ++a)
            for (int b = 0; b <= p; ++b) out(first + a, first + b) += scale * fi[a] * fj[b];
    }
    return out;
}

}  // namespace heatrec
