#include "heatrec/geometry.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "heatrec/tensor_train.hpp"

namespace heatrec {

namespace {

// Solve the per-dimension collocation systems along mode d of a flat
// row-major tensor: replaces each mode-d fiber f by B^{-1} f.
void mode_solve(Eigen::VectorXd& data, const std::vector<Index>& extents, int d,
                const Eigen::FullPivLU<Eigen::MatrixXd>& lu) {
    const Index nd = extents[d];
    Index inner = 1;
    for (std::size_t k = d + 1; k < extents.size(); ++k) inner *= extents[k];
    Index outer = 1;
    for (int k = 0; k < d; ++k) outer *= extents[k];

    Eigen::MatrixXd fibers(nd, inner);
    for (Index o = 0; o < outer; ++o) {
        double* base = data.data() + o * nd * inner;
        for (Index i = 0; i < nd; ++i)
            for (Index t = 0; t < inner; ++t) fibers(i, t) = base[i * inner + t];
        Eigen::MatrixXd solved = lu.solve(fibers);
        for (Index i = 0; i < nd; ++i)
            for (Index t = 0; t < inner; ++t) base[i * inner + t] = solved(i, t);
    }
}

Eigen::FullPivLU<Eigen::MatrixXd> collocation_lu(const SplineSpace& space) {
    const Index n = space.size();
    const auto nodes = space.greville();
    Eigen::MatrixXd b(n, n);
    for (Index i = 0; i < n; ++i) b.row(i) = space.eval(nodes[i]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
    if (lu.rank() < n)
        throw std::runtime_error("singular spline interpolation matrix (knot configuration)");
    return lu;
}

void fix_signs_2d(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) {
            u.col(c) = -u.col(c);
            v.col(c) = -v.col(c);
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// ControlNet

ControlNet::ControlNet(std::vector<SplineSpace> spaces, std::vector<Eigen::VectorXd> coords)
    : spaces_(std::move(spaces)), coords_(std::move(coords)) {
    const int d = static_cast<int>(spaces_.size());
    if (d < 2 || d > 3) throw std::invalid_argument("control net dimension must be 2 or 3");
    if (static_cast<int>(coords_.size()) != d)
        throw std::invalid_argument("control net needs one coordinate tensor per dimension");
    Index total = 1;
    for (const auto& s : spaces_) total *= s.size();
    for (const auto& c : coords_)
        if (c.size() != total)
            throw std::invalid_argument("control point tensor extents do not match basis counts");
}

std::vector<Index> ControlNet::basis_counts() const {
    std::vector<Index> n;
    for (const auto& s : spaces_) n.push_back(s.size());
    return n;
}

Eigen::VectorXd ControlNet::point(const std::vector<double>& xhat) const {
    const int d = dim();
    if (static_cast<int>(xhat.size()) != d) throw std::invalid_argument("point: dimension mismatch");
    std::vector<Index> first(d);
    std::vector<Eigen::VectorXd> vals(d);
    std::vector<Index> degp1(d);
    for (int k = 0; k < d; ++k) {
        spaces_[k].eval_local(xhat[k], first[k], vals[k]);
        degp1[k] = spaces_[k].degree() + 1;
    }
    const auto counts = basis_counts();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    std::vector<Index> loc(d, 0);
    do {
        double w = 1.0;
        std::vector<Index> idx(d);
        for (int k = 0; k < d; ++k) {
            w *= vals[k][loc[k]];
            idx[k] = first[k] + loc[k];
        }
        const Index lin = linear_index(counts, idx);
        for (int a = 0; a < d; ++a) out[a] += w * coords_[a][lin];
    } while (next_multi_index(degp1, loc));
    return out;
}

Eigen::MatrixXd ControlNet::jacobian(const std::vector<double>& xhat) const {
    const int d = dim();
    if (static_cast<int>(xhat.size()) != d)
        throw std::invalid_argument("jacobian: dimension mismatch");
    std::vector<Index> first(d);
    std::vector<Eigen::VectorXd> vals(d), ders(d);
    std::vector<Index> degp1(d);
    for (int k = 0; k < d; ++k) {
        spaces_[k].eval_local_deriv(xhat[k], first[k], vals[k], ders[k]);
        degp1[k] = spaces_[k].degree() + 1;
    }
    const auto counts = basis_counts();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, d);
    std::vector<Index> loc(d, 0);
    do {
        std::vector<Index> idx(d);
        for (int k = 0; k < d; ++k) idx[k] = first[k] + loc[k];
        const Index lin = linear_index(counts, idx);
        for (int b = 0; b < d; ++b) {
            double w = 1.0;
            for (int k = 0; k < d; ++k) w *= (k == b) ? ders[k][loc[k]] : vals[k][loc[k]];
            for (int a = 0; a < d; ++a) jac(a, b) += w * coords_[a][lin];
        }
    } while (next_multi_index(degp1, loc));
    return jac;
}

double ControlNet::weight_omega(const std::vector<double>& xhat) const {
    const double det = jacobian(xhat).determinant();
    if (std::abs(det) < 1e-14) {
        std::ostringstream msg;
        msg << "degenerate geometry: |det grad G| = " << std::abs(det) << " at parameter point";
        throw std::runtime_error(msg.str());
    }
    return std::abs(det);
}

Eigen::MatrixXd ControlNet::weight_Q(const std::vector<double>& xhat) const {
    const Eigen::MatrixXd jac = jacobian(xhat);
    const double det = jac.determinant();
    if (std::abs(det) < 1e-14)
        throw std::runtime_error("degenerate geometry: singular Jacobian in weight_Q");
    const Eigen::MatrixXd gram = jac.transpose() * jac;
    Eigen::MatrixXd q = gram.inverse() * std::abs(det);
    return 0.5 * (q + q.transpose());
}

void ControlNet::validate_nondegenerate(int quad_order) const {
    const int d = dim();
    std::vector<std::vector<double>> pts(d);
    for (int k = 0; k < d; ++k) {
        const auto rule = QuadratureRule::per_span(spaces_[k], quad_order);
        pts[k] = rule.points;
    }
    std::vector<Index> extents(d);
    for (int k = 0; k < d; ++k) extents[k] = static_cast<Index>(pts[k].size());
    std::vector<Index> idx(d, 0);
    double sign = 0.0;
    do {
        std::vector<double> x(d);
        for (int k = 0; k < d; ++k) x[k] = pts[k][idx[k]];
        const double det = jacobian(x).determinant();
        if (std::abs(det) < 1e-14)
            throw std::runtime_error("degenerate geometry: vanishing Jacobian determinant");
        const double s = det > 0 ? 1.0 : -1.0;
        if (sign == 0.0) sign = s;
        if (s != sign)
            throw std::runtime_error("degenerate geometry: Jacobian determinant changes sign");
    } while (next_multi_index(extents, idx));
}

ControlNet ControlNet::from_json(const nlohmann::json& j) {
    const int d = j.at("dimension").get<int>();
    const auto degrees = j.at("degrees").get<std::vector<int>>();
    const auto knots = j.at("knots").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(degrees.size()) != d || static_cast<int>(knots.size()) != d)
        throw std::invalid_argument("control net JSON: degrees/knots count mismatch");
    std::vector<SplineSpace> spaces;
    for (int k = 0; k < d; ++k) spaces.emplace_back(degrees[k], knots[k]);

    std::vector<Index> counts;
    for (const auto& s : spaces) counts.push_back(s.size());
    const Index total = product(counts);

    const auto& cps = j.at("control_points");
    if (static_cast<int>(cps.size()) != d)
        throw std::invalid_argument("control net JSON: control_points needs one block per coordinate");
    std::vector<Eigen::VectorXd> coords(d, Eigen::VectorXd::Zero(total));
    for (int a = 0; a < d; ++a) {
        // nested arrays indexed [i1]...[iD]
        std::function<void(const nlohmann::json&, int, std::vector<Index>&)> walk =
            [&](const nlohmann::json& node, int depth, std::vector<Index>& idx) {
                if (depth == d) {
                    coords[a][linear_index(counts, idx)] = node.get<double>();
                    return;
                }
                if (!node.is_array() || static_cast<Index>(node.size()) != counts[depth])
                    throw std::invalid_argument("control net JSON: control_points extent mismatch");
                for (Index i = 0; i < counts[depth]; ++i) {
                    idx[depth] = i;
                    walk(node[i], depth + 1, idx);
                }
            };
        std::vector<Index> idx(d, 0);
        walk(cps[a], 0, idx);
    }
    return ControlNet(std::move(spaces), std::move(coords));
}

nlohmann::json ControlNet::to_json() const {
    nlohmann::json j;
    const int d = dim();
    j["dimension"] = d;
    std::vector<int> degrees;
    std::vector<std::vector<double>> knots;
    for (const auto& s : spaces_) {
        degrees.push_back(s.degree());
        knots.push_back(s.knots());
    }
    j["degrees"] = degrees;
    j["knots"] = knots;
    const auto counts = basis_counts();
    nlohmann::json blocks = nlohmann::json::array();
    for (int a = 0; a < d; ++a) {
        std::function<nlohmann::json(int, std::vector<Index>&)> build =
            [&](int depth, std::vector<Index>& idx) -> nlohmann::json {
            if (depth == d) return coords_[a][linear_index(counts, idx)];
            nlohmann::json arr = nlohmann::json::array();
            for (Index i = 0; i < counts[depth]; ++i) {
                idx[depth] = i;
                arr.push_back(build(depth + 1, idx));
            }
            return arr;
        };
        std::vector<Index> idx(d, 0);
        blocks.push_back(build(0, idx));
    }
    j["control_points"] = blocks;
    return j;
}

// ---------------------------------------------------------------------------
// LowRankWeight

double LowRankWeight::eval(const std::vector<double>& xhat) const {
    double sum = 0.0;
    for (int r = 0; r < rank; ++r) {
        double term = 1.0;
        for (std::size_t d = 0; d < spaces.size(); ++d)
            term *= spaces[d].spline_value(factors[r][d], xhat[d]);
        sum += term;
    }
    return sum;
}

std::function<double(double)> LowRankWeight::factor_function(int r, int d) const {
    SplineSpace space = spaces[d];
    Eigen::VectorXd coeffs = factors[r][d];
    return [space = std::move(space), coeffs = std::move(coeffs)](double x) {
        return space.spline_value(coeffs, x);
    };
}

Eigen::VectorXd LowRankWeight::reconstruct_dense(Index cap) const {
    std::vector<Index> extents;
    for (const auto& s : spaces) extents.push_back(s.size());
    const Index total = product(extents);
    if (total > cap) throw std::runtime_error("weight reconstruction exceeds size cap");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(total);
    for (int r = 0; r < rank; ++r) {
        Eigen::VectorXd acc = factors[r][0];
        for (std::size_t d = 1; d < spaces.size(); ++d) {
            Eigen::VectorXd next(acc.size() * factors[r][d].size());
            Index pos = 0;
            for (Index i = 0; i < acc.size(); ++i)
                for (Index j = 0; j < factors[r][d].size(); ++j) next[pos++] = acc[i] * factors[r][d][j];
            acc = std::move(next);
        }
        out += acc;
    }
    return out;
}

int WeightSet::stiffness_term_count() const {
    int count = 0;
    for (const auto& row : q)
        for (const auto& w : row) count += w.rank;
    return count;
}

// ---------------------------------------------------------------------------
// Weight interpolation and factorization

namespace {

// Canonical factorization of a flat row-major coefficient tensor.
LowRankWeight factor_weight(const Eigen::VectorXd& coeffs, const std::vector<SplineSpace>& spaces,
                            double eps) {
    const int d = static_cast<int>(spaces.size());
    std::vector<Index> extents;
    for (const auto& s : spaces) extents.push_back(s.size());

    LowRankWeight out;
    out.spaces = spaces;
    const double norm = coeffs.norm();
    if (norm == 0.0) {
        out.rank = 1;
        out.factors.push_back({});
        for (int k = 0; k < d; ++k) out.factors[0].push_back(Eigen::VectorXd::Zero(extents[k]));
        return out;
    }

    if (d == 2) {
        Eigen::MatrixXd w(extents[0], extents[1]);
        for (Index i = 0; i < extents[0]; ++i)
            for (Index j = 0; j < extents[1]; ++j) w(i, j) = coeffs[i * extents[1] + j];
        Eigen::BDCSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::MatrixXd u = svd.matrixU();
        Eigen::MatrixXd v = svd.matrixV();
        fix_signs_2d(u, v);
        const auto& sigma = svd.singularValues();
        double tail = 0.0;
        Index r = sigma.size();
        while (r > 1) {
            const double next = tail + sigma[r - 1] * sigma[r - 1];
            if (std::sqrt(next) > eps * norm) break;
            tail = next;
            --r;
        }
        out.rank = static_cast<int>(r);
        out.reported_error = std::sqrt(tail) / norm;
        for (Index t = 0; t < r; ++t)
            out.factors.push_back({Eigen::VectorXd(sigma[t] * u.col(t)), Eigen::VectorXd(v.col(t))});
        return out;
    }

    // 3D: TT-SVD then unfold the chain into rank-1 terms.
    TTVector tt = TTVector::from_dense(coeffs, extents, eps);
    const Index r1 = tt.ranks()[1], r2 = tt.ranks()[2];
    const Index cap = extents[0] * extents[1];
    if (r1 * r2 > cap)
        throw std::runtime_error("weight factorization: rank exceeds interpolation space size");
    for (Index a = 0; a < r1; ++a) {
        Eigen::VectorXd f0(extents[0]);
        for (Index i = 0; i < extents[0]; ++i) f0[i] = tt.core(0)[i * r1 + a];
        for (Index b = 0; b < r2; ++b) {
            Eigen::VectorXd f1(extents[1]);
            for (Index i = 0; i < extents[1]; ++i) f1[i] = tt.core(1)[(a * extents[1] + i) * r2 + b];
            Eigen::VectorXd f2(extents[2]);
            for (Index i = 0; i < extents[2]; ++i) f2[i] = tt.core(2)[b * extents[2] + i];
            if (f0.norm() * f1.norm() * f2.norm() == 0.0) continue;
            out.factors.push_back({f0, f1, f2});
        }
    }
    out.rank = static_cast<int>(out.factors.size());

    // verify the expansion on construction when the tensor is small
    if (coeffs.size() <= LowRankWeight::kWeightDenseCap) {
        const Eigen::VectorXd recon = out.reconstruct_dense();
        out.reported_error = (recon - coeffs).norm() / norm;
        if (out.reported_error > 10.0 * eps + 1e-13)
            throw std::runtime_error("weight factorization missed its tolerance");
    }
    return out;
}

}  // namespace

WeightSet interpolate_weights(const ControlNet& net, const WeightInterpOptions& opts) {
    const int d = net.dim();
    const int nWeights = 1 + d * (d + 1) / 2;

    std::vector<SplineSpace> tildeSpaces;
    std::vector<Index> extents(d);
    for (int k = 0; k < d; ++k) {
        const auto& s = net.spaces()[k];
        const int pt = std::max(2 * s.degree(), 4);
        const Index nt = std::max<Index>(2 * s.size(), 16);
        tildeSpaces.push_back(SplineSpace::uniform_open(nt, pt));
        extents[k] = nt;
    }

    auto sample_weights = [&](const std::vector<std::vector<double>>& grids,
                              std::vector<Eigen::VectorXd>& samples, double& scale) {
        std::vector<Index> gx(d);
        for (int k = 0; k < d; ++k) gx[k] = static_cast<Index>(grids[k].size());
        const Index total = product(gx);
        samples.assign(nWeights, Eigen::VectorXd(total));
        std::vector<Index> idx(d, 0);
        Index lin = 0;
        scale = 0.0;
        do {
            std::vector<double> x(d);
            for (int k = 0; k < d; ++k) x[k] = grids[k][idx[k]];
            samples[0][lin] = net.weight_omega(x);
            const Eigen::MatrixXd q = net.weight_Q(x);
            int w = 1;
            for (int k = 0; k < d; ++k)
                for (int l = k; l < d; ++l) samples[w++][lin] = q(k, l);
            for (int t = 0; t < nWeights; ++t) scale = std::max(scale, std::abs(samples[t][lin]));
            ++lin;
        } while (next_multi_index(gx, idx));
    };

    WeightSet set;
    set.eps = opts.eps;
    std::vector<Eigen::VectorXd> coeffs;
    for (int attempt = 0;; ++attempt) {
        std::vector<std::vector<double>> grids(d);
        std::vector<Eigen::FullPivLU<Eigen::MatrixXd>> lus;
        for (int k = 0; k < d; ++k) {
            grids[k] = tildeSpaces[k].greville();
            lus.push_back(collocation_lu(tildeSpaces[k]));
            extents[k] = tildeSpaces[k].size();
        }
        double scale = 0.0;
        std::vector<Eigen::VectorXd> samples;
        sample_weights(grids, samples, scale);
        coeffs = samples;
        for (auto& c : coeffs)
            for (int k = 0; k < d; ++k) mode_solve(c, extents, k, lus[k]);

        // validate pointwise between the interpolation nodes
        std::vector<std::vector<double>> mids(d);
        for (int k = 0; k < d; ++k)
            for (std::size_t i = 0; i + 1 < grids[k].size(); ++i)
                mids[k].push_back(0.5 * (grids[k][i] + grids[k][i + 1]));
        double err = 0.0;
        {
            std::vector<Index> mx(d);
            for (int k = 0; k < d; ++k) mx[k] = static_cast<Index>(mids[k].size());
            std::vector<Index> idx(d, 0);
            do {
                std::vector<double> x(d);
                for (int k = 0; k < d; ++k) x[k] = mids[k][idx[k]];
                std::vector<Eigen::VectorXd> basis(d);
                for (int k = 0; k < d; ++k) basis[k] = tildeSpaces[k].eval(x[k]);
                auto interp_value = [&](const Eigen::VectorXd& c) {
                    // contract coefficient tensor with per-dim basis vectors
                    Eigen::VectorXd cur = c;
                    std::vector<Index> ext = extents;
                    for (int k = d - 1; k >= 0; --k) {
                        const Index inner = ext[k];
                        const Index outer = cur.size() / inner;
                        Eigen::VectorXd next(outer);
                        for (Index o = 0; o < outer; ++o)
                            next[o] = basis[k].dot(cur.segment(o * inner, inner));
                        cur = std::move(next);
                        ext[k] = 1;
                    }
                    return cur[0];
                };
                const double omega = net.weight_omega(x);
                err = std::max(err, std::abs(interp_value(coeffs[0]) - omega));
                const Eigen::MatrixXd q = net.weight_Q(x);
                int w = 1;
                for (int k = 0; k < d; ++k)
                    for (int l = k; l < d; ++l) {
                        err = std::max(err, std::abs(interp_value(coeffs[w]) - q(k, l)));
                        ++w;
                    }
            } while (next_multi_index(mx, idx));
        }
        set.interp_error = scale > 0 ? err / scale : 0.0;
        if (set.interp_error <= 2.0 * opts.eps || attempt >= opts.max_refine) break;
        for (int k = 0; k < d; ++k) {
            const auto& s = tildeSpaces[k];
            tildeSpaces[k] = SplineSpace::uniform_open(2 * s.size(), s.degree());
        }
    }

    set.spaces = tildeSpaces;
    set.omega = factor_weight(coeffs[0], tildeSpaces, opts.eps);
    set.q.assign(d, std::vector<LowRankWeight>(d));
    int w = 1;
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) {
            set.q[k][l] = factor_weight(coeffs[w], tildeSpaces, opts.eps);
            if (l != k) set.q[l][k] = set.q[k][l];
            ++w;
        }
    return set;
}

// ---------------------------------------------------------------------------
// Built-in geometries

ControlNet fit_net(const std::vector<SplineSpace>& spaces,
                   const std::function<Eigen::VectorXd(const std::vector<double>&)>& map) {
    const int d = static_cast<int>(spaces.size());
    std::vector<Index> extents;
    std::vector<std::vector<double>> grids;
    std::vector<Eigen::FullPivLU<Eigen::MatrixXd>> lus;
    for (const auto& s : spaces) {
        extents.push_back(s.size());
        grids.push_back(s.greville());
        lus.push_back(collocation_lu(s));
    }
    const Index total = product(extents);
    std::vector<Eigen::VectorXd> coords(d, Eigen::VectorXd(total));
    std::vector<Index> idx(d, 0);
    Index lin = 0;
    do {
        std::vector<double> x(d);
        for (int k = 0; k < d; ++k) x[k] = grids[k][idx[k]];
        const Eigen::VectorXd g = map(x);
        for (int a = 0; a < d; ++a) coords[a][lin] = g[a];
        ++lin;
    } while (next_multi_index(extents, idx));
    for (int a = 0; a < d; ++a)
        for (int k = 0; k < d; ++k) mode_solve(coords[a], extents, k, lus[k]);
    return ControlNet(spaces, std::move(coords));
}

ControlNet make_identity_net(const std::vector<SplineSpace>& spaces) {
    const int d = static_cast<int>(spaces.size());
    std::vector<Index> extents;
    std::vector<std::vector<double>> grids;
    for (const auto& s : spaces) {
        extents.push_back(s.size());
        grids.push_back(s.greville());
    }
    const Index total = product(extents);
    std::vector<Eigen::VectorXd> coords(d, Eigen::VectorXd(total));
    std::vector<Index> idx(d, 0);
    Index lin = 0;
    do {
        for (int a = 0; a < d; ++a) coords[a][lin] = grids[a][idx[a]];
        ++lin;
    } while (next_multi_index(extents, idx));
    return ControlNet(spaces, std::move(coords));
}

ControlNet make_quarter_annulus(const std::vector<SplineSpace>& spaces, double r_inner,
                                double r_outer) {
    if (spaces.size() != 2) throw std::invalid_argument("quarter annulus is a 2D geometry");
    auto map = [=](const std::vector<double>& x) {
        const double rho = r_inner + (r_outer - r_inner) * x[0];
        const double phi = 0.5 * M_PI * x[1];
        Eigen::VectorXd g(2);
        g << rho * std::cos(phi), rho * std::sin(phi);
        return g;
    };
    return fit_net(spaces, map);
}

ControlNet make_quarter_pipe(const std::vector<SplineSpace>& spaces, double r_inner,
                             double r_outer, double length) {
    if (spaces.size() != 3) throw std::invalid_argument("quarter pipe is a 3D geometry");
    auto map = [=](const std::vector<double>& x) {
        const double rho = r_inner + (r_outer - r_inner) * x[0];
        const double phi = 0.5 * M_PI * x[1];
        Eigen::VectorXd g(3);
        g << rho * std::cos(phi), rho * std::sin(phi), length * x[2];
        return g;
    };
    return fit_net(spaces, map);
}

ControlNet make_twisted_bar(const std::vector<SplineSpace>& spaces, double width, double length,
                            double twist) {
    if (spaces.size() != 3) throw std::invalid_argument("twisted bar is a 3D geometry");
    auto map = [=](const std::vector<double>& x) {
        const double a = twist * x[2];
        const double u = width * (x[0] - 0.5), v = width * (x[1] - 0.5);
        Eigen::VectorXd g(3);
        g << u * std::cos(a) - v * std::sin(a), u * std::sin(a) + v * std::cos(a), length * x[2];
        return g;
    };
    return fit_net(spaces, map);
}

ControlNet make_warped_square(const std::vector<SplineSpace>& spaces, double amplitude) {
    if (spaces.size() != 2) throw std::invalid_argument("warped square is a 2D geometry");
    auto map = [=](const std::vector<double>& x) {
        Eigen::VectorXd g(2);
        g << x[0] + amplitude * std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]),
            x[1] + amplitude * std::sin(M_PI * x[1]) * std::sin(2.0 * M_PI * x[0]);
        return g;
    };
    return fit_net(spaces, map);
}

ControlNet make_builtin_geometry(const std::string& name, const std::vector<SplineSpace>& spaces) {
    if (name == "unit_square" || name == "unit_cube" || name == "identity")
        return make_identity_net(spaces);
    if (name == "quarter_annulus") return make_quarter_annulus(spaces);
    if (name == "quarter_pipe") return make_quarter_pipe(spaces);
    if (name == "twisted_bar") return make_twisted_bar(spaces);
    if (name == "warped_square") return make_warped_square(spaces);
    throw std::invalid_argument("unknown built-in geometry: " + name);
}

}  // namespace heatrec
