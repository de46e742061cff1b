#include "heatrec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace heatrec {

void SolverReport::write_csv(std::ostream& out) const {
    out << "iteration,residual\n";
    for (std::size_t i = 0; i < residual_trace.size(); ++i)
        out << i + 1 << "," << residual_trace[i] << "\n";
}

// ---------------------------------------------------------------------------
// CGLS on the reduced least-squares problem with unit shift

std::pair<Eigen::VectorXd, SolverReport> cgls(const LinOp& apply_A, const LinOp& apply_At,
                                              const Eigen::VectorXd& theta,
                                              const Eigen::VectorXd& z, int max_iter, double tol) {
    for (Index j = 0; j < theta.size(); ++j)
        if (!(theta[j] > 0.0)) {
            std::ostringstream msg;
            msg << "cgls: variance theta[" << j << "] = " << theta[j] << " is not positive";
            throw std::domain_error(msg.str());
        }
    const Eigen::VectorXd dhalf = theta.cwiseSqrt();
    auto apply_B = [&](const Eigen::VectorXd& w) { return apply_A(dhalf.cwiseProduct(w)); };
    auto apply_Bt = [&](const Eigen::VectorXd& r) {
        return dhalf.cwiseProduct(apply_At(r));
    };

    SolverReport rep;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd r = z;  // residual of B w = z at w = 0
    Eigen::VectorXd s = apply_Bt(r);  // normal-equation residual s = B^T r - w
    Eigen::VectorXd p = s;
    double gamma = s.squaredNorm();
    const double s0 = std::sqrt(gamma);
    if (s0 == 0.0) {
        rep.converged = true;
        return {Eigen::VectorXd::Zero(theta.size()), rep};
    }
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd q = apply_B(p);
        const double delta = q.squaredNorm() + p.squaredNorm();  // shift = 1
        if (delta <= 0.0) break;
        const double alpha = gamma / delta;
        w += alpha * p;
        r -= alpha * q;
        s = apply_Bt(r) - w;
        const double gammaNew = s.squaredNorm();
        rep.iterations = it + 1;
        rep.residual = std::sqrt(gammaNew) / s0;
        rep.residual_trace.push_back(rep.residual);
        if (rep.residual <= tol) {
            rep.converged = true;
            break;
        }
        p = s + (gammaNew / gamma) * p;
        gamma = gammaNew;
    }
    if (rep.residual <= tol) rep.converged = true;
    return {dhalf.cwiseProduct(w), rep};
}

// ---------------------------------------------------------------------------
// Dense/iterative kernels

Eigen::VectorXd conjugate_gradient(const LinOp& apply, const Eigen::VectorXd& rhs,
                                   const Eigen::VectorXd& x0, double tol, int max_iter,
                                   int* iters_out) {
    Eigen::VectorXd x = x0;
    Eigen::VectorXd r = rhs - apply(x);
    Eigen::VectorXd p = r;
    double rho = r.squaredNorm();
    const double target = tol * rhs.norm();
    int it = 0;
    for (; it < max_iter && std::sqrt(rho) > target; ++it) {
        const Eigen::VectorXd ap = apply(p);
        const double denom = p.dot(ap);
        if (denom <= 0.0) break;
        const double alpha = rho / denom;
        x += alpha * p;
        r -= alpha * ap;
        const double rhoNew = r.squaredNorm();
        p = r + (rhoNew / rho) * p;
        rho = rhoNew;
    }
    if (iters_out) *iters_out = it;
    return x;
}

Eigen::VectorXd minres(const LinOp& apply, const Eigen::VectorXd& rhs, const Eigen::VectorXd& x0,
                       double tol, int max_iter, int* iters_out) {
    Eigen::VectorXd x = x0;
    Eigen::VectorXd r = rhs - apply(x);
    const double beta1 = r.norm();
    const double target = tol * std::max(rhs.norm(), 1e-300);
    int it = 0;
    if (beta1 > target) {
        Eigen::VectorXd vOld = Eigen::VectorXd::Zero(x.size());
        Eigen::VectorXd v = r / beta1;
        Eigen::VectorXd w = Eigen::VectorXd::Zero(x.size());
        Eigen::VectorXd wOld = Eigen::VectorXd::Zero(x.size());
        double beta = beta1, eta = beta1;
        double cOld = 1.0, c = 1.0, sOld = 0.0, s = 0.0;
        for (; it < max_iter; ++it) {
            Eigen::VectorXd av = apply(v);
            const double alpha = v.dot(av);
            av -= alpha * v + beta * vOld;
            const double betaNew = av.norm();

            const double rho1hat = c * alpha - cOld * s * beta;
            const double rho1 = std::hypot(rho1hat, betaNew);
            const double rho2 = s * alpha + cOld * c * beta;
            const double rho3 = sOld * beta;
            const double cNew = rho1hat / rho1;
            const double sNew = betaNew / rho1;

            Eigen::VectorXd wNew = (v - rho3 * wOld - rho2 * w) / rho1;
            x += cNew * eta * wNew;
            eta = -sNew * eta;
            if (std::abs(eta) <= target) {
                ++it;
                break;
            }
            if (betaNew == 0.0) {
                ++it;
                break;
            }
            vOld = v;
            v = av / betaNew;
            beta = betaNew;
            cOld = c;
            c = cNew;
            sOld = s;
            s = sNew;
            wOld = w;
            w = wNew;
        }
    }
    if (iters_out) *iters_out = it;
    return x;
}

// ---------------------------------------------------------------------------
// AMEn

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SpMat = Eigen::SparseMatrix<double>;

// One operator core unpacked into its nonzero rank-slice pairs
// A(alpha, :, :, beta); sparse storage when the slice is sparse enough.
struct CoreSlices {
    Index ra1 = 1, n = 0, ra2 = 1;
    struct Pair {
        Index alpha, beta;
        Eigen::MatrixXd dense;
        SpMat sparse;
        bool use_sparse = false;
    };
    std::vector<Pair> pairs;
};

CoreSlices unpack_core(const Eigen::VectorXd& core, Index ra1, Index m, Index n, Index ra2) {
    if (m != n) throw std::invalid_argument("amen_solve: operator must have square modes");
    CoreSlices cs;
    cs.ra1 = ra1;
    cs.n = n;
    cs.ra2 = ra2;
    for (Index a = 0; a < ra1; ++a)
        for (Index b = 0; b < ra2; ++b) {
            Eigen::MatrixXd s(m, n);
            Index nnz = 0;
            for (Index i = 0; i < m; ++i)
                for (Index j = 0; j < n; ++j) {
                    const double v = core[((a * m + i) * n + j) * ra2 + b];
                    s(i, j) = v;
                    if (v != 0.0) ++nnz;
                }
            if (nnz == 0) continue;
            CoreSlices::Pair p;
            p.alpha = a;
            p.beta = b;
            if (nnz * 4 < m * n && m > 16) {
                p.use_sparse = true;
                p.sparse = s.sparseView();
                p.sparse.makeCompressed();
            } else {
                p.dense = std::move(s);
            }
            cs.pairs.push_back(std::move(p));
        }
    return cs;
}

// env tensors: L(a, alpha, a') flattened as a (rx, ra*rx) row-major block
struct EnvA {
    Index rx = 1, ra = 1;
    Eigen::MatrixXd m;  // rx x (ra*rx); slice(alpha) = m.block(0, alpha*rx, rx, rx)
    Eigen::MatrixXd slice(Index alpha) const { return m.block(0, alpha * rx, rx, rx); }
    static EnvA ones() {
        EnvA e;
        e.m = Eigen::MatrixXd::Ones(1, 1);
        return e;
    }
};

struct EnvB {
    Eigen::MatrixXd m;  // rx x rb
    static EnvB ones() {
        EnvB e;
        e.m = Eigen::MatrixXd::Ones(1, 1);
        return e;
    }
};

Eigen::MatrixXd apply_slice(const CoreSlices::Pair& p, const Eigen::MatrixXd& x) {
    return p.use_sparse ? Eigen::MatrixXd(p.sparse * x) : Eigen::MatrixXd(p.dense * x);
}

Eigen::MatrixXd apply_slice_t(const CoreSlices::Pair& p, const Eigen::MatrixXd& x) {
    return p.use_sparse ? Eigen::MatrixXd(p.sparse.transpose() * x)
                        : Eigen::MatrixXd(p.dense.transpose() * x);
}

// X core slices as matrices
std::vector<Eigen::MatrixXd> x_slices(const Eigen::VectorXd& core, Index r1, Index n, Index r2) {
    std::vector<Eigen::MatrixXd> s(n);
    for (Index j = 0; j < n; ++j) {
        s[j].resize(r1, r2);
        for (Index a = 0; a < r1; ++a)
            for (Index b = 0; b < r2; ++b) s[j](a, b) = core[(a * n + j) * r2 + b];
    }
    return s;
}

// RA[k] from RA[k+1]: R'(a,alpha,a') = sum_{pairs,i,j} X_i(a,:) A_(ab)(i,j) R_b X_j(a',:)^T
EnvA contract_right_A(const CoreSlices& cs, const std::vector<Eigen::MatrixXd>& xs,
                      const EnvA& right) {
    const Index r1 = xs.empty() ? 1 : xs[0].rows();
    EnvA out;
    out.rx = r1;
    out.ra = cs.ra1;
    out.m = Eigen::MatrixXd::Zero(r1, cs.ra1 * r1);
    const Index n = cs.n;
    for (const auto& p : cs.pairs) {
        const Eigen::MatrixXd rb = right.slice(p.beta);  // rx2 x rx2
        // W(j) = X_j * rb^T ; then for each i: acc_i = sum_j A(i,j) W(j); out += X_i acc_i^T
        std::vector<Eigen::MatrixXd> w(n);
        for (Index j = 0; j < n; ++j) w[j] = xs[j] * rb.transpose();  // r1 x r2
        // stack w into (n, r1*r2) then multiply by slice
        Eigen::MatrixXd wmat(n, xs[0].rows() * xs[0].cols());
        for (Index j = 0; j < n; ++j)
            wmat.row(j) = Eigen::Map<const Eigen::RowVectorXd>(w[j].data(), w[j].size());
        const Eigen::MatrixXd amat = apply_slice(p, wmat);  // (n, r1*r2): rows i
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(r1, r1);
        Eigen::VectorXd arow;
        for (Index i = 0; i < n; ++i) {
            arow = amat.row(i);
            Eigen::Map<const Eigen::MatrixXd> ai(arow.data(), xs[0].rows(), xs[0].cols());
            acc.noalias() += xs[i] * ai.transpose();
        }
        out.m.block(0, p.alpha * r1, r1, r1) += acc;
    }
    return out;
}

EnvA contract_left_A(const CoreSlices& cs, const std::vector<Eigen::MatrixXd>& xs,
                     const EnvA& left) {
    const Index r2 = xs.empty() ? 1 : xs[0].cols();
    EnvA out;
    out.rx = r2;
    out.ra = cs.ra2;
    out.m = Eigen::MatrixXd::Zero(r2, cs.ra2 * r2);
    const Index n = cs.n;
    for (const auto& p : cs.pairs) {
        const Eigen::MatrixXd lb = left.slice(p.alpha);  // rx1 x rx1
        std::vector<Eigen::MatrixXd> w(n);
        for (Index j = 0; j < n; ++j) w[j] = lb * xs[j];  // rx1 x rx2 (left env times col core)
        Eigen::MatrixXd wmat(n, xs[0].rows() * xs[0].cols());
        for (Index j = 0; j < n; ++j)
            wmat.row(j) = Eigen::Map<const Eigen::RowVectorXd>(w[j].data(), w[j].size());
        const Eigen::MatrixXd amat = apply_slice(p, wmat);  // rows i: sum_j A(i,j) (lb x_j)
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(r2, r2);
        Eigen::VectorXd arow;
        for (Index i = 0; i < n; ++i) {
            arow = amat.row(i);
            Eigen::Map<const Eigen::MatrixXd> ai(arow.data(), xs[0].rows(), xs[0].cols());
            acc.noalias() += xs[i].transpose() * ai;
        }
        out.m.block(0, p.beta * r2, r2, r2) += acc;
    }
    return out;
}

EnvB contract_right_b(const Eigen::VectorXd& bcore, Index rb1, Index n, Index rb2,
                      const std::vector<Eigen::MatrixXd>& xs, const EnvB& right) {
    const Index r1 = xs.empty() ? 1 : xs[0].rows();
    EnvB out;
    out.m = Eigen::MatrixXd::Zero(r1, rb1);
    for (Index j = 0; j < n; ++j) {
        Eigen::MatrixXd bs(rb1, rb2);
        for (Index a = 0; a < rb1; ++a)
            for (Index b = 0; b < rb2; ++b) bs(a, b) = bcore[(a * n + j) * rb2 + b];
        out.m.noalias() += xs[j] * right.m * bs.transpose();
    }
    return out;
}

EnvB contract_left_b(const Eigen::VectorXd& bcore, Index rb1, Index n, Index rb2,
                     const std::vector<Eigen::MatrixXd>& xs, const EnvB& left) {
    const Index r2 = xs.empty() ? 1 : xs[0].cols();
    EnvB out;
    out.m = Eigen::MatrixXd::Zero(r2, rb2);
    for (Index j = 0; j < n; ++j) {
        Eigen::MatrixXd bs(rb1, rb2);
        for (Index a = 0; a < rb1; ++a)
            for (Index b = 0; b < rb2; ++b) bs(a, b) = bcore[(a * n + j) * rb2 + b];
        out.m.noalias() += xs[j].transpose() * left.m * bs;
    }
    return out;
}

// Local operator action: v and result laid out like a core (a, i, b) row-major.
Eigen::VectorXd local_apply(const EnvA& la, const CoreSlices& cs, const EnvA& ra,
                            const Eigen::VectorXd& v, Index r1, Index n, Index r2) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(r1 * n * r2);
    Eigen::Map<const MatRM> vm(v.data(), r1 * n, r2);
    for (const auto& p : cs.pairs) {
        const Eigen::MatrixXd laS = la.slice(p.alpha);
        const Eigen::MatrixXd raS = ra.slice(p.beta);
        // t1 = v x_3 RA^T : (r1*n, r2)
        Eigen::MatrixXd t1 = vm * raS.transpose();
        // t2 over mode 2: for each a: rows j -> rows i via slice
        Eigen::MatrixXd t2(r1 * n, r2);
        Eigen::MatrixXd block(n, r2);
        for (Index a = 0; a < r1; ++a) {
            block = t1.middleRows(a * n, n);
            t2.middleRows(a * n, n) = apply_slice(p, block);
        }
        // t3 over mode 1: (a,i,b): out(a,:,:) += sum_{a'} LA(a,a') t2(a',:,:)
        Eigen::Map<MatRM> om(out.data(), r1 * n, r2);
        for (Index a = 0; a < r1; ++a)
            for (Index ap = 0; ap < r1; ++ap) {
                const double w = laS(a, ap);
                if (w != 0.0) om.middleRows(a * n, n) += w * t2.middleRows(ap * n, n);
            }
    }
    return out;
}

Eigen::MatrixXd local_dense(const EnvA& la, const CoreSlices& cs, const EnvA& ra, Index r1,
                            Index n, Index r2) {
    const Index sz = r1 * n * r2;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(sz, sz);
    for (const auto& p : cs.pairs) {
        const Eigen::MatrixXd laS = la.slice(p.alpha);
        const Eigen::MatrixXd raS = ra.slice(p.beta);
        const Eigen::MatrixXd aS = p.use_sparse ? Eigen::MatrixXd(p.sparse) : p.dense;
        // H[(a i b),(a' j b')] += LA(a,a') A(i,j) RA(b,b')
        for (Index a = 0; a < r1; ++a)
            for (Index ap = 0; ap < r1; ++ap) {
                const double w1 = laS(a, ap);
                if (w1 == 0.0) continue;
                for (Index i = 0; i < n; ++i)
                    for (Index j = 0; j < n; ++j) {
                        const double w2 = w1 * aS(i, j);
                        if (w2 == 0.0) continue;
                        h.block((a * n + i) * r2, (ap * n + j) * r2, r2, r2) += w2 * raS;
                    }
            }
    }
    return h;
}

Eigen::VectorXd local_rhs(const EnvB& lb, const Eigen::VectorXd& bcore, Index rb1, Index n,
                          Index rb2, const EnvB& rb, Index r1, Index r2) {
    Eigen::VectorXd g(r1 * n * r2);
    for (Index j = 0; j < n; ++j) {
        Eigen::MatrixXd bs(rb1, rb2);
        for (Index a = 0; a < rb1; ++a)
            for (Index b = 0; b < rb2; ++b) bs(a, b) = bcore[(a * n + j) * rb2 + b];
        const Eigen::MatrixXd gj = lb.m * bs * rb.m.transpose();  // r1 x r2
        for (Index a = 0; a < r1; ++a)
            for (Index b = 0; b < r2; ++b) g[(a * n + j) * r2 + b] = gj(a, b);
    }
    return g;
}

struct LocalSolveStats {
    bool regularized = false;
};

Eigen::VectorXd solve_local(const EnvA& la, const CoreSlices& cs, const EnvA& ra,
                            const Eigen::VectorXd& g, const Eigen::VectorXd& v0, Index r1,
                            Index n, Index r2, const AmenOptions& opts, LocalSolveStats& stats) {
    const Index sz = r1 * n * r2;
    if (sz <= opts.direct_size) {
        Eigen::MatrixXd h = local_dense(la, cs, ra, r1, n, r2);
        if (!opts.symmetric_indefinite) {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                Eigen::VectorXd u = ldlt.solve(g);
                if (u.allFinite()) return u;
            }
            // singular or indefinite local matrix: trace-shift fallback
            stats.regularized = true;
            const double shift = std::max(1e-12 * h.trace() / sz, 1e-300);
            h.diagonal().array() += shift;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(h);
        Eigen::VectorXd u = lu.solve(g);
        if (!u.allFinite()) {
            stats.regularized = true;
            h.diagonal().array() += std::max(1e-10 * h.cwiseAbs().maxCoeff(), 1e-300);
            u = Eigen::PartialPivLU<Eigen::MatrixXd>(h).solve(g);
        }
        return u;
    }
    auto apply = [&](const Eigen::VectorXd& v) { return local_apply(la, cs, ra, v, r1, n, r2); };
    const double tol = opts.tol * opts.cg_tol_factor;
    if (opts.symmetric_indefinite) return minres(apply, g, v0, tol, opts.local_max_iter);
    return conjugate_gradient(apply, g, v0, tol, opts.local_max_iter);
}

}  // namespace

std::pair<TTVector, SolverReport> amen_solve(const TTOperator& a, const TTVector& b,
                                             const TTVector& x0, const AmenOptions& opts) {
    if (a.row_modes() != a.col_modes())
        throw std::invalid_argument("amen_solve: operator must be square");
    if (a.col_modes() != x0.modes() || a.row_modes() != b.modes())
        throw std::invalid_argument("amen_solve: shape mismatch");
    const int d = x0.order();

    std::vector<CoreSlices> acs(d);
    for (int k = 0; k < d; ++k)
        acs[k] = unpack_core(a.core(k), a.ranks()[k], a.row_modes()[k], a.col_modes()[k],
                             a.ranks()[k + 1]);

    SolverReport rep;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        rep.converged = true;
        return {TTVector::zeros(x0.modes()), rep};
    }

    TTVector x = x0;
    x.round(0.0, opts.max_rank);  // orthogonalized copy, ranks sane

    // Decide whether exact TT residual norms are affordable.
    auto residual_cost = [&](const TTVector& xx) {
        double cost = 0.0;
        for (int k = 0; k < d; ++k) {
            const double rz = static_cast<double>(xx.ranks()[k] * a.ranks()[k] + b.ranks()[k]);
            const double rz2 =
                static_cast<double>(xx.ranks()[k + 1] * a.ranks()[k + 1] + b.ranks()[k + 1]);
            cost += static_cast<double>(xx.modes()[k]) * rz * rz * rz2;
        }
        return cost;
    };

    auto exact_residual = [&](const TTVector& xx) {
        TTVector ax = tt_apply(a, xx);
        TTVector r = tt_axpby(1.0, ax, -1.0, b);
        return r.norm() / bnorm;
    };

    double res = 1.0;
    const bool exactResAffordable =
        residual_cost(x) < static_cast<double>(opts.exact_residual_cost_cap);
    rep.residual_estimated = !exactResAffordable;

    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        // fresh right-orthogonal form and environments
        x.orthogonalize_right();
        std::vector<std::vector<Eigen::MatrixXd>> xs(d);
        for (int k = 0; k < d; ++k)
            xs[k] = x_slices(x.core(k), x.ranks()[k], x.modes()[k], x.ranks()[k + 1]);

        std::vector<EnvA> raEnv(d + 1);
        std::vector<EnvB> rbEnv(d + 1);
        raEnv[d] = EnvA::ones();
        rbEnv[d] = EnvB::ones();
        for (int k = d - 1; k >= 1; --k) {
            raEnv[k] = contract_right_A(acs[k], xs[k], raEnv[k + 1]);
            rbEnv[k] = contract_right_b(b.core(k), b.ranks()[k], b.modes()[k], b.ranks()[k + 1],
                                        xs[k], rbEnv[k + 1]);
        }
        EnvA laEnv = EnvA::ones();
        EnvB lbEnv = EnvB::ones();

        double localResMax = 0.0;
        for (int k = 0; k < d; ++k) {
            const Index n = x.modes()[k];
            const Index r1 = x.ranks()[k];
            const Index r2 = x.ranks()[k + 1];
            const Eigen::VectorXd g =
                local_rhs(lbEnv, b.core(k), b.ranks()[k], n, b.ranks()[k + 1], rbEnv[k + 1], r1,
                          r2);
            LocalSolveStats stats;
            Eigen::VectorXd u = solve_local(laEnv, acs[k], raEnv[k + 1], g, x.core(k), r1, n, r2,
                                            opts, stats);
            rep.regularized = rep.regularized || stats.regularized;

            const Eigen::VectorXd hu = local_apply(laEnv, acs[k], raEnv[k + 1], u, r1, n, r2);
            const double gn = g.norm();
            if (gn > 0.0) localResMax = std::max(localResMax, (g - hu).norm() / gn);
            if (opts.track_energy) rep.energy_trace.push_back(u.dot(hu) - 2.0 * u.dot(g));

            if (k == d - 1) {
                x.core(k) = u;
                xs[k] = x_slices(u, r1, n, r2);
                break;
            }

            // Truncate the solved core, enrich with the projected residual,
            // orthonormalize the frame and absorb the carry into core k+1.
            Eigen::MatrixXd umat(r1 * n, r2);
            umat = Eigen::Map<const MatRM>(u.data(), r1 * n, r2);
            Eigen::BDCSVD<Eigen::MatrixXd> svd(umat, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto& sigma = svd.singularValues();
            const double siteDelta =
                opts.tol * sigma.norm() / (2.0 * std::sqrt(static_cast<double>(d)));
            double tail = 0.0;
            Index rKeep = sigma.size();
            while (rKeep > 1) {
                const double nxt = tail + sigma[rKeep - 1] * sigma[rKeep - 1];
                if (std::sqrt(nxt) > siteDelta) break;
                tail = nxt;
                --rKeep;
            }
            rKeep = std::min(rKeep, opts.max_rank);
            Eigen::MatrixXd uLeft = svd.matrixU().leftCols(rKeep);
            Eigen::MatrixXd carry = sigma.head(rKeep).asDiagonal() *
                                    svd.matrixV().leftCols(rKeep).transpose();  // rKeep x r2

            // Projected residual (left frame closed, right side open):
            //   Z = [ P(A u), -P(b) ]  in the (r1*n) x (ra2*r2 + rb2) unfolding
            Index enrich = std::min<Index>(opts.enrich_rank, opts.max_rank - rKeep);
            Eigen::MatrixXd frame;
            if (enrich > 0) {
                const CoreSlices& cs = acs[k];
                const Index ra2 = cs.ra2;
                const Index rb2 = b.ranks()[k + 1];
                Eigen::MatrixXd z =
                    Eigen::MatrixXd::Zero(r1 * n, ra2 * r2 + rb2);
                Eigen::Map<const MatRM> um(u.data(), r1 * n, r2);
                for (const auto& p : cs.pairs) {
                    const Eigen::MatrixXd laS = laEnv.slice(p.alpha);
                    // t(a,j,:) = sum_{a'} LA(a,a') u(a',j,:)
                    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(r1 * n, r2);
                    for (Index aa = 0; aa < r1; ++aa)
                        for (Index ap = 0; ap < r1; ++ap) {
                            const double w = laS(aa, ap);
                            if (w != 0.0) t.middleRows(aa * n, n) += w * um.middleRows(ap * n, n);
                        }
                    for (Index aa = 0; aa < r1; ++aa)
                        z.block(aa * n, p.beta * r2, n, r2) +=
                            apply_slice(p, Eigen::MatrixXd(t.middleRows(aa * n, n)));
                }
                const auto& bc = b.core(k);
                const Index rb1 = b.ranks()[k];
                for (Index j = 0; j < n; ++j) {
                    Eigen::MatrixXd bs(rb1, rb2);
                    for (Index aa = 0; aa < rb1; ++aa)
                        for (Index bb = 0; bb < rb2; ++bb) bs(aa, bb) = bc[(aa * n + j) * rb2 + bb];
                    const Eigen::MatrixXd lbB = lbEnv.m * bs;  // r1 x rb2
                    for (Index aa = 0; aa < r1; ++aa)
                        z.block(aa * n + j, ra2 * r2, 1, rb2) -= lbB.row(aa);
                }
                Eigen::BDCSVD<Eigen::MatrixXd> zsvd(z, Eigen::ComputeThinU);
                enrich = std::min(enrich, static_cast<Index>(zsvd.singularValues().size()));
                while (enrich > 0 && zsvd.singularValues()[enrich - 1] <=
                                         1e-14 * zsvd.singularValues()[0])
                    --enrich;
                if (enrich > 0) {
                    frame.resize(r1 * n, rKeep + enrich);
                    frame.leftCols(rKeep) = uLeft;
                    frame.rightCols(enrich) = zsvd.matrixU().leftCols(enrich);
                }
            }
            if (frame.size() == 0) frame = uLeft;

            Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
            const Index rNew = std::min<Index>(frame.rows(), frame.cols());
            Eigen::MatrixXd qmat =
                qr.householderQ() * Eigen::MatrixXd::Identity(frame.rows(), rNew);
            Eigen::MatrixXd rmat = qr.matrixQR()
                                       .topLeftCorner(rNew, frame.cols())
                                       .triangularView<Eigen::Upper>();
            // carry for the represented vector: only the first rKeep columns of
            // the frame hold u; enrichment directions get zero coefficients.
            const Eigen::MatrixXd carryFull = rmat.leftCols(rKeep) * carry;  // rNew x r2

            Eigen::VectorXd newLeft(r1 * n * rNew);
            Eigen::Map<MatRM>(newLeft.data(), r1 * n, rNew) = qmat;

            // absorb the carry into core k+1
            const Index n2 = x.modes()[k + 1];
            const Index r3 = x.ranks()[k + 2];
            Eigen::VectorXd next(rNew * n2 * r3);
            Eigen::Map<MatRM> nm(next.data(), rNew, n2 * r3);
            Eigen::Map<const MatRM> om(x.core(k + 1).data(), r2, n2 * r3);
            nm = carryFull * om;
            x.set_core_pair(k, std::move(newLeft), std::move(next), rNew);

            xs[k] = x_slices(x.core(k), r1, n, rNew);
            laEnv = contract_left_A(acs[k], xs[k], laEnv);
            lbEnv = contract_left_b(b.core(k), b.ranks()[k], n, b.ranks()[k + 1], xs[k], lbEnv);
        }

        rep.iterations = sweep + 1;
        if (exactResAffordable) {
            res = exact_residual(x);
        } else {
            res = localResMax;
        }
        rep.residual = res;
        rep.residual_trace.push_back(res);
        if (res <= opts.tol) {
            rep.converged = true;
            break;
        }
    }
    return {x, rep};
}

}  // namespace heatrec
