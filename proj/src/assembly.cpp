#include "heatrec/assembly.hpp"

#include <stdexcept>

namespace heatrec {

int assembly_quad_order(int p, int p_tilde) { return p + p_tilde / 2 + 1; }

KroneckerSumOperator assemble_mass(const ControlNet& net, const LowRankWeight& omega,
                                   bool interior) {
    const int d = net.dim();
    std::vector<std::vector<Eigen::MatrixXd>> terms;
    for (int r = 0; r < omega.rank; ++r) {
        std::vector<Eigen::MatrixXd> factors;
        for (int k = 0; k < d; ++k) {
            const auto& space = net.spaces()[k];
            const int q = assembly_quad_order(space.degree(), omega.spaces[k].degree());
            factors.push_back(
                univariate_matrix(space, omega.factor_function(r, k), FactorMode::mass, q));
        }
        terms.push_back(std::move(factors));
    }
    KroneckerSumOperator op(std::move(terms), true);
    return interior ? op.restrict_interior() : op;
}

KroneckerSumOperator assemble_stiffness(const ControlNet& net, const WeightSet& weights,
                                        bool interior) {
    const int d = net.dim();
    std::vector<std::vector<Eigen::MatrixXd>> terms;
    for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
            const LowRankWeight& w = weights.q[k][l];
            for (int r = 0; r < w.rank; ++r) {
                std::vector<Eigen::MatrixXd> factors;
                for (int dd = 0; dd < d; ++dd) {
                    const auto& space = net.spaces()[dd];
                    FactorMode mode = FactorMode::mass;
                    const bool dFirst = (l == dd), dSecond = (k == dd);
                    if (dFirst && dSecond)
                        mode = FactorMode::stiff_11;
                    else if (dFirst)
                        mode = FactorMode::stiff_10;
                    else if (dSecond)
                        mode = FactorMode::stiff_01;
                    const int q = assembly_quad_order(space.degree(), w.spaces[dd].degree());
                    factors.push_back(univariate_matrix(space, w.factor_function(r, dd), mode, q));
                }
                terms.push_back(std::move(factors));
            }
        }
    }
    KroneckerSumOperator op(std::move(terms), true);
    return interior ? op.restrict_interior() : op;
}

Eigen::MatrixXd dense_oracle_assemble(const ControlNet& net, OperatorKind kind, bool interior,
                                      int p_tilde, Index cap) {
    const int d = net.dim();
    const auto counts = net.basis_counts();
    const Index total = product(counts);
    if (total * total > cap) throw std::runtime_error("dense oracle assembly exceeds size cap");

    std::vector<QuadratureRule> rules;
    for (int k = 0; k < d; ++k) {
        const int p = net.spaces()[k].degree();
        rules.push_back(QuadratureRule::per_span(net.spaces()[k],
                                                 assembly_quad_order(p, std::max(p_tilde, 2 * p))));
    }

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total, total);
    std::vector<Index> extents(d);
    for (int k = 0; k < d; ++k) extents[k] = static_cast<Index>(rules[k].points.size());

    std::vector<Index> first(d), degp1(d);
    std::vector<Eigen::VectorXd> vals(d), ders(d);
    std::vector<Index> gp(d, 0);
    do {
        std::vector<double> x(d);
        double qw = 1.0;
        for (int k = 0; k < d; ++k) {
            x[k] = rules[k].points[gp[k]];
            qw *= rules[k].weights[gp[k]];
            net.spaces()[k].eval_local_deriv(x[k], first[k], vals[k], ders[k]);
            degp1[k] = net.spaces()[k].degree() + 1;
        }

        const Index nloc = product(degp1);
        std::vector<Index> linIdx(nloc);
        Eigen::VectorXd bval(nloc);
        Eigen::MatrixXd bgrad(nloc, d);
        {
            std::vector<Index> loc(d, 0);
            Index t = 0;
            do {
                std::vector<Index> idx(d);
                double v = 1.0;
                for (int k = 0; k < d; ++k) {
                    idx[k] = first[k] + loc[k];
                    v *= vals[k][loc[k]];
                }
                bval[t] = v;
                for (int b = 0; b < d; ++b) {
                    double g = 1.0;
                    for (int k = 0; k < d; ++k) g *= (k == b) ? ders[k][loc[k]] : vals[k][loc[k]];
                    bgrad(t, b) = g;
                }
                linIdx[t] = linear_index(counts, idx);
                ++t;
            } while (next_multi_index(degp1, loc));
        }

        if (kind == OperatorKind::mass) {
            const double w = net.weight_omega(x) * qw;
            for (Index a = 0; a < nloc; ++a)
                for (Index b = 0; b < nloc; ++b) out(linIdx[a], linIdx[b]) += w * bval[a] * bval[b];
        } else {
            const Eigen::MatrixXd q = net.weight_Q(x) * qw;
            // K_ij = sum_{k,l} q_kl (d_l beta_i)(d_k beta_j)
            const Eigen::MatrixXd qg = bgrad * q;  // (nloc, d)
            for (Index a = 0; a < nloc; ++a)
                for (Index b = 0; b < nloc; ++b)
                    out(linIdx[a], linIdx[b]) += qg.row(a).dot(bgrad.row(b));
        }
    } while (next_multi_index(extents, gp));

    if (!interior) return out;

    std::vector<Index> keep;
    std::vector<Index> idx(d, 0);
    Index lin = 0;
    do {
        bool boundary = false;
        for (int k = 0; k < d; ++k)
            if (idx[k] == 0 || idx[k] == counts[k] - 1) boundary = true;
        if (!boundary) keep.push_back(lin);
        ++lin;
    } while (next_multi_index(counts, idx));
    Eigen::MatrixXd sub(keep.size(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t j = 0; j < keep.size(); ++j) sub(i, j) = out(keep[i], keep[j]);
    return sub;
}

}  // namespace heatrec
