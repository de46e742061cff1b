#include "heatrec/kron.hpp"

#include <stdexcept>

namespace heatrec {

namespace {

// Multiply factor A (m x n) along mode d of the row-major tensor `data`.
Eigen::VectorXd mode_multiply(const Eigen::VectorXd& data, std::vector<Index>& extents, int d,
                              const Eigen::MatrixXd& a) {
    const Index n = extents[d];
    const Index m = a.rows();
    if (a.cols() != n) throw std::invalid_argument("mode_multiply: factor size mismatch");
    Index inner = 1;
    for (std::size_t k = d + 1; k < extents.size(); ++k) inner *= extents[k];
    Index outer = 1;
    for (int k = 0; k < d; ++k) outer *= extents[k];

    Eigen::VectorXd out(outer * m * inner);
    Eigen::MatrixXd fibers(n, inner), mult(m, inner);
    for (Index o = 0; o < outer; ++o) {
        const double* src = data.data() + o * n * inner;
        for (Index i = 0; i < n; ++i)
            for (Index t = 0; t < inner; ++t) fibers(i, t) = src[i * inner + t];
        mult.noalias() = a * fibers;
        double* dst = out.data() + o * m * inner;
        for (Index i = 0; i < m; ++i)
            for (Index t = 0; t < inner; ++t) dst[i * inner + t] = mult(i, t);
    }
    extents[d] = m;
    return out;
}

}  // namespace

Eigen::VectorXd kron_term_apply(const std::vector<Eigen::MatrixXd>& factors,
                                const Eigen::VectorXd& x, bool transposed) {
    std::vector<Index> extents;
    for (const auto& f : factors) extents.push_back(transposed ? f.rows() : f.cols());
    if (product(extents) != x.size())
        throw std::invalid_argument("kron_term_apply: vector length mismatch");
    Eigen::VectorXd cur = x;
    for (std::size_t d = 0; d < factors.size(); ++d)
        cur = mode_multiply(cur, extents, static_cast<int>(d),
                            transposed ? Eigen::MatrixXd(factors[d].transpose()) : factors[d]);
    return cur;
}

KroneckerSumOperator::KroneckerSumOperator(std::vector<std::vector<Eigen::MatrixXd>> terms,
                                           bool symmetric)
    : terms_(std::move(terms)), symmetric_(symmetric) {
    if (terms_.empty()) throw std::invalid_argument("Kronecker sum needs at least one term");
    const std::size_t d = terms_[0].size();
    for (const auto& t : terms_) {
        if (t.size() != d) throw std::invalid_argument("Kronecker sum: ragged term");
        for (std::size_t k = 0; k < d; ++k)
            if (t[k].rows() != terms_[0][k].rows() || t[k].cols() != terms_[0][k].cols())
                throw std::invalid_argument("Kronecker sum: inconsistent factor sizes");
    }
}

KroneckerSumOperator KroneckerSumOperator::identity(const std::vector<Index>& sizes) {
    std::vector<std::vector<Eigen::MatrixXd>> term(1);
    for (Index n : sizes) term[0].push_back(Eigen::MatrixXd::Identity(n, n));
    return KroneckerSumOperator(std::move(term), true);
}

std::vector<Index> KroneckerSumOperator::row_sizes() const {
    std::vector<Index> s;
    for (const auto& f : terms_[0]) s.push_back(f.rows());
    return s;
}

std::vector<Index> KroneckerSumOperator::col_sizes() const {
    std::vector<Index> s;
    for (const auto& f : terms_[0]) s.push_back(f.cols());
    return s;
}

Eigen::VectorXd KroneckerSumOperator::apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows());
    for (const auto& t : terms_) out += kron_term_apply(t, x, false);
    return out;
}

Eigen::VectorXd KroneckerSumOperator::apply_transpose(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(cols());
    for (const auto& t : terms_) out += kron_term_apply(t, x, true);
    return out;
}

KroneckerSumOperator KroneckerSumOperator::transpose() const {
    std::vector<std::vector<Eigen::MatrixXd>> terms;
    for (const auto& t : terms_) {
        std::vector<Eigen::MatrixXd> tt;
        for (const auto& f : t) tt.push_back(f.transpose());
        terms.push_back(std::move(tt));
    }
    return KroneckerSumOperator(std::move(terms), symmetric_);
}

KroneckerSumOperator KroneckerSumOperator::scaled(double a) const {
    auto terms = terms_;
    for (auto& t : terms) t[0] *= a;
    return KroneckerSumOperator(std::move(terms), symmetric_);
}

KroneckerSumOperator KroneckerSumOperator::operator+(const KroneckerSumOperator& other) const {
    if (row_sizes() != other.row_sizes() || col_sizes() != other.col_sizes())
        throw std::invalid_argument("Kronecker sum: mode size mismatch in +");
    auto terms = terms_;
    terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
    return KroneckerSumOperator(std::move(terms), symmetric_ && other.symmetric_);
}

KroneckerSumOperator KroneckerSumOperator::restrict_interior() const {
    std::vector<std::vector<Eigen::MatrixXd>> terms;
    for (const auto& t : terms_) {
        std::vector<Eigen::MatrixXd> tt;
        for (const auto& f : t) {
            if (f.rows() < 3 || f.cols() < 3)
                throw std::invalid_argument("restrict_interior: factor too small");
            tt.push_back(f.block(1, 1, f.rows() - 2, f.cols() - 2));
        }
        terms.push_back(std::move(tt));
    }
    return KroneckerSumOperator(std::move(terms), symmetric_);
}

Eigen::MatrixXd KroneckerSumOperator::dense(Index cap) const {
    const Index m = rows(), n = cols();
    if (m * n > cap) throw std::runtime_error("Kronecker sum densification exceeds size cap");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, n);
    for (const auto& t : terms_) {
        Eigen::MatrixXd acc = t[0];
        for (std::size_t k = 1; k < t.size(); ++k) {
            Eigen::MatrixXd next(acc.rows() * t[k].rows(), acc.cols() * t[k].cols());
            for (Index i = 0; i < acc.rows(); ++i)
                for (Index j = 0; j < acc.cols(); ++j)
                    next.block(i * t[k].rows(), j * t[k].cols(), t[k].rows(), t[k].cols()) =
                        acc(i, j) * t[k];
            acc = std::move(next);
        }
        out += acc;
    }
    return out;
}

}  // namespace heatrec
