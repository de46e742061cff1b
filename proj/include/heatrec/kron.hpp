#pragma once

#include <vector>

#include <Eigen/Core>

#include "heatrec/tensor_train.hpp"
#include "heatrec/util.hpp"

namespace heatrec {

/// Sum of Kronecker products of small dense factor matrices:
///   A = sum_t  A_t^(1) (x) ... (x) A_t^(D),
/// acting on row-major vectorized tensors (first factor on the slowest
/// index). Factors may be rectangular.
class KroneckerSumOperator {
public:
    KroneckerSumOperator() = default;
    explicit KroneckerSumOperator(std::vector<std::vector<Eigen::MatrixXd>> terms,
                                  bool symmetric = false);

    static KroneckerSumOperator identity(const std::vector<Index>& sizes);

    int dims() const { return terms_.empty() ? 0 : static_cast<int>(terms_[0].size()); }
    Index term_count() const { return static_cast<Index>(terms_.size()); }
    const std::vector<std::vector<Eigen::MatrixXd>>& terms() const { return terms_; }
    bool symmetric() const { return symmetric_; }
    void set_symmetric(bool s) { symmetric_ = s; }

    std::vector<Index> row_sizes() const;
    std::vector<Index> col_sizes() const;
    Index rows() const { return product(row_sizes()); }
    Index cols() const { return product(col_sizes()); }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& x) const;

    KroneckerSumOperator transpose() const;
    KroneckerSumOperator scaled(double a) const;
    /// Term-list concatenation (same mode sizes).
    KroneckerSumOperator operator+(const KroneckerSumOperator& other) const;
    /// Drops the first and last index of every dimension (homogeneous
    /// Dirichlet elimination for open knot vectors).
    KroneckerSumOperator restrict_interior() const;

    Eigen::MatrixXd dense(Index cap = kDenseCap) const;
    TTOperator to_tt() const { return TTOperator::from_kron_sum(terms_); }

private:
    std::vector<std::vector<Eigen::MatrixXd>> terms_;
    bool symmetric_ = false;
};

/// y = (A_1 (x) ... (x) A_D) x for one term, via successive mode products.
Eigen::VectorXd kron_term_apply(const std::vector<Eigen::MatrixXd>& factors,
                                const Eigen::VectorXd& x, bool transposed = false);

}  // namespace heatrec
