#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "heatrec/util.hpp"

namespace heatrec {

/// Default cap on densification (entries), guarding oracle bridges.
inline constexpr Index kDenseCap = Index(1) << 24;

/// Tensor-train vector: cores T^(k) of shape (r_{k-1}, n_k, r_k) stored flat
/// in row-major order, with r_0 = r_d = 1. Element (j_1,...,j_d) equals the
/// matrix product T^(1)(j_1) ... T^(d)(j_d).
class TTVector {
public:
    TTVector() = default;
    TTVector(std::vector<Index> modes, std::vector<Index> ranks, std::vector<Eigen::VectorXd> cores);

    static TTVector zeros(const std::vector<Index>& modes);
    static TTVector unit(const std::vector<Index>& modes, const std::vector<Index>& idx);
    /// Rank-1 tensor from per-mode vectors (outer product).
    static TTVector rank_one(const std::vector<Eigen::VectorXd>& factors);
    static TTVector random(const std::vector<Index>& modes, const std::vector<Index>& ranks,
                           std::uint64_t seed);
    /// TT-SVD of a dense row-major tensor with relative tolerance eps.
    static TTVector from_dense(const Eigen::VectorXd& data, const std::vector<Index>& modes,
                               double eps, Index max_rank = -1);

    int order() const { return static_cast<int>(modes_.size()); }
    const std::vector<Index>& modes() const { return modes_; }
    const std::vector<Index>& ranks() const { return ranks_; }
    Index max_rank() const;
    Index total_size() const { return product(modes_); }

    const Eigen::VectorXd& core(int k) const { return cores_[k]; }
    Eigen::VectorXd& core(int k) { return cores_[k]; }
    /// Core slice T^(k)(j) as an r_{k-1} x r_k matrix.
    Eigen::MatrixXd core_slice(int k, Index j) const;

    double element(const std::vector<Index>& idx) const;
    Eigen::VectorXd to_dense(Index cap = kDenseCap) const;

    double norm() const;

    /// SVD-based recompression: ||result - x|| <= eps ||x||, per-site budget
    /// eps/sqrt(d-1); ranks additionally capped at max_rank when >= 0.
    TTVector& round(double eps, Index max_rank = -1);

    /// Right-orthogonalizes cores 1..d-1 in place (value unchanged).
    TTVector& orthogonalize_right();

    /// Replaces cores k and k+1 together with the rank between them.
    void set_core_pair(int k, Eigen::VectorXd left, Eigen::VectorXd right, Index mid_rank);

    TTVector& scale(double a);

    void save(std::ostream& out) const;
    static TTVector load(std::istream& in);
    void save_file(const std::string& path) const;
    static TTVector load_file(const std::string& path);

private:
    void validate() const;

    std::vector<Index> modes_;
    std::vector<Index> ranks_;  // r_0..r_d
    std::vector<Eigen::VectorXd> cores_;
};

/// Tensor-train operator: cores of shape (r_{k-1}, m_k, n_k, r_k), mapping a
/// TT vector with modes (n_k) to one with modes (m_k).
class TTOperator {
public:
    TTOperator() = default;
    TTOperator(std::vector<Index> row_modes, std::vector<Index> col_modes,
               std::vector<Index> ranks, std::vector<Eigen::VectorXd> cores);

    static TTOperator identity(const std::vector<Index>& modes);
    /// Sum of Kronecker products: terms[t][d] is the d-th factor (m_d x n_d)
    /// of term t. TT ranks are at most the number of terms.
    static TTOperator from_kron_sum(const std::vector<std::vector<Eigen::MatrixXd>>& terms);
    /// Diagonal operator carrying the entries of a TT vector.
    static TTOperator diagonal(const TTVector& v);

    int order() const { return static_cast<int>(row_modes_.size()); }
    const std::vector<Index>& row_modes() const { return row_modes_; }
    const std::vector<Index>& col_modes() const { return col_modes_; }
    const std::vector<Index>& ranks() const { return ranks_; }
    Index max_rank() const;

    const Eigen::VectorXd& core(int k) const { return cores_[k]; }
    Eigen::VectorXd& core(int k) { return cores_[k]; }

    /// Flatten row/col mode pairs into a TT vector over modes m_k*n_k.
    TTVector as_vector() const;
    static TTOperator from_vector(const TTVector& v, std::vector<Index> row_modes,
                                  std::vector<Index> col_modes);

    TTOperator transpose() const;
    TTOperator& round(double eps, Index max_rank = -1);
    Eigen::MatrixXd to_dense_matrix(Index cap = kDenseCap) const;

    void save(std::ostream& out) const;
    static TTOperator load(std::istream& in);

private:
    void validate() const;

    std::vector<Index> row_modes_;
    std::vector<Index> col_modes_;
    std::vector<Index> ranks_;
    std::vector<Eigen::VectorXd> cores_;
};

/// a*x + b*y by core concatenation; ranks add, caller rounds.
TTVector tt_axpby(double a, const TTVector& x, double b, const TTVector& y);
double tt_dot(const TTVector& x, const TTVector& y);
inline double tt_norm(const TTVector& x) { return x.norm(); }
/// A x by core-wise contraction; ranks multiply, caller rounds.
TTVector tt_apply(const TTOperator& a, const TTVector& x);
TTVector tt_transpose_apply(const TTOperator& a, const TTVector& x);
TTOperator tt_op_axpby(double a, const TTOperator& x, double b, const TTOperator& y);
/// Hadamard (elementwise) product; ranks multiply.
TTVector tt_hadamard(const TTVector& x, const TTVector& y);

}  // namespace heatrec
