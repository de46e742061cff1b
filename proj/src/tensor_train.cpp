#include "heatrec/tensor_train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace heatrec {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstSliceMap = Eigen::Map<const MatRM, 0, Eigen::OuterStride<>>;
using SliceMap = Eigen::Map<MatRM, 0, Eigen::OuterStride<>>;

// Vector core slice T^(k)(j): r1 x r2 matrix inside the flat (r1, n, r2) core.
ConstSliceMap vslice(const Eigen::VectorXd& core, Index r1, Index n, Index r2, Index j) {
    return ConstSliceMap(core.data() + j * r2, r1, r2, Eigen::OuterStride<>(n * r2));
}

SliceMap vslice_mut(Eigen::VectorXd& core, Index r1, Index n, Index r2, Index j) {
    return SliceMap(core.data() + j * r2, r1, r2, Eigen::OuterStride<>(n * r2));
}

// Operator core slice A^(k)(i,j) inside the flat (r1, m, n, r2) core.
ConstSliceMap oslice(const Eigen::VectorXd& core, Index r1, Index m, Index n, Index r2, Index i,
                     Index j) {
    return ConstSliceMap(core.data() + (i * n + j) * r2, r1, r2,
                         Eigen::OuterStride<>(m * n * r2));
}

// Deterministic SVD sign convention: the largest-magnitude entry of every
// left singular vector is positive.
void fix_svd_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) {
            u.col(c) = -u.col(c);
            if (c < v.cols()) v.col(c) = -v.col(c);
        }
    }
}

Index truncation_rank(const Eigen::VectorXd& sigma, double delta, Index max_rank) {
    double tail = 0.0;
    Index r = sigma.size();
    while (r > 1) {
        const double next = tail + sigma[r - 1] * sigma[r - 1];
        if (std::sqrt(next) > delta) break;
        tail = next;
        --r;
    }
    if (max_rank >= 1 && r > max_rank) r = max_rank;
    return std::max<Index>(r, 1);
}

// Right-orthogonalize cores 1..d-1 in place; afterwards the norm of the
// tensor equals the Frobenius norm of core 0.
void right_orthogonalize(const std::vector<Index>& modes, std::vector<Index>& ranks,
                         std::vector<Eigen::VectorXd>& cores) {
    const int d = static_cast<int>(modes.size());
    for (int k = d - 1; k >= 1; --k) {
        const Index r1 = ranks[k], n = modes[k], r2 = ranks[k + 1];
        // LQ of the right unfolding (r1 x n*r2) via QR of its transpose.
        Eigen::Map<const MatRM> rightUnfold(cores[k].data(), r1, n * r2);
        Eigen::MatrixXd At = rightUnfold.transpose();  // (n*r2) x r1
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(At);
        const Index kr = std::min<Index>(At.rows(), At.cols());
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(At.rows(), kr);
        Eigen::MatrixXd rfac =
            qr.matrixQR().topLeftCorner(kr, At.cols()).triangularView<Eigen::Upper>();
        // new core k = Q^T (kr x n*r2); carry L = rfac^T into core k-1
        Eigen::VectorXd newCore(kr * n * r2);
        Eigen::Map<MatRM>(newCore.data(), kr, n * r2) = q.transpose();
        cores[k] = std::move(newCore);

        const Index r0 = ranks[k - 1], nprev = modes[k - 1];
        Eigen::VectorXd updated(r0 * nprev * kr);
        Eigen::Map<MatRM> prev(updated.data(), r0 * nprev, kr);
        Eigen::Map<const MatRM> old(cores[k - 1].data(), r0 * nprev, r1);
        prev = old * rfac.transpose();
        cores[k - 1] = std::move(updated);
        ranks[k] = kr;
    }
}

// Left-to-right truncation sweep; assumes right-orthogonal cores.
void truncate_sweep(const std::vector<Index>& modes, std::vector<Index>& ranks,
                    std::vector<Eigen::VectorXd>& cores, double site_delta, Index max_rank) {
    const int d = static_cast<int>(modes.size());
    for (int k = 0; k + 1 < d; ++k) {
        const Index r1 = ranks[k], n = modes[k], r2 = ranks[k + 1];
        Eigen::Map<const MatRM> leftUnfoldMap(cores[k].data(), r1 * n, r2);
        Eigen::MatrixXd a = leftUnfoldMap;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::MatrixXd u = svd.matrixU();
        Eigen::MatrixXd v = svd.matrixV();
        fix_svd_signs(u, v);
        const Index r = truncation_rank(svd.singularValues(), site_delta, max_rank);

        Eigen::VectorXd newCore(r1 * n * r);
        Eigen::Map<MatRM>(newCore.data(), r1 * n, r) = u.leftCols(r);
        cores[k] = std::move(newCore);

        Eigen::MatrixXd carry =
            svd.singularValues().head(r).asDiagonal() * v.leftCols(r).transpose();  // r x r2
        const Index n2 = modes[k + 1], r3 = ranks[k + 2];
        Eigen::VectorXd next(r * n2 * r3);
        Eigen::Map<MatRM> nextMap(next.data(), r, n2 * r3);
        Eigen::Map<const MatRM> oldNext(cores[k + 1].data(), r2, n2 * r3);
        nextMap = carry * oldNext;
        cores[k + 1] = std::move(next);
        ranks[k + 1] = r;
    }
}

void write_raw(std::ostream& out, const void* data, std::size_t bytes) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::istream& in, void* data, std::size_t bytes) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("truncated TT snapshot");
}

void write_index_list(std::ostream& out, const std::vector<Index>& v) {
    const std::int64_t n = static_cast<std::int64_t>(v.size());
    write_raw(out, &n, sizeof(n));
    for (Index x : v) {
        const std::int64_t y = x;
        write_raw(out, &y, sizeof(y));
    }
}

std::vector<Index> read_index_list(std::istream& in) {
    std::int64_t n = 0;
    read_raw(in, &n, sizeof(n));
    if (n < 0 || n > (1 << 20)) throw std::runtime_error("corrupt TT snapshot header");
    std::vector<Index> v(static_cast<std::size_t>(n));
    for (auto& x : v) {
        std::int64_t y = 0;
        read_raw(in, &y, sizeof(y));
        x = static_cast<Index>(y);
    }
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// TTVector

TTVector::TTVector(std::vector<Index> modes, std::vector<Index> ranks,
                   std::vector<Eigen::VectorXd> cores)
    : modes_(std::move(modes)), ranks_(std::move(ranks)), cores_(std::move(cores)) {
    validate();
}

void TTVector::validate() const {
    const std::size_t d = modes_.size();
    if (d == 0) throw std::invalid_argument("TT vector needs at least one mode");
    if (ranks_.size() != d + 1 || cores_.size() != d)
        throw std::invalid_argument("TT vector: inconsistent core/rank counts");
    if (ranks_.front() != 1 || ranks_.back() != 1)
        throw std::invalid_argument("TT vector: boundary ranks must be 1");
    for (std::size_t k = 0; k < d; ++k) {
        if (modes_[k] < 1 || ranks_[k] < 1) throw std::invalid_argument("TT vector: empty mode");
        if (cores_[k].size() != ranks_[k] * modes_[k] * ranks_[k + 1])
            throw std::invalid_argument("TT vector: core size does not match shape");
    }
}

TTVector TTVector::zeros(const std::vector<Index>& modes) {
    std::vector<Index> ranks(modes.size() + 1, 1);
    std::vector<Eigen::VectorXd> cores;
    cores.reserve(modes.size());
    for (Index n : modes) cores.push_back(Eigen::VectorXd::Zero(n));
    return TTVector(modes, std::move(ranks), std::move(cores));
}

TTVector TTVector::unit(const std::vector<Index>& modes, const std::vector<Index>& idx) {
    if (idx.size() != modes.size()) throw std::invalid_argument("unit: index order mismatch");
    std::vector<Eigen::VectorXd> factors;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(modes[k]);
        e[idx[k]] = 1.0;
        factors.push_back(std::move(e));
    }
    return rank_one(factors);
}

TTVector TTVector::rank_one(const std::vector<Eigen::VectorXd>& factors) {
    if (factors.empty()) throw std::invalid_argument("rank_one: no factors");
    std::vector<Index> modes;
    std::vector<Index> ranks(factors.size() + 1, 1);
    std::vector<Eigen::VectorXd> cores;
    for (const auto& f : factors) {
        modes.push_back(f.size());
        cores.push_back(f);
    }
    return TTVector(std::move(modes), std::move(ranks), std::move(cores));
}

TTVector TTVector::random(const std::vector<Index>& modes, const std::vector<Index>& ranks,
                          std::uint64_t seed) {
    const std::size_t d = modes.size();
    std::vector<Index> r(d + 1, 1);
    // clamp requested internal ranks to representable bounds
    Index left = 1;
    for (std::size_t k = 0; k + 1 < d; ++k) {
        left = std::min<Index>(left * modes[k], Index(1) << 30);
        Index want = (k + 1 < ranks.size()) ? ranks[k + 1] : 1;
        r[k + 1] = std::max<Index>(1, std::min(want, left));
    }
    Index right = 1;
    for (std::size_t k = d; k-- > 1;) {
        right = std::min<Index>(right * modes[k], Index(1) << 30);
        r[k] = std::min(r[k], right);
    }
    GaussianSampler rng(seed);
    std::vector<Eigen::VectorXd> cores;
    for (std::size_t k = 0; k < d; ++k) {
        Eigen::VectorXd c = rng.vector(r[k] * modes[k] * r[k + 1]);
        c /= std::sqrt(static_cast<double>(r[k] * r[k + 1]));
        cores.push_back(std::move(c));
    }
    return TTVector(modes, std::move(r), std::move(cores));
}

TTVector TTVector::from_dense(const Eigen::VectorXd& data, const std::vector<Index>& modes,
                              double eps, Index max_rank) {
    const std::size_t d = modes.size();
    if (product(modes) != data.size())
        throw std::invalid_argument("from_dense: mode sizes do not match data length");
    const double delta =
        d > 1 ? eps * data.norm() / std::sqrt(static_cast<double>(d - 1)) : 0.0;

    std::vector<Index> ranks(d + 1, 1);
    std::vector<Eigen::VectorXd> cores(d);
    Eigen::MatrixXd cur(1, data.size());
    for (Index i = 0; i < data.size(); ++i) cur(0, i) = data[i];

    Index rprev = 1;
    for (std::size_t k = 0; k + 1 < d; ++k) {
        const Index rows = rprev * modes[k];
        const Index cols = cur.size() / rows;
        Eigen::MatrixXd m(rows, cols);
        // cur holds a (rprev, modes[k]*cols) row-major block; reinterpret
        for (Index a = 0; a < rprev; ++a)
            for (Index i = 0; i < modes[k]; ++i)
                m.row(a * modes[k] + i) = cur.row(a).segment(i * cols, cols);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::MatrixXd u = svd.matrixU();
        Eigen::MatrixXd v = svd.matrixV();
        fix_svd_signs(u, v);
        const Index r = truncation_rank(svd.singularValues(), delta, max_rank);
        ranks[k + 1] = r;
        cores[k].resize(rprev * modes[k] * r);
        Eigen::Map<MatRM>(cores[k].data(), rows, r) = u.leftCols(r);
        cur = svd.singularValues().head(r).asDiagonal() * v.leftCols(r).transpose();
        rprev = r;
    }
    cores[d - 1].resize(rprev * modes[d - 1]);
    Eigen::Map<MatRM>(cores[d - 1].data(), rprev, modes[d - 1]) = cur;
    return TTVector(modes, std::move(ranks), std::move(cores));
}

Index TTVector::max_rank() const {
    Index r = 1;
    for (Index x : ranks_) r = std::max(r, x);
    return r;
}

Eigen::MatrixXd TTVector::core_slice(int k, Index j) const {
    return vslice(cores_[k], ranks_[k], modes_[k], ranks_[k + 1], j);
}

double TTVector::element(const std::vector<Index>& idx) const {
    if (idx.size() != modes_.size()) throw std::invalid_argument("element: index order mismatch");
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Ones(1);
    for (int k = 0; k < order(); ++k)
        acc = acc * vslice(cores_[k], ranks_[k], modes_[k], ranks_[k + 1], idx[k]);
    return acc[0];
}

Eigen::VectorXd TTVector::to_dense(Index cap) const {
    if (total_size() > cap) {
        std::ostringstream msg;
        msg << "to_dense: tensor with " << total_size() << " entries exceeds cap " << cap;
        throw std::runtime_error(msg.str());
    }
    MatRM x = Eigen::Map<const MatRM>(cores_[0].data(), modes_[0], ranks_[1]);
    for (int k = 1; k < order(); ++k) {
        Eigen::Map<const MatRM> rightUnfold(cores_[k].data(), ranks_[k],
                                            modes_[k] * ranks_[k + 1]);
        MatRM y = x * rightUnfold;  // (N_part, n_k * r_{k+1})
        x = Eigen::Map<const MatRM>(y.data(), y.rows() * modes_[k], ranks_[k + 1]);
    }
    return Eigen::Map<const Eigen::VectorXd>(x.data(), x.rows());
}

double TTVector::norm() const {
    auto modes = modes_;
    auto ranks = ranks_;
    auto cores = cores_;
    right_orthogonalize(modes, ranks, cores);
    return Eigen::Map<const Eigen::VectorXd>(cores[0].data(), cores[0].size()).norm();
}

TTVector& TTVector::round(double eps, Index max_rank) {
    if (order() == 1) return *this;
    right_orthogonalize(modes_, ranks_, cores_);
    const double normx =
        Eigen::Map<const Eigen::VectorXd>(cores_[0].data(), cores_[0].size()).norm();
    if (normx == 0.0) {
        *this = zeros(modes_);
        return *this;
    }
    const double site_delta = eps * normx / std::sqrt(static_cast<double>(order() - 1));
    truncate_sweep(modes_, ranks_, cores_, site_delta, max_rank);
    return *this;
}

TTVector& TTVector::orthogonalize_right() {
    right_orthogonalize(modes_, ranks_, cores_);
    return *this;
}

void TTVector::set_core_pair(int k, Eigen::VectorXd left, Eigen::VectorXd right, Index mid_rank) {
    if (k < 0 || k + 1 >= order()) throw std::invalid_argument("set_core_pair: bad site");
    if (left.size() != ranks_[k] * modes_[k] * mid_rank ||
        right.size() != mid_rank * modes_[k + 1] * ranks_[k + 2])
        throw std::invalid_argument("set_core_pair: core sizes do not match ranks");
    cores_[k] = std::move(left);
    cores_[k + 1] = std::move(right);
    ranks_[k + 1] = mid_rank;
}

TTVector& TTVector::scale(double a) {
    cores_[0] *= a;
    return *this;
}

void TTVector::save(std::ostream& out) const {
    out.write("HRTT0001", 8);
    write_index_list(out, modes_);
    write_index_list(out, ranks_);
    for (const auto& c : cores_) write_raw(out, c.data(), sizeof(double) * c.size());
}

TTVector TTVector::load(std::istream& in) {
    char magic[8];
    read_raw(in, magic, 8);
    if (std::memcmp(magic, "HRTT0001", 8) != 0)
        throw std::runtime_error("not a TT vector snapshot");
    auto modes = read_index_list(in);
    auto ranks = read_index_list(in);
    if (ranks.size() != modes.size() + 1) throw std::runtime_error("corrupt TT snapshot");
    std::vector<Eigen::VectorXd> cores(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k) {
        cores[k].resize(ranks[k] * modes[k] * ranks[k + 1]);
        read_raw(in, cores[k].data(), sizeof(double) * cores[k].size());
    }
    return TTVector(std::move(modes), std::move(ranks), std::move(cores));
}

void TTVector::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save(out);
}

TTVector TTVector::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load(in);
}

// ---------------------------------------------------------------------------
// TTOperator

TTOperator::TTOperator(std::vector<Index> row_modes, std::vector<Index> col_modes,
                       std::vector<Index> ranks, std::vector<Eigen::VectorXd> cores)
    : row_modes_(std::move(row_modes)),
      col_modes_(std::move(col_modes)),
      ranks_(std::move(ranks)),
      cores_(std::move(cores)) {
    validate();
}

void TTOperator::validate() const {
    const std::size_t d = row_modes_.size();
    if (d == 0 || col_modes_.size() != d || ranks_.size() != d + 1 || cores_.size() != d)
        throw std::invalid_argument("TT operator: inconsistent shape metadata");
    if (ranks_.front() != 1 || ranks_.back() != 1)
        throw std::invalid_argument("TT operator: boundary ranks must be 1");
    for (std::size_t k = 0; k < d; ++k) {
        if (cores_[k].size() != ranks_[k] * row_modes_[k] * col_modes_[k] * ranks_[k + 1])
            throw std::invalid_argument("TT operator: core size does not match shape");
    }
}

TTOperator TTOperator::identity(const std::vector<Index>& modes) {
    std::vector<std::vector<Eigen::MatrixXd>> term(1);
    for (Index n : modes) term[0].push_back(Eigen::MatrixXd::Identity(n, n));
    return from_kron_sum(term);
}

TTOperator TTOperator::from_kron_sum(const std::vector<std::vector<Eigen::MatrixXd>>& terms) {
    if (terms.empty()) throw std::invalid_argument("from_kron_sum: no terms");
    const std::size_t d = terms[0].size();
    if (d == 0) throw std::invalid_argument("from_kron_sum: empty term");
    const Index nterms = static_cast<Index>(terms.size());
    std::vector<Index> rows(d), cols(d);
    for (std::size_t k = 0; k < d; ++k) {
        rows[k] = terms[0][k].rows();
        cols[k] = terms[0][k].cols();
    }
    for (const auto& t : terms) {
        if (t.size() != d) throw std::invalid_argument("from_kron_sum: ragged term list");
        for (std::size_t k = 0; k < d; ++k)
            if (t[k].rows() != rows[k] || t[k].cols() != cols[k])
                throw std::invalid_argument("from_kron_sum: inconsistent factor sizes");
    }

    std::vector<Index> ranks(d + 1, 1);
    for (std::size_t k = 1; k < d; ++k) ranks[k] = nterms;
    std::vector<Eigen::VectorXd> cores(d);
    for (std::size_t k = 0; k < d; ++k) {
        const Index r1 = ranks[k], r2 = ranks[k + 1];
        cores[k] = Eigen::VectorXd::Zero(r1 * rows[k] * cols[k] * r2);
        for (Index t = 0; t < nterms; ++t) {
            const Index a = (k == 0) ? 0 : t;
            const Index b = (k + 1 == d) ? 0 : t;
            const Eigen::MatrixXd& f = terms[t][k];
            for (Index i = 0; i < rows[k]; ++i)
                for (Index j = 0; j < cols[k]; ++j)
                    cores[k][((a * rows[k] + i) * cols[k] + j) * r2 + b] += f(i, j);
        }
    }
    return TTOperator(std::move(rows), std::move(cols), std::move(ranks), std::move(cores));
}

TTOperator TTOperator::diagonal(const TTVector& v) {
    const int d = v.order();
    std::vector<Index> rows = v.modes(), cols = v.modes(), ranks = v.ranks();
    std::vector<Eigen::VectorXd> cores(d);
    for (int k = 0; k < d; ++k) {
        const Index r1 = ranks[k], n = rows[k], r2 = ranks[k + 1];
        cores[k] = Eigen::VectorXd::Zero(r1 * n * n * r2);
        const auto& vc = v.core(k);
        for (Index a = 0; a < r1; ++a)
            for (Index i = 0; i < n; ++i)
                for (Index b = 0; b < r2; ++b)
                    cores[k][((a * n + i) * n + i) * r2 + b] = vc[(a * n + i) * r2 + b];
    }
    return TTOperator(std::move(rows), std::move(cols), std::move(ranks), std::move(cores));
}

Index TTOperator::max_rank() const {
    Index r = 1;
    for (Index x : ranks_) r = std::max(r, x);
    return r;
}

TTVector TTOperator::as_vector() const {
    std::vector<Index> modes(row_modes_.size());
    for (std::size_t k = 0; k < modes.size(); ++k) modes[k] = row_modes_[k] * col_modes_[k];
    return TTVector(modes, ranks_, cores_);
}

TTOperator TTOperator::from_vector(const TTVector& v, std::vector<Index> row_modes,
                                   std::vector<Index> col_modes) {
    std::vector<Eigen::VectorXd> cores;
    cores.reserve(v.order());
    for (int k = 0; k < v.order(); ++k) cores.push_back(v.core(k));
    return TTOperator(std::move(row_modes), std::move(col_modes), v.ranks(), std::move(cores));
}

TTOperator TTOperator::transpose() const {
    std::vector<Eigen::VectorXd> cores(cores_.size());
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        const Index r1 = ranks_[k], m = row_modes_[k], n = col_modes_[k], r2 = ranks_[k + 1];
        cores[k].resize(r1 * n * m * r2);
        for (Index a = 0; a < r1; ++a)
            for (Index i = 0; i < m; ++i)
                for (Index j = 0; j < n; ++j)
                    for (Index b = 0; b < r2; ++b)
                        cores[k][((a * n + j) * m + i) * r2 + b] =
                            cores_[k][((a * m + i) * n + j) * r2 + b];
    }
    return TTOperator(col_modes_, row_modes_, ranks_, std::move(cores));
}

TTOperator& TTOperator::round(double eps, Index max_rank) {
    TTVector v = as_vector();
    v.round(eps, max_rank);
    *this = from_vector(v, row_modes_, col_modes_);
    return *this;
}

Eigen::MatrixXd TTOperator::to_dense_matrix(Index cap) const {
    const Index m = product(row_modes_), n = product(col_modes_);
    if (m * n > cap) throw std::runtime_error("to_dense_matrix: size cap exceeded");
    const Eigen::VectorXd flat = as_vector().to_dense(cap);
    Eigen::MatrixXd out(m, n);
    const int d = order();
    std::vector<Index> extents(2 * d);
    for (int k = 0; k < d; ++k) {
        extents[2 * k] = row_modes_[k];
        extents[2 * k + 1] = col_modes_[k];
    }
    std::vector<Index> idx(2 * d, 0);
    Index flatIdx = 0;
    do {
        Index r = 0, c = 0;
        for (int k = 0; k < d; ++k) {
            r = r * row_modes_[k] + idx[2 * k];
            c = c * col_modes_[k] + idx[2 * k + 1];
        }
        out(r, c) = flat[flatIdx++];
    } while (next_multi_index(extents, idx));
    return out;
}

void TTOperator::save(std::ostream& out) const {
    out.write("HRTO0001", 8);
    write_index_list(out, row_modes_);
    write_index_list(out, col_modes_);
    write_index_list(out, ranks_);
    for (const auto& c : cores_) write_raw(out, c.data(), sizeof(double) * c.size());
}

TTOperator TTOperator::load(std::istream& in) {
    char magic[8];
    read_raw(in, magic, 8);
    if (std::memcmp(magic, "HRTO0001", 8) != 0)
        throw std::runtime_error("not a TT operator snapshot");
    auto rows = read_index_list(in);
    auto cols = read_index_list(in);
    auto ranks = read_index_list(in);
    std::vector<Eigen::VectorXd> cores(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        cores[k].resize(ranks[k] * rows[k] * cols[k] * ranks[k + 1]);
        read_raw(in, cores[k].data(), sizeof(double) * cores[k].size());
    }
    return TTOperator(std::move(rows), std::move(cols), std::move(ranks), std::move(cores));
}

// ---------------------------------------------------------------------------
// Free arithmetic

TTVector tt_axpby(double a, const TTVector& x, double b, const TTVector& y) {
    if (x.modes() != y.modes()) throw std::invalid_argument("tt_axpby: mode mismatch");
    const int d = x.order();
    if (d == 1) {
        std::vector<Eigen::VectorXd> core{a * x.core(0) + b * y.core(0)};
        return TTVector(x.modes(), {1, 1}, std::move(core));
    }
    std::vector<Index> ranks(d + 1, 1);
    for (int k = 1; k < d; ++k) ranks[k] = x.ranks()[k] + y.ranks()[k];
    std::vector<Eigen::VectorXd> cores(d);
    for (int k = 0; k < d; ++k) {
        const Index n = x.modes()[k];
        const Index rx1 = x.ranks()[k], rx2 = x.ranks()[k + 1];
        const Index ry1 = y.ranks()[k], ry2 = y.ranks()[k + 1];
        const Index r1 = ranks[k], r2 = ranks[k + 1];
        cores[k] = Eigen::VectorXd::Zero(r1 * n * r2);
        const double sx = (k == 0) ? a : 1.0;
        const double sy = (k == 0) ? b : 1.0;
        const Index rowOff = (k == 0) ? 0 : rx1;
        const Index colOff = (k + 1 == d) ? 0 : rx2;
        for (Index j = 0; j < n; ++j) {
            auto zj = vslice_mut(cores[k], r1, n, r2, j);
            zj.block(0, 0, rx1, rx2) = sx * vslice(x.core(k), rx1, n, rx2, j);
            zj.block(rowOff, colOff, ry1, ry2) += sy * vslice(y.core(k), ry1, n, ry2, j);
        }
    }
    return TTVector(x.modes(), std::move(ranks), std::move(cores));
}

double tt_dot(const TTVector& x, const TTVector& y) {
    if (x.modes() != y.modes()) throw std::invalid_argument("tt_dot: mode mismatch");
    Eigen::MatrixXd m = Eigen::MatrixXd::Ones(1, 1);
    for (int k = 0; k < x.order(); ++k) {
        const Index n = x.modes()[k];
        const Index rx1 = x.ranks()[k], rx2 = x.ranks()[k + 1];
        const Index ry1 = y.ranks()[k], ry2 = y.ranks()[k + 1];
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(rx2, ry2);
        for (Index j = 0; j < n; ++j) {
            Eigen::MatrixXd xs = vslice(x.core(k), rx1, n, rx2, j);
            Eigen::MatrixXd ys = vslice(y.core(k), ry1, n, ry2, j);
            next.noalias() += xs.transpose() * m * ys;
        }
        m = std::move(next);
    }
    return m(0, 0);
}

namespace {

TTVector apply_impl(const TTOperator& a, const TTVector& x, bool transposed) {
    const auto& amodes = transposed ? a.row_modes() : a.col_modes();
    const auto& outModes = transposed ? a.col_modes() : a.row_modes();
    if (amodes != x.modes()) throw std::invalid_argument("tt_apply: mode mismatch");
    const int d = x.order();
    std::vector<Index> ranks(d + 1, 1);
    for (int k = 1; k < d; ++k) ranks[k] = x.ranks()[k] * a.ranks()[k];
    std::vector<Eigen::VectorXd> cores(d);
    for (int k = 0; k < d; ++k) {
        const Index m = outModes[k], n = amodes[k];
        const Index rx1 = x.ranks()[k], rx2 = x.ranks()[k + 1];
        const Index ra1 = a.ranks()[k], ra2 = a.ranks()[k + 1];
        const Index r1 = rx1 * ra1, r2 = rx2 * ra2;
        cores[k] = Eigen::VectorXd::Zero(r1 * m * r2);
        const Index rowsA = a.row_modes()[k], colsA = a.col_modes()[k];
        for (Index i = 0; i < m; ++i) {
            auto zi = vslice_mut(cores[k], r1, m, r2, i);
            for (Index j = 0; j < n; ++j) {
                const Eigen::MatrixXd as =
                    transposed ? Eigen::MatrixXd(oslice(a.core(k), ra1, rowsA, colsA, ra2, j, i))
                               : Eigen::MatrixXd(oslice(a.core(k), ra1, rowsA, colsA, ra2, i, j));
                const Eigen::MatrixXd xs = vslice(x.core(k), rx1, n, rx2, j);
                for (Index p = 0; p < rx1; ++p)
                    for (Index q = 0; q < rx2; ++q)
                        zi.block(p * ra1, q * ra2, ra1, ra2) += xs(p, q) * as;
            }
        }
    }
    return TTVector(std::vector<Index>(outModes), std::move(ranks), std::move(cores));
}

}  // namespace

TTVector tt_apply(const TTOperator& a, const TTVector& x) { return apply_impl(a, x, false); }

TTVector tt_transpose_apply(const TTOperator& a, const TTVector& x) {
    return apply_impl(a, x, true);
}

TTOperator tt_op_axpby(double a, const TTOperator& x, double b, const TTOperator& y) {
    if (x.row_modes() != y.row_modes() || x.col_modes() != y.col_modes())
        throw std::invalid_argument("tt_op_axpby: mode mismatch");
    TTVector v = tt_axpby(a, x.as_vector(), b, y.as_vector());
    return TTOperator::from_vector(v, x.row_modes(), x.col_modes());
}

TTVector tt_hadamard(const TTVector& x, const TTVector& y) {
    if (x.modes() != y.modes()) throw std::invalid_argument("tt_hadamard: mode mismatch");
    const int d = x.order();
    std::vector<Index> ranks(d + 1, 1);
    for (int k = 1; k < d; ++k) ranks[k] = x.ranks()[k] * y.ranks()[k];
    std::vector<Eigen::VectorXd> cores(d);
    for (int k = 0; k < d; ++k) {
        const Index n = x.modes()[k];
        const Index rx1 = x.ranks()[k], rx2 = x.ranks()[k + 1];
        const Index ry1 = y.ranks()[k], ry2 = y.ranks()[k + 1];
        cores[k] = Eigen::VectorXd::Zero(rx1 * ry1 * n * rx2 * ry2);
        for (Index j = 0; j < n; ++j) {
            auto zj = vslice_mut(cores[k], rx1 * ry1, n, rx2 * ry2, j);
            const Eigen::MatrixXd xs = vslice(x.core(k), rx1, n, rx2, j);
            const Eigen::MatrixXd ys = vslice(y.core(k), ry1, n, ry2, j);
            for (Index p = 0; p < rx1; ++p)
                for (Index q = 0; q < rx2; ++q)
                    zj.block(p * ry1, q * ry2, ry1, ry2) = xs(p, q) * ys;
        }
    }
    return TTVector(x.modes(), std::move(ranks), std::move(cores));
}

}  // namespace heatrec
