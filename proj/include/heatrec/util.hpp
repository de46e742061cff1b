#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace heatrec {

using Index = Eigen::Index;

/// Deterministic Gaussian sampler. std::normal_distribution is
/// implementation-defined, so we roll Box-Muller on top of mt19937_64 to get
/// bit-identical streams for a fixed seed on every platform.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform_(engine_);
        } while (u1 <= 0.0);
        const double u2 = uniform_(engine_);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    Eigen::VectorXd vector(Index n) {
        Eigen::VectorXd v(n);
        for (Index i = 0; i < n; ++i) v[i] = (*this)();
        return v;
    }

    /// Rademacher +-1 vector (for Hutchinson probes).
    Eigen::VectorXd rademacher(Index n) {
        Eigen::VectorXd v(n);
        for (Index i = 0; i < n; ++i) v[i] = (engine_() & 1u) ? 1.0 : -1.0;
        return v;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a 64-bit content hash, printed as 16 hex digits in run manifests.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

// Row-major multi-index helpers (last dimension fastest). All tensors in this
// code base use this layout, and Kronecker products A_1 (x) ... (x) A_D act
// with A_1 on the slowest index.
inline Index linear_index(const std::vector<Index>& extents, const std::vector<Index>& idx) {
    Index lin = 0;
    for (std::size_t d = 0; d < extents.size(); ++d) lin = lin * extents[d] + idx[d];
    return lin;
}

inline bool next_multi_index(const std::vector<Index>& extents, std::vector<Index>& idx) {
    for (std::size_t d = extents.size(); d-- > 0;) {
        if (++idx[d] < extents[d]) return true;
        idx[d] = 0;
    }
    return false;
}

inline Index product(const std::vector<Index>& extents) {
    Index p = 1;
    for (Index e : extents) p *= e;
    return p;
}

}  // namespace heatrec
