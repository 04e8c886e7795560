#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sparsecity/errors.hpp"

namespace sparsecity {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Side length m = 2^k of a Hadamard-Walsh matrix.
class HadamardOrder {
public:
    explicit HadamardOrder(int k) : k_(k) {
        if (k < 0 || k > 40) detail::fail<domain_error>("HadamardOrder: exponent out of range");
    }

    static HadamardOrder from_size(std::int64_t m) {
        if (m < 1 || !std::has_single_bit(static_cast<std::uint64_t>(m)))
            detail::fail<domain_error>("HadamardOrder: size " + std::to_string(m) +
                                       " is not a power of two");
        return HadamardOrder(std::countr_zero(static_cast<std::uint64_t>(m)));
    }

    int k() const noexcept { return k_; }
    Index m() const noexcept { return Index{1} << k_; }

    friend bool operator==(const HadamardOrder&, const HadamardOrder&) = default;

private:
    int k_;
};

/// The first n columns of the m x m Hadamard-Walsh matrix.
class PartialWalsh {
public:
    PartialWalsh(HadamardOrder order, Index n) : order_(order), n_(n) {
        if (n < 1 || n > order.m())
            detail::fail<domain_error>("PartialWalsh: need 1 <= n <= m");
    }

    const HadamardOrder& order() const noexcept { return order_; }
    Index m() const noexcept { return order_.m(); }
    Index n() const noexcept { return n_; }

private:
    HadamardOrder order_;
    Index n_;
};

inline constexpr Index kDenseHadamardLimit = Index{1} << 12;
inline constexpr double kZeroThreshold = 1e-10;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

// Sign convention used throughout:
//
//   H_0 = [1],  H_k = 2^{-1/2} [[H_{k-1}, -H_{k-1}], [H_{k-1}, H_{k-1}]]
//
// Note the -H block sits top-right, unlike the [[1,1],[1,-1]] form found in
// most FWHT references. H_k is orthogonal but not symmetric, and "the first n
// columns" depends on it. Entry (i, j) is 2^{-k/2} (-1)^{popcount(~i & j)}.

/// Sign of entry (i, j) of H_k: +1 or -1.
constexpr int hadamard_sign(std::uint64_t i, std::uint64_t j) noexcept {
    return (std::popcount(~i & j) & 1) ? -1 : 1;
}

inline Matrix hadamard_matrix(HadamardOrder order, Index limit = kDenseHadamardLimit) {
    const Index m = order.m();
    if (m > limit)
        detail::fail<size_error>("hadamard_matrix: m = " + std::to_string(m) +
                                 " exceeds dense limit " + std::to_string(limit));
    // Built from the recursion itself rather than the closed-form entry
    // formula, so it can serve as an oracle for the fast kernels.
    Matrix h(1, 1);
    h(0, 0) = 1.0;
    for (int level = 1; level <= order.k(); ++level) {
        const Index half = h.rows();
        Matrix next(2 * half, 2 * half);
        next.topLeftCorner(half, half) = h;
        next.topRightCorner(half, half) = -h;
        next.bottomLeftCorner(half, half) = h;
        next.bottomRightCorner(half, half) = h;
        h = next * kInvSqrt2;
    }
    return h;
}

namespace detail {

inline void check_length(Index got, Index want, const char* op) {
    if (got != want)
        fail<shape_error>(std::string(op) + ": length " + std::to_string(got) + ", expected " +
                          std::to_string(want));
}

}  // namespace detail

/// In-place H_k v. The 1/sqrt(2) is applied at every butterfly stage.
inline void fwht_inplace(std::span<double> v) {
    const std::size_t m = v.size();
    for (std::size_t h = 1; h < m; h <<= 1) {
        for (std::size_t i = 0; i < m; i += 2 * h) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = v[j];
                const double b = v[j + h];
                v[j] = (a - b) * kInvSqrt2;
                v[j + h] = (a + b) * kInvSqrt2;
            }
        }
    }
}

/// In-place H_k^T v.
inline void fwht_adjoint_inplace(std::span<double> v) {
    const std::size_t m = v.size();
    for (std::size_t h = 1; h < m; h <<= 1) {
        for (std::size_t i = 0; i < m; i += 2 * h) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = v[j];
                const double b = v[j + h];
                v[j] = (a + b) * kInvSqrt2;
                v[j + h] = (b - a) * kInvSqrt2;
            }
        }
    }
}

/// Unnormalized integer transform: entries of the implied matrix are +-1
/// (2^{k/2} H_k). Only additions and subtractions.
template <typename Int>
void fwht_integer_inplace(std::span<Int> v) {
    const std::size_t m = v.size();
    for (std::size_t h = 1; h < m; h <<= 1) {
        for (std::size_t i = 0; i < m; i += 2 * h) {
            for (std::size_t j = i; j < i + h; ++j) {
                const Int a = v[j];
                const Int b = v[j + h];
                v[j] = a - b;
                v[j + h] = a + b;
            }
        }
    }
}

inline Vector fwht_apply(HadamardOrder order, const Vector& v) {
    detail::check_length(v.size(), order.m(), "fwht_apply");
    Vector out = v;
    fwht_inplace({out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

inline Vector fwht_adjoint_apply(HadamardOrder order, const Vector& v) {
    detail::check_length(v.size(), order.m(), "fwht_adjoint_apply");
    Vector out = v;
    fwht_adjoint_inplace({out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

/// W_n^m x: zero-pad x to length m and transform.
inline Vector partial_apply(const PartialWalsh& pw, const Vector& x) {
    detail::check_length(x.size(), pw.n(), "partial_apply");
    Vector out = Vector::Zero(pw.m());
    out.head(pw.n()) = x;
    fwht_inplace({out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

/// (W_n^m)^T y: the first n entries of H^T y.
inline Vector partial_adjoint_apply(const PartialWalsh& pw, const Vector& y) {
    detail::check_length(y.size(), pw.m(), "partial_adjoint_apply");
    Vector full = y;
    fwht_adjoint_inplace({full.data(), static_cast<std::size_t>(full.size())});
    return full.head(pw.n());
}

// Rademacher and Walsh functions on [0, 1). sign(0) is taken as +1.

inline int rademacher(int n, double x) {
    if (n < 0) detail::fail<domain_error>("rademacher: negative index");
    if (!(x >= 0.0 && x < 1.0)) detail::fail<domain_error>("rademacher: x outside [0, 1)");
    // sin(2^{n+1} pi x) < 0 exactly when frac(2^n x) lies in (1/2, 1). Working
    // with the fractional part keeps the zeros of the sine exact.
    const double scaled = std::ldexp(x, n);
    const double frac = scaled - std::floor(scaled);
    return frac > 0.5 ? -1 : 1;
}

/// W_0 = 1; W_n = prod of r_j over the set bits j of n.
inline int walsh_function(std::uint64_t n, double x) {
    if (!(x >= 0.0 && x < 1.0)) detail::fail<domain_error>("walsh_function: x outside [0, 1)");
    int value = 1;
    for (int bit = 0; n >> bit; ++bit)
        if ((n >> bit) & 1U) value *= rademacher(bit, x);
    return value;
}

/// Column j of sqrt(m) H_k, sampled at row midpoints, equals
/// sign * W_index: index is the k-bit reversal of j and the sign is
/// (-1)^popcount(j). This is an observed property of the recursion above,
/// not a convention imposed on it.
struct WalshColumnMap {
    std::uint64_t walsh_index;
    int sign;
};

inline WalshColumnMap walsh_column_map(HadamardOrder order, std::uint64_t column) {
    std::uint64_t reversed = 0;
    for (int b = 0; b < order.k(); ++b)
        if ((column >> b) & 1U) reversed |= std::uint64_t{1} << (order.k() - 1 - b);
    return {reversed, (std::popcount(column) & 1) ? -1 : 1};
}

struct UncertaintyResult {
    Index s_time;
    Index s_freq;
    bool holds;
};

/// Counts nonzeros of y and of H^T y against threshold tau and checks
/// ||y||_0 + ||H^T y||_0 >= 2 sqrt(m).
inline UncertaintyResult uncertainty_check(HadamardOrder order, const Vector& y,
                                           double tau = kZeroThreshold) {
    detail::check_length(y.size(), order.m(), "uncertainty_check");
    if (y.cwiseAbs().maxCoeff() <= tau)
        detail::fail<domain_error>("uncertainty_check: zero vector");
    const Vector freq = fwht_adjoint_apply(order, y);
    const Index s_time = (y.array().abs() > tau).count();
    const Index s_freq = (freq.array().abs() > tau).count();
    const double bound = 2.0 * std::sqrt(static_cast<double>(order.m()));
    return {s_time, s_freq, static_cast<double>(s_time + s_freq) >= bound};
}

}  // namespace sparsecity
