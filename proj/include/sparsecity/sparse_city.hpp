#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sparsecity/errors.hpp"
#include "sparsecity/rng.hpp"
#include "sparsecity/theta.hpp"
#include "sparsecity/walsh.hpp"

namespace sparsecity {

inline constexpr int kFormatVersion = 1;
inline constexpr Index kDenseEntryLimit = Index{1} << 22;

/// 1-based (block, row) pair naming the vector y_kw.
struct RankOneIndex {
    Index k;
    Index w;
};

template <typename Int>
struct IntegerProduct {
    std::vector<Int> z;
    double scale;  // A x == scale * z
};

/// The Sparse City ensemble A = [D_1 W | D_2 W | ... | D_b W], where W is the
/// first n columns of the m x m Hadamard-Walsh matrix and D_j = diag(theta_j)
/// holds i.i.d. draws from a bounded zero-mean law.
///
/// Only (m, n, b, seed, law) define the matrix; theta is regenerated from the
/// seed, never stored. Immutable once built, so apply and adjoint_apply are
/// safe to call concurrently.
class SparseCityMatrix {
public:
    static constexpr std::uint64_t kThetaStream = 0x7468657461ULL;  // "theta"

    SparseCityMatrix(Index m, Index n, Index b, std::uint64_t seed,
                     ThetaDistribution dist = theta_fourpoint())
        : walsh_(HadamardOrder::from_size(m), check_columns(n, m)),
          b_(check_blocks(b)),
          seed_(seed),
          dist_(std::move(dist)) {
        dist_.validate();
        const CounterRng rng(seed_, kThetaStream);
        const auto count = static_cast<std::size_t>(b_ * m);
        theta_index_.resize(count);
        theta_.resize(b_, m);
        for (Index j = 0; j < b_; ++j) {
            for (Index w = 0; w < m; ++w) {
                const auto c = static_cast<std::uint64_t>(j * m + w);
                const auto idx = static_cast<std::uint8_t>(dist_.pick(rng.uniform(c)));
                theta_index_[static_cast<std::size_t>(c)] = idx;
                theta_(j, w) = dist_.values[idx];
            }
        }
    }

    /// Matrix with a caller-supplied b x m theta table instead of random
    /// draws. Used for deterministic special cases such as theta == 1; such
    /// matrices have no seed and cannot be serialized.
    static SparseCityMatrix from_theta(Index m, Index n, const Matrix& theta) {
        SparseCityMatrix a(m, n, theta.rows(), 0);
        if (theta.cols() != m) detail::fail<shape_error>("from_theta: theta must be b x m");
        a.theta_ = theta;
        a.explicit_theta_ = true;
        a.dist_ = ThetaDistribution{};
        a.dist_.name = "explicit";
        a.dist_.bound = theta.cwiseAbs().maxCoeff();
        a.theta_index_.clear();
        return a;
    }

    Index rows() const noexcept { return walsh_.m(); }
    Index cols() const noexcept { return walsh_.n() * b_; }
    Index m() const noexcept { return walsh_.m(); }
    Index n() const noexcept { return walsh_.n(); }
    Index b() const noexcept { return b_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const ThetaDistribution& dist() const noexcept { return dist_; }
    const PartialWalsh& walsh() const noexcept { return walsh_; }

    /// b x m table; row j is the diagonal of D_{j+1}.
    const Matrix& theta() const noexcept { return theta_; }

    /// Proved bounds assume m <= nb; larger m is allowed but reported.
    bool in_theorem_regime() const noexcept { return m() <= cols(); }

    Vector apply(const Vector& x) const {
        detail::check_length(x.size(), cols(), "SparseCityMatrix::apply");
        const Index m = rows();
        const Index n = walsh_.n();
        Vector out = Vector::Zero(m);
        Vector work(m);
        for (Index j = 0; j < b_; ++j) {
            work.setZero();
            work.head(n) = x.segment(j * n, n);
            fwht_inplace({work.data(), static_cast<std::size_t>(m)});
            out.array() += theta_.row(j).transpose().array() * work.array();
        }
        return out;
    }

    Vector adjoint_apply(const Vector& y) const {
        detail::check_length(y.size(), rows(), "SparseCityMatrix::adjoint_apply");
        const Index m = rows();
        const Index n = walsh_.n();
        Vector out(cols());
        Vector work(m);
        for (Index j = 0; j < b_; ++j) {
            work = theta_.row(j).transpose().cwiseProduct(y);
            fwht_adjoint_inplace({work.data(), static_cast<std::size_t>(m)});
            out.segment(j * n, n) = work.head(n);
        }
        return out;
    }

    /// Column c in O(m): theta_j times column (c mod n) of H.
    Vector column(Index c) const {
        if (c < 0 || c >= cols()) detail::fail<index_error>("column: index out of range");
        const Index n = walsh_.n();
        const Index j = c / n;
        const auto h_col = static_cast<std::uint64_t>(c % n);
        const double amp = 1.0 / std::sqrt(static_cast<double>(rows()));
        Vector out(rows());
        for (Index w = 0; w < rows(); ++w)
            out(w) = theta_(j, w) * amp * hadamard_sign(static_cast<std::uint64_t>(w), h_col);
        return out;
    }

    /// A x in integer arithmetic: the +-1 Hadamard butterfly and the integer
    /// multipliers of theta. Every irrational factor is folded into
    /// the returned scale, 1/sqrt(m) times the law's integer scale.
    ///
    /// For m = 1024 the scale is 1/32 (unnormalized law) or 1/(32 sqrt 5)
    /// (normalized law).
    template <typename Int = std::int64_t>
    IntegerProduct<Int> integer_apply(std::span<const Int> x) const {
        static_assert(std::is_integral_v<Int> && std::is_signed_v<Int>);
        if (!dist_.has_integer_form())
            detail::fail<domain_error>("integer_apply: law '" + dist_.name +
                                       "' has no integer form");
        detail::check_length(static_cast<Index>(x.size()), cols(), "integer_apply");

        __int128 max_abs = 0;
        for (Int v : x) {
            const __int128 a = v < 0 ? -static_cast<__int128>(v) : static_cast<__int128>(v);
            max_abs = std::max(max_abs, a);
        }
        int max_mult = 0;
        for (int v : dist_.integer_values) max_mult = std::max(max_mult, std::abs(v));
        const __int128 worst = static_cast<__int128>(b_) * walsh_.n() * max_mult * max_abs;
        if (worst > static_cast<__int128>(std::numeric_limits<Int>::max()))
            detail::fail<overflow_error>("integer_apply: accumulation may overflow the integer type");

        const Index m = rows();
        const Index n = walsh_.n();
        std::vector<Int> z(static_cast<std::size_t>(m), Int{0});
        std::vector<Int> work(static_cast<std::size_t>(m));
        for (Index j = 0; j < b_; ++j) {
            std::fill(work.begin(), work.end(), Int{0});
            std::copy_n(x.begin() + j * n, n, work.begin());
            fwht_integer_inplace<Int>(work);
            for (Index w = 0; w < m; ++w) {
                const auto mult = static_cast<Int>(
                    dist_.integer_values[theta_index_[static_cast<std::size_t>(j * m + w)]]);
                z[static_cast<std::size_t>(w)] += mult * work[static_cast<std::size_t>(w)];
            }
        }
        return {std::move(z), dist_.integer_scale / std::sqrt(static_cast<double>(m))};
    }

    /// Dense m x nb matrix from the entry formula theta_jw * H(w, c); an
    /// independent route from apply().
    Matrix to_dense(Index limit = kDenseEntryLimit) const {
        if (rows() * cols() > limit)
            detail::fail<size_error>("to_dense: " + std::to_string(rows()) + " x " +
                                     std::to_string(cols()) + " exceeds dense limit");
        const Index m = rows();
        const Index n = walsh_.n();
        const double amp = 1.0 / std::sqrt(static_cast<double>(m));
        Matrix a(m, cols());
        for (Index j = 0; j < b_; ++j)
            for (Index c = 0; c < n; ++c)
                for (Index w = 0; w < m; ++w)
                    a(w, j * n + c) = theta_(j, w) * amp *
                                      hadamard_sign(static_cast<std::uint64_t>(w),
                                                    static_cast<std::uint64_t>(c));
        return a;
    }

    /// Vector in R^{nb}: row w of W_n^m placed in block k, zero elsewhere.
    Vector y_kw(RankOneIndex idx) const {
        if (idx.k < 1 || idx.k > b_ || idx.w < 1 || idx.w > rows())
            detail::fail<index_error>("y_kw: index out of range");
        const Index n = walsh_.n();
        Vector e = Vector::Zero(rows());
        e(idx.w - 1) = 1.0;
        // row w of W = column w of W^T
        Vector y = Vector::Zero(cols());
        y.segment((idx.k - 1) * n, n) = partial_adjoint_apply(walsh_, e);
        return y;
    }

    nlohmann::json to_json() const {
        if (explicit_theta_)
            detail::fail<domain_error>("to_json: matrix built from an explicit theta table");
        return {{"format_version", kFormatVersion},
                {"kind", "sparse_city"},
                {"m", rows()},
                {"n", walsh_.n()},
                {"b", b_},
                {"seed", seed_},
                {"dist_name", dist_.name},
                {"normalized", dist_.normalized}};
    }

    static SparseCityMatrix from_json(const nlohmann::json& j) {
        if (j.at("format_version").get<int>() != kFormatVersion)
            detail::fail<domain_error>("SparseCityMatrix: unsupported format_version");
        return SparseCityMatrix(j.at("m").get<Index>(), j.at("n").get<Index>(),
                                j.at("b").get<Index>(), j.at("seed").get<std::uint64_t>(),
                                theta_by_name(j.at("dist_name").get<std::string>(),
                                              j.at("normalized").get<bool>()));
    }

private:
    static Index check_columns(Index n, Index m) {
        if (n < 1 || n > m) detail::fail<domain_error>("SparseCityMatrix: need 1 <= n <= m");
        return n;
    }
    static Index check_blocks(Index b) {
        if (b < 1) detail::fail<domain_error>("SparseCityMatrix: need b >= 1");
        return b;
    }

    PartialWalsh walsh_;
    Index b_;
    std::uint64_t seed_;
    ThetaDistribution dist_;
    Matrix theta_;
    std::vector<std::uint8_t> theta_index_;
    bool explicit_theta_ = false;
};

/// Builds A^T A twice, from the dense matrix and from the expansion
///   sum_k sum_j sum_w theta_kw theta_jw  y_kw (x) y_jw,
/// and returns the largest entrywise difference.
inline double gram_decomposition_check(const SparseCityMatrix& a, Index limit = kDenseEntryLimit) {
    if (a.cols() * a.cols() > limit || a.rows() * a.cols() > limit)
        detail::fail<size_error>("gram_decomposition_check: exceeds dense limit");
    const Matrix dense = a.to_dense(limit);
    const Matrix gram = dense.transpose() * dense;

    const Index b = a.b();
    const Index m = a.m();
    std::vector<Vector> y(static_cast<std::size_t>(b * m));
    for (Index k = 1; k <= b; ++k)
        for (Index w = 1; w <= m; ++w)
            y[static_cast<std::size_t>((k - 1) * m + (w - 1))] = a.y_kw({k, w});

    Matrix expansion = Matrix::Zero(a.cols(), a.cols());
    for (Index k = 0; k < b; ++k)
        for (Index j = 0; j < b; ++j)
            for (Index w = 0; w < m; ++w)
                expansion.noalias() += a.theta()(k, w) * a.theta()(j, w) *
                                       y[static_cast<std::size_t>(k * m + w)] *
                                       y[static_cast<std::size_t>(j * m + w)].transpose();
    return (gram - expansion).cwiseAbs().maxCoeff();
}

}  // namespace sparsecity
