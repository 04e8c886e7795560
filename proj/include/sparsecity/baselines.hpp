#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparsecity/errors.hpp"
#include "sparsecity/rng.hpp"
#include "sparsecity/sparse_city.hpp"
#include "sparsecity/walsh.hpp"

namespace sparsecity {

enum class BaselineKind {
    subsampled_fourier,
    subsampled_hadamard,
    partial_toeplitz,
    partial_circulant,
    random_demodulator
};

inline std::string to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::subsampled_fourier: return "subsampled_fourier";
        case BaselineKind::subsampled_hadamard: return "subsampled_hadamard";
        case BaselineKind::partial_toeplitz: return "partial_toeplitz";
        case BaselineKind::partial_circulant: return "partial_circulant";
        case BaselineKind::random_demodulator: return "random_demodulator";
    }
    return "unknown";
}

inline BaselineKind baseline_kind_from_string(const std::string& s) {
    for (auto k : {BaselineKind::subsampled_fourier, BaselineKind::subsampled_hadamard,
                   BaselineKind::partial_toeplitz, BaselineKind::partial_circulant,
                   BaselineKind::random_demodulator})
        if (to_string(k) == s) return k;
    if (s == "fourier") return BaselineKind::subsampled_fourier;
    if (s == "hadamard") return BaselineKind::subsampled_hadamard;
    if (s == "toeplitz") return BaselineKind::partial_toeplitz;
    if (s == "circulant") return BaselineKind::partial_circulant;
    if (s == "demodulator") return BaselineKind::random_demodulator;
    detail::fail<domain_error>("unknown baseline kind '" + s + "'");
}

namespace detail {
inline constexpr std::uint64_t kRowStream = 0xb1;
inline constexpr std::uint64_t kGeneratorStream = 0xb2;
inline constexpr std::uint64_t kDemodSignStream = 0xb3;
inline constexpr std::uint64_t kDemodPermStream = 0xb4;
}  // namespace detail

/// Row r of the real orthogonal N-point DFT, entry j. Row 0 is the constant,
/// rows 2q-1 and 2q (q = 1..) are sqrt(2/N) cos and sin of 2 pi q j / N, and
/// for even N the last row is the alternating Nyquist row.
inline double real_dft_entry(Index n, Index r, Index j) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(n));
    if (r == 0) return inv;
    if (n % 2 == 0 && r == n - 1) return (j % 2 ? -inv : inv);
    const Index q = (r + 1) / 2;
    // reduce q*j mod n first so the angle stays exact for large products
    const double angle = 2.0 * std::numbers::pi * static_cast<double>((q * j) % n) / static_cast<double>(n);
    return std::sqrt(2.0) * inv * (r % 2 ? std::cos(angle) : std::sin(angle));
}

inline Matrix real_dft_matrix(Index n) {
    Matrix f(n, n);
    for (Index r = 0; r < n; ++r)
        for (Index j = 0; j < n; ++j) f(r, j) = real_dft_entry(n, r, j);
    return f;
}

/// R x W sampler: row r sums W/R consecutive entries starting at column r W/R.
inline Matrix demodulator_g(Index w, Index r) {
    if (w < 1 || r < 1) detail::fail<shape_error>("demodulator_g: W and R must be positive");
    if (w % r != 0) detail::fail<domain_error>("demodulator_g: R must divide W");
    Matrix g = Matrix::Zero(r, w);
    const Index run = w / r;
    for (Index i = 0; i < r; ++i) g.block(i, i * run, 1, run).setOnes();
    return g;
}

/// Comparison ensembles behind the same apply/adjoint contract as
/// SparseCityMatrix. Applies are direct (no fast transform) except for the
/// Hadamard kind, which reuses the FWHT.
class BaselineMatrix {
public:
    static BaselineMatrix subsampled_orthogonal(BaselineKind kind, Index m, Index n, std::uint64_t seed) {
        if (kind != BaselineKind::subsampled_fourier && kind != BaselineKind::subsampled_hadamard)
            detail::fail<domain_error>("subsampled_orthogonal: kind must be fourier or hadamard");
        check_dims(m, n);
        BaselineMatrix a(kind, m, n, seed);
        if (kind == BaselineKind::subsampled_hadamard) HadamardOrder::from_size(n);
        for (auto r : random_subset(static_cast<std::size_t>(n), static_cast<std::size_t>(m),
                                    CounterRng(seed, detail::kRowStream)))
            a.rows_.push_back(static_cast<Index>(r));
        a.row_scale_ = std::sqrt(static_cast<double>(n) / static_cast<double>(m));
        if (kind == BaselineKind::subsampled_fourier) {
            a.dense_.resize(m, n);
            for (Index i = 0; i < m; ++i)
                for (Index j = 0; j < n; ++j) a.dense_(i, j) = a.row_scale_ * real_dft_entry(n, a.rows_[i], j);
        }
        return a;
    }

    static BaselineMatrix partial_toeplitz(Index m, Index n, std::uint64_t seed, bool circulant = false) {
        check_dims(m, n);
        BaselineMatrix a(circulant ? BaselineKind::partial_circulant : BaselineKind::partial_toeplitz, m, n, seed);
        const Index count = circulant ? n : n + m - 1;
        const CounterRng rng(seed, detail::kGeneratorStream);
        const double scale = 1.0 / std::sqrt(static_cast<double>(m));
        a.generator_.resize(count);
        for (Index i = 0; i < count; ++i) a.generator_(i) = scale * rng.sign(static_cast<std::uint64_t>(i));
        return a;
    }

    static BaselineMatrix random_demodulator(Index w, Index r, std::uint64_t seed) {
        demodulator_g(w, r);  // validates W, R
        BaselineMatrix a(BaselineKind::random_demodulator, r, w, seed);
        const CounterRng signs(seed, detail::kDemodSignStream);
        a.signs_.resize(w);
        for (Index i = 0; i < w; ++i) a.signs_(i) = signs.sign(static_cast<std::uint64_t>(i));
        for (auto p : random_permutation(static_cast<std::size_t>(w), CounterRng(seed, detail::kDemodPermStream)))
            a.permutation_.push_back(static_cast<Index>(p));
        // F with columns permuted: column j of F is column permutation_[j] of the DFT
        const Matrix f = real_dft_matrix(w);
        a.dense_.resize(w, w);
        for (Index j = 0; j < w; ++j) a.dense_.col(j) = f.col(a.permutation_[j]);
        return a;
    }

    BaselineKind kind() const noexcept { return kind_; }
    Index rows() const noexcept { return m_; }
    Index cols() const noexcept { return n_; }
    std::uint64_t seed() const noexcept { return seed_; }

    const std::vector<Index>& selected_rows() const noexcept { return rows_; }
    const Vector& generator() const noexcept { return generator_; }
    const Vector& demod_signs() const noexcept { return signs_; }
    const std::vector<Index>& permutation() const noexcept { return permutation_; }

    /// Entry (i, j) of the Toeplitz/circulant kinds: depends on i - j only.
    double toeplitz_entry(Index i, Index j) const {
        if (kind_ == BaselineKind::partial_circulant) return generator_(((i - j) % n_ + n_) % n_);
        return generator_(i - j + n_ - 1);
    }

    Vector apply(const Vector& x) const {
        detail::check_length(x.size(), n_, "BaselineMatrix::apply");
        switch (kind_) {
            case BaselineKind::subsampled_fourier: return dense_ * x;
            case BaselineKind::subsampled_hadamard: {
                const Vector t = fwht_apply(HadamardOrder::from_size(n_), x);
                Vector y(m_);
                for (Index i = 0; i < m_; ++i) y(i) = row_scale_ * t(rows_[i]);
                return y;
            }
            case BaselineKind::partial_toeplitz:
            case BaselineKind::partial_circulant: {
                Vector y = Vector::Zero(m_);
                for (Index i = 0; i < m_; ++i)
                    for (Index j = 0; j < n_; ++j) y(i) += toeplitz_entry(i, j) * x(j);
                return y;
            }
            case BaselineKind::random_demodulator: {
                const Vector t = signs_.cwiseProduct(dense_ * x);
                const Index run = n_ / m_;
                Vector y(m_);
                for (Index i = 0; i < m_; ++i) y(i) = t.segment(i * run, run).sum();
                return y;
            }
        }
        return {};
    }

    Vector adjoint_apply(const Vector& y) const {
        detail::check_length(y.size(), m_, "BaselineMatrix::adjoint_apply");
        switch (kind_) {
            case BaselineKind::subsampled_fourier: return dense_.transpose() * y;
            case BaselineKind::subsampled_hadamard: {
                Vector t = Vector::Zero(n_);
                for (Index i = 0; i < m_; ++i) t(rows_[i]) = row_scale_ * y(i);
                return fwht_adjoint_apply(HadamardOrder::from_size(n_), t);
            }
            case BaselineKind::partial_toeplitz:
            case BaselineKind::partial_circulant: {
                Vector x = Vector::Zero(n_);
                for (Index i = 0; i < m_; ++i)
                    for (Index j = 0; j < n_; ++j) x(j) += toeplitz_entry(i, j) * y(i);
                return x;
            }
            case BaselineKind::random_demodulator: {
                const Index run = n_ / m_;
                Vector t(n_);
                for (Index i = 0; i < m_; ++i) t.segment(i * run, run).setConstant(y(i));
                return dense_.transpose() * signs_.cwiseProduct(t);
            }
        }
        return {};
    }

    /// Dense matrix assembled from the defining factors, not from apply().
    Matrix to_dense(Index limit = kDenseEntryLimit) const {
        if (m_ * n_ > limit) detail::fail<size_error>("BaselineMatrix::to_dense: exceeds dense limit");
        switch (kind_) {
            case BaselineKind::subsampled_fourier: return dense_;
            case BaselineKind::subsampled_hadamard: {
                const Matrix h = hadamard_matrix(HadamardOrder::from_size(n_));
                Matrix a(m_, n_);
                for (Index i = 0; i < m_; ++i) a.row(i) = row_scale_ * h.row(rows_[i]);
                return a;
            }
            case BaselineKind::partial_toeplitz:
            case BaselineKind::partial_circulant: {
                Matrix a(m_, n_);
                for (Index i = 0; i < m_; ++i)
                    for (Index j = 0; j < n_; ++j) a(i, j) = toeplitz_entry(i, j);
                return a;
            }
            case BaselineKind::random_demodulator:
                return demodulator_g(n_, m_) * signs_.asDiagonal() * dense_;
        }
        return {};
    }

    /// min / mean / max column norm; reported for the unnormalized demodulator.
    nlohmann::json column_norm_stats() const {
        const Matrix a = to_dense();
        const Vector norms = a.colwise().norm().transpose();
        return {{"min", norms.minCoeff()}, {"mean", norms.mean()}, {"max", norms.maxCoeff()}};
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"format_version", kFormatVersion}, {"kind", to_string(kind_)}, {"seed", seed_}};
        if (kind_ == BaselineKind::random_demodulator) {
            j["W"] = n_;
            j["R"] = m_;
            j["permutation"] = permutation_;
        } else {
            j["m"] = m_;
            j["N"] = n_;
        }
        return j;
    }

    static BaselineMatrix from_json(const nlohmann::json& j) {
        if (j.at("format_version").get<int>() != kFormatVersion)
            detail::fail<domain_error>("BaselineMatrix: unsupported format_version");
        const auto kind = baseline_kind_from_string(j.at("kind").get<std::string>());
        const auto seed = j.at("seed").get<std::uint64_t>();
        switch (kind) {
            case BaselineKind::subsampled_fourier:
            case BaselineKind::subsampled_hadamard:
                return subsampled_orthogonal(kind, j.at("m").get<Index>(), j.at("N").get<Index>(), seed);
            case BaselineKind::partial_toeplitz:
            case BaselineKind::partial_circulant:
                return partial_toeplitz(j.at("m").get<Index>(), j.at("N").get<Index>(), seed,
                                        kind == BaselineKind::partial_circulant);
            case BaselineKind::random_demodulator: {
                auto a = random_demodulator(j.at("W").get<Index>(), j.at("R").get<Index>(), seed);
                if (j.contains("permutation") && j.at("permutation").get<std::vector<Index>>() != a.permutation_)
                    detail::fail<domain_error>("BaselineMatrix: stored permutation does not match seed");
                return a;
            }
        }
        detail::fail<domain_error>("BaselineMatrix: unknown kind");
    }

private:
    BaselineMatrix(BaselineKind kind, Index m, Index n, std::uint64_t seed)
        : kind_(kind), m_(m), n_(n), seed_(seed) {}

    static void check_dims(Index m, Index n) {
        if (m < 1 || n < 1) detail::fail<shape_error>("BaselineMatrix: dimensions must be positive");
        if (m > n) detail::fail<shape_error>("BaselineMatrix: m exceeds N");
    }

    BaselineKind kind_;
    Index m_, n_;
    std::uint64_t seed_;
    std::vector<Index> rows_;         // subsampled kinds
    double row_scale_ = 1.0;
    Vector generator_;                // toeplitz / circulant
    Vector signs_;                    // demodulator D
    std::vector<Index> permutation_;  // demodulator column order of F
    Matrix dense_;                    // fourier rows, or permuted F
};

}  // namespace sparsecity
