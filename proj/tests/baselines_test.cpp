#include <gtest/gtest.h>

#include <complex>
#include <numbers>

#include "sparsecity/baselines.hpp"
#include "sparsecity/rip.hpp"
#include "test_support.hpp"

using namespace sparsecity;
using sparsecity::testing::random_vector;

namespace {

// Real DFT from the complex one: rows sqrt(2) Re / -sqrt(2) Im of e^{-2 pi i q j / N}.
Matrix real_dft_from_complex(Index n) {
    Matrix f(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index r = 0; r < n; ++r) {
            const Index q = r == 0 ? 0 : (r + 1) / 2;
            const std::complex<double> w =
                std::polar(1.0 / std::sqrt(double(n)), -2.0 * std::numbers::pi * double(q * j) / double(n));
            if (r == 0 || (n % 2 == 0 && r == n - 1))
                f(r, j) = r == 0 ? w.real() : std::pow(-1.0, double(j)) / std::sqrt(double(n));
            else
                f(r, j) = std::sqrt(2.0) * (r % 2 ? w.real() : -w.imag());
        }
    }
    return f;
}

std::vector<BaselineMatrix> small_zoo() {
    return {BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_fourier, 8, 24, 1),
            BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_fourier, 7, 15, 2),
            BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_hadamard, 8, 32, 3),
            BaselineMatrix::partial_toeplitz(6, 20, 4),
            BaselineMatrix::partial_toeplitz(6, 20, 5, true),
            BaselineMatrix::random_demodulator(12, 3, 6),
            BaselineMatrix::random_demodulator(16, 4, 7)};
}

}  // namespace

TEST(RealDft, OrthogonalAndMatchesComplexDft) {
    for (Index n : {1, 2, 5, 8, 12, 15}) {
        const Matrix f = real_dft_matrix(n);
        EXPECT_LT((f * f.transpose() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12) << n;
        EXPECT_LT((f - real_dft_from_complex(n)).cwiseAbs().maxCoeff(), 1e-12) << n;
    }
}

TEST(Subsampled, FullRowSetIsOrthogonal) {
    for (auto kind : {BaselineKind::subsampled_fourier, BaselineKind::subsampled_hadamard}) {
        const auto a = BaselineMatrix::subsampled_orthogonal(kind, 16, 16, 3);
        const Matrix d = a.to_dense();
        EXPECT_LT((d.transpose() * d - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT(delta_exact(a, 2).value, 1e-12);
    }
}

TEST(Subsampled, RowsReproducibleAndScaled) {
    const auto a = BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_hadamard, 16, 64, 9);
    const auto b = BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_hadamard, 16, 64, 9);
    const auto c = BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_hadamard, 16, 64, 10);
    EXPECT_EQ(a.selected_rows(), b.selected_rows());
    EXPECT_NE(a.selected_rows(), c.selected_rows());
    // every entry of a rescaled Hadamard row is +-sqrt(64/16)/8
    EXPECT_LT((a.to_dense().cwiseAbs().array() - 0.25).abs().maxCoeff(), 1e-15);
}

TEST(Subsampled, RejectsBadDims) {
    EXPECT_THROW(BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_fourier, 17, 16, 0), shape_error);
    EXPECT_THROW(BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_hadamard, 8, 24, 0), domain_error);
    EXPECT_THROW(BaselineMatrix::subsampled_orthogonal(BaselineKind::partial_toeplitz, 8, 16, 0), domain_error);
}

TEST(Subsampled, HadamardRipMostlyBelowOne) {
    int below = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = BaselineMatrix::subsampled_orthogonal(BaselineKind::subsampled_hadamard, 16, 64, seed);
        below += delta_exact(a, 2).value < 1.0;
    }
    EXPECT_GE(below, 9);
}

TEST(Toeplitz, ConstantDiagonals) {
    const auto a = BaselineMatrix::partial_toeplitz(8, 16, 2);
    const Matrix d = a.to_dense();
    EXPECT_EQ(d(0, 0), d(1, 1));
    EXPECT_EQ(d(1, 1), d(2, 2));
    EXPECT_EQ(d(1, 0), d(2, 1));
    EXPECT_EQ(d(2, 1), d(3, 2));
    for (Index i = 1; i < 8; ++i)
        for (Index j = 1; j < 16; ++j) EXPECT_EQ(d(i, j), d(i - 1, j - 1));
    EXPECT_EQ(a.generator().size(), 16 + 8 - 1);
    EXPECT_LT((d.cwiseAbs().array() - 1.0 / std::sqrt(8.0)).abs().maxCoeff(), 1e-15);
}

TEST(Toeplitz, CirculantWraps) {
    const auto a = BaselineMatrix::partial_toeplitz(8, 16, 2, true);
    const Matrix d = a.to_dense();
    EXPECT_EQ(a.generator().size(), 16);
    for (Index i = 1; i < 8; ++i) {
        EXPECT_EQ(d(i, 0), d(i - 1, 15));
        for (Index j = 1; j < 16; ++j) EXPECT_EQ(d(i, j), d(i - 1, j - 1));
    }
}

TEST(Toeplitz, MonteCarloDeltaFinite) {
    const auto a = BaselineMatrix::partial_toeplitz(16, 64, 1);
    const auto r = delta_monte_carlo(a, 2, 200, 4);
    EXPECT_TRUE(std::isfinite(r.value));
    EXPECT_GT(r.value, 0.0);
}

TEST(Demodulator, DisplayedSamplerMatrix) {
    Matrix want(3, 12);
    want << 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0,
            0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0,
            0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1;
    EXPECT_EQ(demodulator_g(12, 3), want);
}

TEST(Demodulator, SamplerStructure) {
    for (Index w = 1; w <= 64; ++w)
        for (Index r = 1; r <= w; ++r) {
            if (w % r) {
                EXPECT_THROW(demodulator_g(w, r), domain_error);
                continue;
            }
            const Matrix g = demodulator_g(w, r);
            EXPECT_EQ(g.sum(), double(w));
            EXPECT_EQ(g.colwise().sum(), Eigen::RowVectorXd::Ones(w));  // no overlaps, all covered
            for (Index i = 0; i < r; ++i) {
                EXPECT_EQ(g.row(i).sum(), double(w / r));
                EXPECT_EQ(g.block(i, i * (w / r), 1, w / r).sum(), double(w / r));  // consecutive
            }
        }
}

TEST(Demodulator, DenseIsGDF) {
    const auto a = BaselineMatrix::random_demodulator(12, 3, 5);
    EXPECT_EQ(a.rows(), 3);
    EXPECT_EQ(a.cols(), 12);
    const Matrix f = real_dft_from_complex(12);
    Matrix fp(12, 12);
    for (Index j = 0; j < 12; ++j) fp.col(j) = f.col(a.permutation()[static_cast<std::size_t>(j)]);
    const Matrix gdf = demodulator_g(12, 3) * a.demod_signs().asDiagonal() * fp;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Vector x = random_vector(12, seed);
        EXPECT_LT((a.apply(x) - gdf * x).cwiseAbs().maxCoeff(), 1e-12);
    }
    const auto stats = a.column_norm_stats();
    EXPECT_GT(stats.at("mean").get<double>(), 0.0);
    RecordProperty("demod_trace_AtA", std::to_string((gdf.transpose() * gdf).trace()));
}

TEST(Demodulator, PermutationPersisted) {
    const auto a = BaselineMatrix::random_demodulator(16, 4, 8);
    auto j = a.to_json();
    EXPECT_EQ(j.at("permutation").get<std::vector<Index>>(), a.permutation());
    EXPECT_EQ(BaselineMatrix::from_json(j).to_dense(), a.to_dense());
    std::swap(j["permutation"][0], j["permutation"][1]);
    EXPECT_THROW(BaselineMatrix::from_json(j), domain_error);
}

// Same suites as the Sparse City operator.
TEST(ContractParity, ApplyMatchesDense) {
    for (const auto& a : small_zoo()) {
        const Matrix d = a.to_dense();
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Vector x = random_vector(a.cols(), seed);
            const Vector y = random_vector(a.rows(), seed + 50);
            EXPECT_LT((a.apply(x) - d * x).cwiseAbs().maxCoeff(), 1e-12) << to_string(a.kind());
            EXPECT_LT((a.adjoint_apply(y) - d.transpose() * y).cwiseAbs().maxCoeff(), 1e-12) << to_string(a.kind());
            EXPECT_NEAR(y.dot(a.apply(x)), a.adjoint_apply(y).dot(x), 1e-12 * x.norm() * y.norm());
        }
        EXPECT_THROW(a.apply(Vector::Zero(a.cols() + 1)), shape_error);
        EXPECT_THROW(a.adjoint_apply(Vector::Zero(a.rows() + 1)), shape_error);
    }
}

TEST(ContractParity, JsonRoundTrip) {
    for (const auto& a : small_zoo()) {
        const auto b = BaselineMatrix::from_json(a.to_json());
        EXPECT_EQ(b.kind(), a.kind());
        EXPECT_EQ(b.to_dense(), a.to_dense()) << to_string(a.kind());
        EXPECT_EQ(b.to_json(), a.to_json());
    }
}

TEST(Kinds, NamesRoundTrip) {
    for (auto k : {BaselineKind::subsampled_fourier, BaselineKind::subsampled_hadamard,
                   BaselineKind::partial_toeplitz, BaselineKind::partial_circulant,
                   BaselineKind::random_demodulator})
        EXPECT_EQ(baseline_kind_from_string(to_string(k)), k);
    EXPECT_EQ(baseline_kind_from_string("toeplitz"), BaselineKind::partial_toeplitz);
    EXPECT_THROW(baseline_kind_from_string("gaussian"), domain_error);
}
