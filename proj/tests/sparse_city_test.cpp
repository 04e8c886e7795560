#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "sparsecity/sparse_city.hpp"
#include "test_support.hpp"

using namespace sparsecity;
using sparsecity::testing::random_vector;
using sparsecity::testing::relative_error;

namespace {

SparseCityMatrix identity_like(Index m) {
    return SparseCityMatrix::from_theta(m, m, Matrix::Ones(1, m));
}

}  // namespace

TEST(Theta, FourPointMoments) {
    const auto raw = theta_fourpoint(false);
    EXPECT_NEAR(raw.mean(), 0.0, 1e-15);
    EXPECT_NEAR(raw.second_moment(), 5.0, 1e-15);
    EXPECT_EQ(raw.bound, 3.0);
    EXPECT_NO_THROW(raw.validate());

    const auto unit = theta_fourpoint(true);
    EXPECT_NEAR(unit.mean(), 0.0, 1e-15);
    EXPECT_NEAR(unit.second_moment(), 1.0, 1e-15);
    EXPECT_NEAR(unit.bound, 3.0 / std::sqrt(5.0), 1e-15);

    const auto rad = theta_rademacher();
    EXPECT_EQ(rad.second_moment(), 1.0);
    EXPECT_EQ(rad.bound, 1.0);
}

TEST(Theta, ValidationRejectsBadLaws) {
    ThetaDistribution d = theta_rademacher();
    d.probabilities = {0.6, 0.4};
    EXPECT_THROW(d.validate(), domain_error);

    d = theta_fourpoint(false);
    d.normalized = true;  // E[theta^2] = 5
    EXPECT_THROW(d.validate(), domain_error);

    EXPECT_THROW(theta_by_name("gaussian"), domain_error);
}

TEST(Construct, Dimensions) {
    const SparseCityMatrix a(4, 2, 3, 11);
    EXPECT_EQ(a.rows(), 4);
    EXPECT_EQ(a.cols(), 6);
    EXPECT_TRUE(a.in_theorem_regime());

    const SparseCityMatrix big(1024, 64, 320, 5);
    EXPECT_EQ(big.rows(), 1024);
    EXPECT_EQ(big.cols(), 20480);

    const SparseCityMatrix tall(64, 4, 2, 5);
    EXPECT_FALSE(tall.in_theorem_regime());
}

TEST(Construct, Errors) {
    EXPECT_THROW(SparseCityMatrix(12, 2, 2, 0), domain_error);
    EXPECT_THROW(SparseCityMatrix(8, 9, 2, 0), domain_error);
    EXPECT_THROW(SparseCityMatrix(8, 4, 0, 0), domain_error);
}

TEST(Construct, DeterministicAndSeedSensitive) {
    const SparseCityMatrix a(64, 16, 8, 42);
    const SparseCityMatrix b(64, 16, 8, 42);
    const SparseCityMatrix c(64, 16, 8, 43);
    EXPECT_EQ(a.theta(), b.theta());
    EXPECT_NE(a.theta(), c.theta());
}

TEST(Construct, ThetaDrawnFromLawWithRoughlyUniformFrequencies) {
    const SparseCityMatrix a(1024, 8, 64, 3);
    const auto& law = a.dist();
    std::vector<int> counts(law.values.size(), 0);
    for (Index j = 0; j < a.b(); ++j)
        for (Index w = 0; w < a.m(); ++w) {
            bool found = false;
            for (std::size_t i = 0; i < law.values.size(); ++i)
                if (a.theta()(j, w) == law.values[i]) {
                    ++counts[i];
                    found = true;
                }
            ASSERT_TRUE(found);
        }
    const double expected = a.b() * a.m() / 4.0;  // 16384
    for (int c : counts) EXPECT_NEAR(c, expected, 5.0 * std::sqrt(expected));
}

TEST(Apply, IdentityLikeMatrixIsTheTransform) {
    const auto a = identity_like(16);
    const Vector x = random_vector(16, 1);
    EXPECT_LT(relative_error(a.apply(x), fwht_apply(HadamardOrder(4), x)), 1e-15);
    EXPECT_LT(relative_error(a.adjoint_apply(x), fwht_adjoint_apply(HadamardOrder(4), x)), 1e-15);
}

TEST(Apply, UnitVectorsGiveDenseColumns) {
    const SparseCityMatrix a(8, 4, 2, 9);
    const Matrix dense = a.to_dense();
    for (Index c = 0; c < a.cols(); ++c) {
        Vector e = Vector::Zero(a.cols());
        e(c) = 1.0;
        EXPECT_LT((a.apply(e) - dense.col(c)).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Apply, MatchesDenseOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SparseCityMatrix a(8, 4, 2, seed);
        const Matrix dense = a.to_dense();
        const Vector x = random_vector(a.cols(), 100 + seed);
        const Vector y = random_vector(a.rows(), 200 + seed);
        EXPECT_LT(relative_error(a.apply(x), dense * x), 1e-10);
        EXPECT_LT(relative_error(a.adjoint_apply(y), dense.transpose() * y), 1e-10);
    }
}

TEST(Apply, AdjointIdentity) {
    const SparseCityMatrix a(64, 16, 6, 1234);
    for (int t = 0; t < 100; ++t) {
        const Vector x = random_vector(a.cols(), 2 * t);
        const Vector y = random_vector(a.rows(), 2 * t + 1);
        const double lhs = a.apply(x).dot(y);
        const double rhs = x.dot(a.adjoint_apply(y));
        EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
    }
    EXPECT_EQ(a.adjoint_apply(Vector::Zero(64)), Vector::Zero(a.cols()));
}

TEST(Apply, ShapeErrors) {
    const SparseCityMatrix a(8, 4, 2, 1);
    EXPECT_THROW(a.apply(Vector::Zero(7)), shape_error);
    EXPECT_THROW(a.adjoint_apply(Vector::Zero(7)), shape_error);
}

TEST(IntegerApply, MatchesFloatApplyAtDeskScale) {
    for (bool normalized : {true, false}) {
        const SparseCityMatrix a(8, 4, 2, 17, theta_fourpoint(normalized));
        const CounterRng rng(5, normalized);
        std::vector<std::int64_t> x(static_cast<std::size_t>(a.cols()));
        Vector xf(a.cols());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = static_cast<std::int64_t>(rng.below(i, 21)) - 10;
            xf(static_cast<Index>(i)) = static_cast<double>(x[i]);
        }
        const auto product = a.integer_apply<std::int64_t>(x);
        const double want_scale = (normalized ? 1.0 / std::sqrt(5.0) : 1.0) / std::sqrt(8.0);
        EXPECT_DOUBLE_EQ(product.scale, want_scale);
        Vector z(a.rows());
        for (Index i = 0; i < a.rows(); ++i) z(i) = static_cast<double>(product.z[static_cast<std::size_t>(i)]);
        EXPECT_LT(relative_error(product.scale * z, a.apply(xf)), 1e-10);
    }
}

TEST(IntegerApply, ZeroInputAndOverflowGuard) {
    const SparseCityMatrix a(8, 4, 2, 1);
    const std::vector<std::int32_t> zeros(8, 0);
    const auto product = a.integer_apply<std::int32_t>(zeros);
    for (auto v : product.z) EXPECT_EQ(v, 0);

    std::vector<std::int32_t> huge(8, 1 << 28);
    EXPECT_THROW(a.integer_apply<std::int32_t>(huge), overflow_error);
    EXPECT_THROW(a.integer_apply<std::int32_t>(std::vector<std::int32_t>(7, 0)), shape_error);

    const auto explicit_theta = identity_like(8);
    EXPECT_THROW(explicit_theta.integer_apply<std::int64_t>(std::vector<std::int64_t>(8, 0)),
                 domain_error);
}

// Pixel-valued input at the full 1024 x 20480 shape. With 0..255 inputs the
// products fit comfortably in 32 bits: 320 * 64 * 3 * 255 < 2^31.
TEST(IntegerApply, PixelRangeAtFullShape) {
    const SparseCityMatrix a(1024, 64, 320, 2024, theta_fourpoint(false));
    const CounterRng rng(99);
    std::vector<std::int32_t> x(static_cast<std::size_t>(a.cols()));
    Vector xf(a.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<std::int32_t>(rng.below(i, 256));
        xf(static_cast<Index>(i)) = x[i];
    }
    const auto product = a.integer_apply<std::int32_t>(x);
    EXPECT_DOUBLE_EQ(product.scale, 1.0 / 32.0);
    Vector z(a.rows());
    for (Index i = 0; i < a.rows(); ++i) z(i) = product.z[static_cast<std::size_t>(i)];
    EXPECT_LT(relative_error(product.scale * z, a.apply(xf)), 1e-10);
}

TEST(ToDense, SizeLimit) {
    const SparseCityMatrix a(1024, 64, 320, 1);
    EXPECT_THROW(a.to_dense(), size_error);
    const SparseCityMatrix small(8, 4, 2, 1);
    EXPECT_THROW(small.to_dense(63), size_error);
    EXPECT_NO_THROW(small.to_dense(64));
}

TEST(RankOne, DisplayedExampleVectors) {
    // m = 4, n = 2, b = 2: a(w, c) are entries of the first two columns of H_2.
    const SparseCityMatrix a(4, 2, 2, 0);
    const Matrix w = hadamard_matrix(HadamardOrder(2)).leftCols(2);
    for (Index row = 1; row <= 4; ++row) {
        Vector y1(4), y2(4);
        y1 << w(row - 1, 0), w(row - 1, 1), 0, 0;
        y2 << 0, 0, w(row - 1, 0), w(row - 1, 1);
        EXPECT_LT((a.y_kw({1, row}) - y1).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_LT((a.y_kw({2, row}) - y2).cwiseAbs().maxCoeff(), 1e-15);
    }
    EXPECT_THROW(a.y_kw({0, 1}), index_error);
    EXPECT_THROW(a.y_kw({3, 1}), index_error);
    EXPECT_THROW(a.y_kw({1, 5}), index_error);
}

TEST(RankOne, DisjointBlocksAreOrthogonal) {
    const SparseCityMatrix a(8, 4, 3, 0);
    for (Index k = 1; k <= 3; ++k)
        for (Index kk = 1; kk <= 3; ++kk) {
            if (k == kk) continue;
            for (Index w = 1; w <= 8; ++w)
                for (Index ww = 1; ww <= 8; ++ww)
                    EXPECT_EQ(a.y_kw({k, w}).dot(a.y_kw({kk, ww})), 0.0);
        }
}

TEST(RankOne, ResolutionOfIdentity) {
    for (Index m : {1, 2, 4, 8, 16}) {
        for (Index n = 1; n <= m; ++n) {
            for (Index b : {1, 2, 3}) {
                const SparseCityMatrix a(m, n, b, 0);
                Matrix sum = Matrix::Zero(a.cols(), a.cols());
                for (Index k = 1; k <= b; ++k)
                    for (Index w = 1; w <= m; ++w) {
                        const Vector y = a.y_kw({k, w});
                        sum += y * y.transpose();
                    }
                EXPECT_LT((sum - Matrix::Identity(a.cols(), a.cols())).cwiseAbs().maxCoeff(), 1e-12)
                    << m << " " << n << " " << b;
            }
        }
    }
}

TEST(GramDecomposition, MatchesDenseGram) {
    EXPECT_LT(gram_decomposition_check(SparseCityMatrix(4, 2, 2, 77)), 1e-12);
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        EXPECT_LT(gram_decomposition_check(SparseCityMatrix(8, 4, 3, seed)), 1e-10);
}

TEST(GramDecomposition, SingleBlockAndIdentityCases) {
    const SparseCityMatrix one(8, 4, 1, 5);
    EXPECT_LT(gram_decomposition_check(one), 1e-12);
    const Matrix d = one.to_dense();
    const Matrix dw = one.theta().row(0).transpose().asDiagonal() *
                      hadamard_matrix(HadamardOrder(3)).leftCols(4);
    EXPECT_LT((d - dw).cwiseAbs().maxCoeff(), 1e-15);

    const auto id = identity_like(8);
    EXPECT_LT(gram_decomposition_check(id), 1e-12);
    const Matrix g = id.to_dense().transpose() * id.to_dense();
    EXPECT_LT((g - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
}

// E[theta^2] = 1 makes E[A^T A] = I; Monte-Carlo tolerance 5/sqrt(trials).
TEST(Expectation, MeanGramIsIdentity) {
    constexpr int trials = 2000;
    Matrix mean = Matrix::Zero(8, 8);
    for (int t = 0; t < trials; ++t) {
        const Matrix d = SparseCityMatrix(8, 4, 2, derive_seed(31337, t)).to_dense();
        mean += d.transpose() * d;
    }
    mean /= trials;
    EXPECT_LT((mean - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 5.0 / std::sqrt(trials));
}

TEST(Expectation, UnnormalizedLawGivesFiveTimesIdentity) {
    constexpr int trials = 2000;
    Matrix mean = Matrix::Zero(8, 8);
    for (int t = 0; t < trials; ++t) {
        const Matrix d = SparseCityMatrix(8, 4, 2, derive_seed(7, t), theta_fourpoint(false)).to_dense();
        mean += d.transpose() * d;
    }
    mean /= trials;
    EXPECT_LT((mean - 5.0 * Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 25.0 / std::sqrt(trials));
}

TEST(Serialization, ManifestRegeneratesTheSameMatrix) {
    const SparseCityMatrix a(32, 8, 5, 0xdeadbeefcafeULL, theta_fourpoint(false));
    const auto j = a.to_json();
    EXPECT_EQ(j.at("format_version"), 1);
    EXPECT_FALSE(j.contains("theta"));
    const auto b = SparseCityMatrix::from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(a.theta(), b.theta());
    EXPECT_EQ(b.to_json(), j);
    EXPECT_THROW(identity_like(4).to_json(), domain_error);
}
