#include <gtest/gtest.h>

#include <cmath>

#include "kscn/kernelcore.hpp"
#include "oracles.hpp"

using namespace kscn;

namespace {

Mat gram_oracle(const Mat& H, const Mat& X, double c) {
    const auto rows = oracle::feature_rows(H, X);
    return oracle::gaussian_pairs(rows, rows, c);
}

}  // namespace

TEST(GramBuild, IdenticalRowsGiveOne) {
    const Mat X{{0.3, 0.7}, {0.3, 0.7}, {0.0, 1.0}};
    const GramState g = gram_build(Mat(3, 0), X, 0.5);
    EXPECT_EQ(g.K(0, 1), 1.0);
    EXPECT_EQ(g.feature_width, 2u);
}

TEST(GramBuild, DistanceEqualToWidthGivesInverseE) {
    const Mat X{{0.0, 0.0}, {1.0, 2.0}};
    const GramState g = gram_build(Mat(2, 0), X, 5.0);
    EXPECT_NEAR(g.K(0, 1), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(g.K(0, 1), 0.3678794, 1e-7);
}

TEST(GramBuild, MatchesPerPairOracle) {
    const Mat H = oracle::random_mat(6, 2, 1);
    const Mat X = oracle::random_mat(6, 3, 2, 0.0, 1.0);
    const GramState g = gram_build(H, X, 0.7);
    EXPECT_LE(max_abs_diff(g.K, gram_oracle(H, X, 0.7)), 1e-12);
    EXPECT_EQ(g.feature_width, 5u);
}

TEST(GramBuild, StateInvariants) {
    const Mat H = oracle::random_mat(40, 5, 3);
    const Mat X = oracle::random_mat(40, 2, 4, 0.0, 1.0);
    const GramState g = gram_build(H, X, 2.0);
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_EQ(g.K(i, i), 1.0);
        for (std::size_t j = 0; j < 40; ++j) {
            EXPECT_EQ(g.K(i, j), g.K(j, i));
            EXPECT_GT(g.K(i, j), 0.0);
            EXPECT_LE(g.K(i, j), 1.0);
            EXPECT_NEAR(g.K(i, j), std::exp(-g.sqdist(i, j) / 2.0), 1e-12);
        }
    }
}

TEST(GramBuild, PositiveSemidefinite) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Mat H = oracle::random_mat(60, 3, seed);
        const Mat X = oracle::random_mat(60, 2, seed + 10, 0.0, 1.0);
        for (double c : {0.01, 1.0, 100.0}) {
            const auto ev = sym_eigvals(gram_build(H, X, c).K);
            EXPECT_GE(ev.back(), -1e-8 * 60.0);
        }
    }
}

TEST(GramBuild, MonotoneInDistance) {
    const Mat X = oracle::random_mat(25, 3, 5);
    const GramState g = gram_build(Mat(25, 0), X, 1.5);
    for (std::size_t i = 0; i < 25; ++i)
        for (std::size_t j = 0; j < 25; ++j)
            for (std::size_t k = 0; k < 25; ++k)
                if (g.sqdist(i, j) < g.sqdist(i, k)) EXPECT_GT(g.K(i, j), g.K(i, k));
}

TEST(GramBuild, WidthLimits) {
    const Mat X{{0.0}, {0.25}, {0.5}, {1.0}};
    const GramState wide = gram_build(Mat(4, 0), X, 1e12);
    const GramState narrow = gram_build(Mat(4, 0), X, 1e-12);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_NEAR(wide.K(i, j), 1.0, 1e-6);
            EXPECT_NEAR(narrow.K(i, j), i == j ? 1.0 : 0.0, 1e-6);
        }
}

TEST(GramExtend, ConstantColumnLeavesKernelUnchanged) {
    const Mat X = oracle::random_mat(8, 2, 6);
    const GramState g = gram_build(Mat(8, 0), X, 0.9);
    const GramState e = gram_extend(g, std::vector<double>(8, 0.37), 0.9);
    EXPECT_EQ(e.K, g.K);
    EXPECT_EQ(e.feature_width, 3u);
}

TEST(GramExtend, FromEmptyEqualsBuild) {
    const Mat X = oracle::random_mat(10, 2, 7);
    const Mat h = oracle::random_mat(10, 1, 8);
    const GramState e = gram_extend(gram_build(Mat(10, 0), X, 0.4), h.col(0), 0.4);
    const GramState b = gram_build(h, X, 0.4);
    EXPECT_LE(max_abs_diff(e.K, b.K), 1e-15);
    EXPECT_EQ(e.feature_width, b.feature_width);
}

TEST(GramExtend, ChainEqualsFullRebuild) {
    for (std::size_t n : {5u, 50u, 200u}) {
        const Mat X = oracle::random_mat(n, 3, 9 + n, 0.0, 1.0);
        const Mat H = oracle::random_mat(n, 30, 10 + n);
        GramState g = gram_build(Mat(n, 0), X, 3.0);
        for (std::size_t L = 1; L <= 30; ++L) {
            g = gram_extend(g, H.col(L - 1), 3.0);
            if (L == 5 || L == 30) {
                Mat prefix(n, L);
                for (std::size_t j = 0; j < L; ++j) prefix.set_col(j, H.col(j));
                EXPECT_LE(max_abs_diff(g.K, gram_oracle(prefix, X, 3.0)), 1e-10) << "n=" << n << " L=" << L;
            }
        }
    }
}

TEST(GramExtend, LengthMismatch) {
    const GramState g = gram_build(Mat(3, 0), Mat(3, 1), 1.0);
    EXPECT_THROW(gram_extend(g, std::vector<double>(2, 0.0), 1.0), DimensionMismatch);
}

TEST(KernelRidgeFit, ScalarShrinkage) {
    const auto sol = kernel_ridge_fit(Mat{{1.0}}, Mat{{2.0}}, 0.001);
    EXPECT_NEAR(sol.fitted(0, 0), 2.0 / 1.001, 1e-15);
    const auto tiny = kernel_ridge_fit(Mat{{1.0}}, Mat{{2.0}}, 1e-14);
    EXPECT_NEAR(tiny.fitted(0, 0), 2.0, 1e-12);
}

TEST(KernelRidgeFit, IdentityGram) {
    const Mat Y = oracle::random_mat(5, 2, 11);
    const auto sol = kernel_ridge_fit(Mat::identity(5), Y, 0.25);
    EXPECT_LE(max_abs_diff(sol.fitted, (1.0 / 1.25) * Y), 1e-15);
}

TEST(KernelRidgeFit, MatchesExplicitInverse) {
    for (std::size_t n : {10u, 30u, 50u}) {
        const Mat H = oracle::random_mat(n, 2, 12 + n);
        const Mat X = oracle::random_mat(n, 2, 13 + n);
        const Mat K = gram_build(H, X, 1.0).K;
        const Mat Y = oracle::random_mat(n, 2, 14 + n);
        const double tau = 1e-3;
        Mat A = K;
        for (std::size_t i = 0; i < n; ++i) A(i, i) += tau;
        const Mat ref = oracle::matmul(oracle::gauss_jordan_inverse(A), Y);
        const auto sol = kernel_ridge_fit(K, Y, tau);
        EXPECT_LE(max_abs_diff(sol.alpha, ref), 1e-8) << "n=" << n;
        EXPECT_LE(max_abs_diff(oracle::matmul(A, sol.alpha), Y), 1e-8);
        EXPECT_LE(max_abs_diff(sol.fitted, oracle::matmul(K, sol.alpha)), 1e-12);
    }
}

TEST(KernelRidgeFit, FittedNormShrinksWithTau) {
    const Mat X = oracle::random_mat(30, 2, 15);
    const Mat K = gram_build(Mat(30, 0), X, 0.5).K;
    const Mat Y = oracle::random_mat(30, 1, 16);
    double prev = std::numeric_limits<double>::infinity();
    for (double tau : {1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
        const double norm = frobenius_sq(kernel_ridge_fit(K, Y, tau).fitted);
        EXPECT_LE(norm, prev * (1.0 + 1e-12));
        prev = norm;
    }
}

TEST(KernelRidgeFit, NonPositiveTauRejected) {
    EXPECT_THROW(kernel_ridge_fit(Mat{{1.0}}, Mat{{1.0}}, 0.0), std::invalid_argument);
}

TEST(KernelConfig, Validation) {
    EXPECT_NO_THROW((KernelConfig{1.0, 1e-3}.validate()));
    EXPECT_THROW((KernelConfig{0.0, 1e-3}.validate()), ConfigError);
    EXPECT_THROW((KernelConfig{1.0, 0.0}.validate()), ConfigError);
}

TEST(CrossGram, TrainAsTestEqualsGram) {
    const Mat H = oracle::random_mat(7, 2, 17);
    const Mat X = oracle::random_mat(7, 1, 18);
    EXPECT_LE(max_abs_diff(cross_gram({H, X}, {H, X}, 0.3), gram_build(H, X, 0.3).K), 1e-15);
}

TEST(CrossGram, FarPointPredictsZero) {
    const Mat X = oracle::random_mat(5, 1, 19, 0.0, 1.0);
    const Mat far{{1000.0}};
    const Mat none(5, 0), none_t(1, 0);
    const Mat Kt = cross_gram({none, X}, {none_t, far}, 1.0);
    for (double v : Kt.data()) EXPECT_EQ(v, 0.0);
    const Mat alpha = oracle::random_mat(5, 1, 20);
    EXPECT_EQ(kernel_predict(Kt, alpha)(0, 0), 0.0);
}

TEST(CrossGram, MatchesPerPairOracleAndHitsTrainPoint) {
    const Mat H = oracle::random_mat(6, 2, 21), X = oracle::random_mat(6, 2, 22);
    Mat Ht = oracle::random_mat(4, 2, 23), Xt = oracle::random_mat(4, 2, 24);
    for (std::size_t k = 0; k < 2; ++k) {
        Ht(1, k) = H(3, k);
        Xt(1, k) = X(3, k);
    }
    const Mat Kt = cross_gram({H, X}, {Ht, Xt}, 0.8);
    ASSERT_EQ(Kt.rows(), 4u);
    ASSERT_EQ(Kt.cols(), 6u);
    const Mat ref = oracle::gaussian_pairs(oracle::feature_rows(Ht, Xt), oracle::feature_rows(H, X), 0.8);
    EXPECT_LE(max_abs_diff(Kt, ref), 1e-12);
    EXPECT_EQ(Kt(1, 3), 1.0);
}

TEST(CrossGram, WidthMismatch) {
    const Mat a(3, 2), b(2, 3);
    EXPECT_THROW(cross_gram({Mat(3, 0), a}, {Mat(2, 0), b}, 1.0), DimensionMismatch);
}

TEST(KernelPredict, ZeroRowGivesZero) {
    EXPECT_EQ(kernel_predict(Mat(1, 4), oracle::random_mat(4, 2, 25)), Mat(1, 2));
}

TEST(KernelPredict, TrainInputsReproduceFitted) {
    const Mat X = oracle::random_mat(12, 2, 26);
    const Mat Y = oracle::random_mat(12, 1, 27);
    const GramState g = gram_build(Mat(12, 0), X, 1.0);
    const auto sol = kernel_ridge_fit(g.K, Y, 1e-2);
    const Mat Kt = cross_gram({Mat(12, 0), X}, {Mat(12, 0), X}, 1.0);
    EXPECT_LE(max_abs_diff(kernel_predict(Kt, sol.alpha), sol.fitted), 1e-12);
}

TEST(KernelPredict, MatchesTripleLoop) {
    const Mat Kt = oracle::random_mat(3, 4, 28), alpha = oracle::random_mat(4, 2, 29);
    EXPECT_LE(max_abs_diff(kernel_predict(Kt, alpha), oracle::matmul(Kt, alpha)), 1e-15);
    EXPECT_THROW(kernel_predict(Kt, Mat(3, 1)), DimensionMismatch);
}
