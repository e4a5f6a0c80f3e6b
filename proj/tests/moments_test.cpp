#include "tsplit/moments.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "tsplit/dgp.hpp"

namespace {

using namespace tsplit;

Eigen::MatrixXd random_data(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd d(n, p + 1);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= p; ++j) d(i, j) = z(rng);
    return d;
}

// Naive psi: explicit double loop over the upper triangle, then cross moments.
std::vector<double> naive_psi(const Eigen::MatrixXd& d, const std::vector<std::size_t>& cols) {
    std::vector<double> out;
    const auto n = static_cast<double>(d.rows());
    for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a; b < cols.size(); ++b) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < d.rows(); ++i)
                s += d(i, static_cast<Eigen::Index>(cols[a])) * d(i, static_cast<Eigen::Index>(cols[b]));
            out.push_back(s / n);
        }
    for (std::size_t a = 0; a < cols.size(); ++a) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d.rows(); ++i) s += d(i, static_cast<Eigen::Index>(cols[a])) * d(i, 0);
        out.push_back(s / n);
    }
    return out;
}

MomentVector make_psi(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross) {
    const auto k = static_cast<std::size_t>(gram.rows());
    std::vector<std::size_t> cols(k);
    std::iota(cols.begin(), cols.end(), 1);
    Eigen::VectorXd stacked(static_cast<Eigen::Index>(k * (k + 1) / 2 + k));
    Eigen::Index s = 0;
    for (Eigen::Index a = 0; a < gram.rows(); ++a)
        for (Eigen::Index b = a; b < gram.rows(); ++b) stacked(s++) = gram(a, b);
    stacked.tail(cross.size()) = cross;
    return MomentVector(ModelSpec(cols), stacked, 1);
}

TEST(ModelSpecTest, ValidatesCovariates) {
    EXPECT_THROW(ModelSpec(std::vector<std::size_t>{}), Error);
    EXPECT_THROW(ModelSpec({0}), Error);
    EXPECT_THROW(ModelSpec({2, 1}), Error);
    EXPECT_THROW(ModelSpec({1, 1}), Error);
    EXPECT_THROW(ModelSpec({1, 2}, 2), Error);
    EXPECT_NO_THROW(ModelSpec({1, 3}, 1));
    EXPECT_THROW(ModelSpec({1, 3}).check_columns(2), Error);
    EXPECT_EQ(ModelSpec({1, 3, 4}).moment_dim(), 9u);
    EXPECT_EQ(ModelSpec({1, 3, 4}).label(), "1;3;4");
}

TEST(ComputePsi, ConstantDesign) {
    Eigen::MatrixXd d(7, 2);
    d.col(0).setConstant(3.25);
    d.col(1).setOnes();
    const auto psi = compute_psi(d, ModelSpec({1}));
    EXPECT_EQ(psi.stacked()(0), 1.0);
    EXPECT_EQ(psi.stacked()(1), 3.25);
    EXPECT_EQ(psi.n_obs(), 7u);
}

TEST(ComputePsi, TwoPointSymmetry) {
    Eigen::MatrixXd d(2, 2);
    d << 2.0, 1.0, 0.0, -1.0;
    const auto psi = compute_psi(d, ModelSpec({1}));
    EXPECT_EQ(psi.gram_upper()(0), 1.0);
    EXPECT_EQ(psi.cross()(0), 1.0);
}

TEST(ComputePsi, MatchesNaiveLoops) {
    const auto d = random_data(5, 2, 1);
    const auto psi = compute_psi(d, ModelSpec({1, 2}));
    const auto ref = naive_psi(d, {1, 2});
    ASSERT_EQ(psi.dim(), ref.size());
    for (std::size_t j = 0; j < ref.size(); ++j) EXPECT_NEAR(psi.stacked()(static_cast<Eigen::Index>(j)), ref[j], 1e-12);

    const auto sub = compute_psi(random_data(9, 4, 2), ModelSpec({2, 4}));
    const auto sub_ref = naive_psi(random_data(9, 4, 2), {2, 4});
    for (std::size_t j = 0; j < sub_ref.size(); ++j)
        EXPECT_NEAR(sub.stacked()(static_cast<Eigen::Index>(j)), sub_ref[j], 1e-12);
}

TEST(ComputePsi, GramIsSymmetricPsd) {
    const auto psi = compute_psi(random_data(40, 3, 3), ModelSpec({1, 2, 3}));
    const Eigen::MatrixXd g = psi.gram();
    EXPECT_EQ(g, g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
}

TEST(ComputePsi, RejectsEmptyData) {
    try {
        compute_psi(Eigen::MatrixXd(0, 2), ModelSpec({1}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
    EXPECT_THROW(compute_psi(random_data(5, 2, 1), ModelSpec({3})), Error);
}

TEST(ComputePsi, RowPermutationInvariance) {
    // Small integers: every partial sum is exact, so equality is exact.
    Eigen::MatrixXd d(6, 3);
    d << 1, 2, -1, 0, 3, 4, -2, 1, 1, 5, -1, 2, 2, 0, 3, -3, 2, -2;
    std::vector<Eigen::Index> perm{4, 1, 5, 0, 3, 2};
    Eigen::MatrixXd shuffled(6, 3);
    for (Eigen::Index i = 0; i < 6; ++i) shuffled.row(i) = d.row(perm[static_cast<std::size_t>(i)]);
    const ModelSpec m({1, 2});
    EXPECT_EQ(compute_psi(d, m).stacked(), compute_psi(shuffled, m).stacked());

    const auto r = random_data(200, 2, 4);
    std::vector<Eigen::Index> idx(200);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), std::mt19937_64(5));
    Eigen::MatrixXd rs(200, 3);
    for (Eigen::Index i = 0; i < 200; ++i) rs.row(i) = r.row(idx[static_cast<std::size_t>(i)]);
    EXPECT_TRUE(compute_psi(r, m).stacked().isApprox(compute_psi(rs, m).stacked(), 1e-13));
    EXPECT_TRUE(g_of_psi(compute_psi(r, m)).isApprox(g_of_psi(compute_psi(rs, m)), 1e-12));
}

TEST(GOfPsi, ScalarInverse) {
    Eigen::MatrixXd g(1, 1);
    g << 1.0;
    Eigen::VectorXd c(1);
    c << 2.75;
    EXPECT_DOUBLE_EQ(g_of_psi(make_psi(g, c))(0), 2.75);
}

TEST(GOfPsi, IdentityGramReturnsCross) {
    Eigen::VectorXd c(3);
    c << 0.5, -1.25, 4.0;
    EXPECT_TRUE(g_of_psi(make_psi(Eigen::MatrixXd::Identity(3, 3), c)).isApprox(c, 1e-15));
}

TEST(GOfPsi, TwoByTwoSolve) {
    Eigen::MatrixXd g(2, 2);
    g << 2, 1, 1, 2;
    const auto beta = g_of_psi(make_psi(g, Eigen::Vector2d(1, 1)));
    EXPECT_NEAR(beta(0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(beta(1), 1.0 / 3.0, 1e-15);
}

TEST(GOfPsi, SingularGramIsReportedDistinctly) {
    Eigen::MatrixXd g(2, 2);
    g << 1, 1, 1, 1;
    for (const Eigen::MatrixXd& gram : {g, Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 2))}) {
        try {
            g_of_psi(make_psi(gram, Eigen::Vector2d(1, 2)));
            FAIL() << "expected singular-design error";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::SingularDesign);
        }
    }
    Eigen::MatrixXd near(2, 2);
    near << 1, 1, 1, 1 + 1e-15;
    EXPECT_THROW(g_of_psi(make_psi(near, Eigen::Vector2d(1, 2))), Error);
}

TEST(GOfPsi, NoiselessPanelRecoversTruth) {
    const RegressionDgp spec{{1.5, -0.75, 0.25}, 0.4, 0.3, 0.2, 0.0};
    const auto panel = gen_regression_panel(spec, 300, 8);
    const auto beta = g_of_psi(compute_psi(panel.values(), ModelSpec({1, 2, 3})));
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(beta(j), spec.beta_true[static_cast<std::size_t>(j)], 1e-8);
}

TEST(GradG, ScalarQuotientRule) {
    Eigen::MatrixXd g(1, 1);
    g << 1.0;
    Eigen::VectorXd c(1);
    c << 1.0;
    const auto grad = grad_g(make_psi(g, c), 0);
    ASSERT_EQ(grad.size(), 2);
    EXPECT_DOUBLE_EQ(grad(0), -1.0);
    EXPECT_DOUBLE_EQ(grad(1), 1.0);
}

TEST(GradG, IdentityGramCrossDerivatives) {
    Eigen::VectorXd c(3);
    c << 0.3, -2.0, 1.1;
    const auto psi = make_psi(Eigen::MatrixXd::Identity(3, 3), c);
    for (std::size_t a = 0; a < 3; ++a) {
        const auto grad = grad_g(psi, a);
        for (Eigen::Index b = 0; b < 3; ++b) EXPECT_NEAR(grad(6 + b), b == static_cast<Eigen::Index>(a) ? 1.0 : 0.0, 1e-15);
    }
}

TEST(GradG, MatchesCentralDifferences) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> kdist(1, 4);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = kdist(rng);
        Eigen::MatrixXd a(k + 3, k);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
        const Eigen::MatrixXd gram = a.transpose() * a / (k + 3) + 0.5 * Eigen::MatrixXd::Identity(k, k);
        Eigen::VectorXd cross(k);
        for (Eigen::Index i = 0; i < k; ++i) cross(i) = z(rng);
        const auto psi = make_psi(gram, cross);
        for (std::size_t coord = 0; coord < static_cast<std::size_t>(k); ++coord) {
            const auto analytic = grad_g(psi, coord);
            Eigen::VectorXd fd(analytic.size());
            for (Eigen::Index j = 0; j < fd.size(); ++j) {
                const double h = 1e-6 * (1.0 + std::abs(psi.stacked()(j)));
                Eigen::VectorXd up = psi.stacked(), down = psi.stacked();
                up(j) += h;
                down(j) -= h;
                const auto ci = static_cast<Eigen::Index>(coord);
                fd(j) = (g_of_psi(psi.perturbed(up - psi.stacked()))(ci) -
                         g_of_psi(psi.perturbed(down - psi.stacked()))(ci)) /
                        (2.0 * h);
            }
            const double rel = (fd - analytic).lpNorm<Eigen::Infinity>() / analytic.lpNorm<Eigen::Infinity>();
            EXPECT_LE(rel, 1e-6) << "trial " << trial << " coordinate " << coord;
        }
    }
}

TEST(Contributions, ColumnMeansEqualPsi) {
    const auto d = random_data(37, 3, 9);
    const ModelSpec m({1, 3});
    const auto xi = per_observation_contributions(d, m);
    const auto psi = compute_psi(d, m);
    ASSERT_EQ(xi.cols(), static_cast<Eigen::Index>(psi.dim()));
    for (Eigen::Index j = 0; j < xi.cols(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < xi.rows(); ++i) s += xi(i, j);
        EXPECT_NEAR(s / 37.0, psi.stacked()(j), 1e-12);
    }
}

TEST(Contributions, SingleRowEqualsPsi) {
    const auto d = random_data(1, 2, 10);
    const ModelSpec m({1, 2});
    EXPECT_EQ(Eigen::VectorXd(per_observation_contributions(d, m).row(0).transpose()), compute_psi(d, m).stacked());
}

TEST(Contributions, MatchNaiveRowLoop) {
    const auto d = random_data(6, 2, 11);
    const auto xi = per_observation_contributions(d, ModelSpec({1, 2}));
    for (Eigen::Index i = 0; i < 6; ++i) {
        const double x1 = d(i, 1), x2 = d(i, 2), y = d(i, 0);
        const double expected[5] = {x1 * x1, x1 * x2, x2 * x2, x1 * y, x2 * y};
        for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(xi(i, j), expected[j], 1e-15);
    }
}

}  // namespace
