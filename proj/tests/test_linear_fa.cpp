#include "rtdlab/linear_fa.hpp"

#include "test_macros.hpp"
#include "test_support.hpp"

#include <Eigen/Eigenvalues>

#include <gtest/gtest.h>

using namespace rtdlab;

TEST(Clip, Examples) {
    EXPECT_EQ(clip(0.5, -1, 1), 0.5);
    EXPECT_EQ(clip(-7, -1, 1), -1);
    EXPECT_EQ(clip(3, -1, 1), 1);
    EXPECT_RTD_ERROR(clip(0.0, 1, -1), ErrorCode::BadBounds);
}

TEST(FeatureMap, RowNormBound) {
    RowMatrix ok(2, 2);
    ok << 0.6, 0.8, 0.0, 0.5;
    EXPECT_NO_THROW(FeatureMap(ok, FeatureKind::Primal));
    RowMatrix bad = ok;
    bad(0, 0) = 0.7;
    EXPECT_RTD_ERROR(FeatureMap(bad, FeatureKind::Primal), ErrorCode::InvalidFeatures);
    RowMatrix slightly = ok;
    slightly.row(0) *= 1.0 + 5e-13;
    const FeatureMap rescaled(slightly, FeatureKind::Dual);
    EXPECT_LE(rescaled.row(0).norm(), 1.0);
    RowMatrix over = ok;
    over.row(0) *= 1.0 + 1e-11;
    EXPECT_RTD_ERROR(FeatureMap(over, FeatureKind::Primal), ErrorCode::InvalidFeatures);
}

TEST(TabularFeatures, IsIdentity) {
    const FeatureMap phi = tabular_features(2, 2);
    EXPECT_EQ(phi.rows(), 4);
    EXPECT_TRUE(phi.matrix().isIdentity());
}

TEST(VFromTheta, Examples) {
    const Mdp m = random_mdp(3, 2, 1);
    const FeatureMap phi = tabular_features(3, 2);
    const Policy pi = uniform_policy(3, 2);
    for (double v : v_from_theta(m, pi, phi, Eigen::VectorXd::Zero(6)))
        EXPECT_EQ(v, 0.0);

    Eigen::VectorXd theta(6);
    theta << 1, 2, 30, -4, -50, 6;
    const std::vector<std::size_t> acts{1, 0, 0};
    const auto v = v_from_theta(m, deterministic_policy(2, acts), phi, theta);
    EXPECT_EQ(v[0], 2.0);
    EXPECT_DOUBLE_EQ(v[1], 10.0);
    EXPECT_DOUBLE_EQ(v[2], -10.0);

    for (double x : v_from_theta(m, pi, phi, Eigen::VectorXd::Constant(6, 25.0)))
        EXPECT_DOUBLE_EQ(x, 10.0);
    EXPECT_RTD_ERROR(v_from_theta(m, pi, phi, Eigen::VectorXd::Zero(5)), ErrorCode::DimensionMismatch);
}

TEST(VStarFromTheta, Examples) {
    const Mdp single = random_mdp(4, 1, 2);
    const FeatureMap phi1 = tabular_features(4, 1);
    Eigen::VectorXd th(4);
    th << 3, -2, 12, 0.5;
    const std::vector<std::size_t> zeros(4, 0);
    EXPECT_EQ(v_star_from_theta(single, phi1, th), v_from_theta(single, deterministic_policy(1, zeros), phi1, th));

    const Mdp m = random_mdp(3, 4, 3);
    const FeatureMap phi = tabular_features(3, 4);
    for (double x : v_star_from_theta(m, phi, Eigen::VectorXd::Zero(12)))
        EXPECT_EQ(x, 0.0);
    Eigen::VectorXd by_action(12);
    for (int i = 0; i < 12; ++i)
        by_action(i) = i % 4;
    for (double x : v_star_from_theta(m, phi, by_action))
        EXPECT_EQ(x, std::min(3.0, 10.0));
    by_action *= 5.0;
    for (double x : v_star_from_theta(m, phi, by_action))
        EXPECT_DOUBLE_EQ(x, 10.0);
}

TEST(ClippedValues, AlwaysWithinBound) {
    Rng rng(5);
    const Mdp m = random_mdp(4, 3, 5, 0.8);
    const FeatureMap phi = tabular_features(4, 3);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd th(12);
        for (auto& x : th)
            x = 40 * rng.normal();
        for (double v : v_from_theta(m, uniform_policy(4, 3), phi, th))
            EXPECT_LE(std::abs(v), 5.0 + 1e-12);
        for (double v : v_star_from_theta(m, phi, th))
            EXPECT_LE(std::abs(v), 5.0 + 1e-12);
    }
}

TEST(Projection, TabularIsIdentity) {
    Rng rng(6);
    const FeatureMap phi = tabular_features(3, 2);
    std::vector<double> d = rtdlab::testing::random_simplex(rng, 6);
    Eigen::VectorXd f(6);
    for (auto& x : f)
        x = rng.normal();
    EXPECT_LE((project_weighted(f, phi, d) - f).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, FixesRangeAndIsIdempotent) {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> d = rtdlab::testing::random_simplex(rng, 10);
        const FeatureMap phi = random_features(10, 4, 100 + i, d);
        Eigen::VectorXd theta(4), f(10);
        for (auto& x : theta)
            x = rng.normal();
        for (auto& x : f)
            x = rng.normal();
        const Eigen::VectorXd in_range = phi.matrix() * theta;
        EXPECT_LE((project_weighted(in_range, phi, d) - in_range).cwiseAbs().maxCoeff(), 1e-10);
        const Eigen::VectorXd once = project_weighted(f, phi, d);
        EXPECT_LE((project_weighted(once, phi, d) - once).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Projection, SingularCovarianceRejected) {
    RowMatrix dup(3, 2);
    dup << 0.5, 0.5, 0.3, 0.3, 0.7, 0.7;
    const FeatureMap phi(dup, FeatureKind::Primal);
    const std::vector<double> d{0.2, 0.3, 0.5};
    EXPECT_RTD_ERROR(project_weighted(Eigen::VectorXd::Ones(3), phi, d), ErrorCode::SingularCovariance);
}

TEST(MinEigenvalue, Examples) {
    const std::vector<double> uniform(4, 0.25);
    EXPECT_NEAR(min_eigenvalue(tabular_features(2, 2), uniform), 0.25, 1e-15);

    RowMatrix dup(4, 2);
    dup << 0.5, 0.5, 0.3, 0.3, 0.7, 0.7, 0.1, 0.1;
    const WeightedGeometry g = weighted_geometry(FeatureMap(dup, FeatureKind::Primal), uniform);
    EXPECT_NEAR(g.mu, 0.0, 1e-12);
    EXPECT_TRUE(g.singular());

    const std::vector<double> d{0.1, 0.2, 0.3, 0.15, 0.25, 0.0};
    EXPECT_EQ(min_eigenvalue(tabular_features(3, 2), d), 0.0);
    const std::vector<double> d2{0.1, 0.2, 0.3, 0.15, 0.2, 0.05};
    EXPECT_NEAR(min_eigenvalue(tabular_features(3, 2), d2), 0.05, 1e-15);
}

TEST(MinEigenvalue, MatchesIndependentEigensolver) {
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        const std::size_t n = 12, dim = 1 + i % 8;
        const std::vector<double> d = rtdlab::testing::random_simplex(rng, n);
        const FeatureMap phi = random_features(n, dim, 3 + i, d);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(weighted_covariance(phi, d));
        EXPECT_NEAR(min_eigenvalue(phi, d), es.eigenvalues()(0), 1e-9);
        const auto all = jacobi_eigenvalues(weighted_covariance(phi, d));
        for (std::size_t k = 0; k < all.size(); ++k)
            EXPECT_NEAR(all[k], es.eigenvalues()(static_cast<Eigen::Index>(k)), 1e-9);
    }
}

TEST(MinEigenvalue, CovarianceIsSymmetric) {
    Rng rng(8);
    const std::vector<double> d = rtdlab::testing::random_simplex(rng, 9);
    const Eigen::MatrixXd cov = weighted_covariance(random_features(9, 5, 8, d), d);
    EXPECT_LE((cov - cov.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectBall, Examples) {
    Eigen::VectorXd small(2);
    small << 0.3, 0.4;
    EXPECT_EQ(project_ball(small, 1.0), small);
    Eigen::VectorXd v(2);
    v << 3, 4;
    const Eigen::VectorXd p = project_ball(v, 1.0);
    EXPECT_NEAR(p(0), 0.6, 1e-15);
    EXPECT_NEAR(p(1), 0.8, 1e-15);
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd x(5);
        for (auto& e : x)
            e = 10 * rng.normal();
        const double b = 3 * rng.uniform() + 1e-3;
        EXPECT_LE(project_ball(x, b).norm(), b + 1e-15);
    }
}

TEST(RandomFeatures, UnitRowsAndConditioned) {
    Rng rng(10);
    const std::vector<double> d = rtdlab::testing::random_simplex(rng, 8);
    const FeatureMap phi = random_features(8, 3, 4, d, FeatureKind::Dual);
    for (Eigen::Index i = 0; i < phi.rows(); ++i)
        EXPECT_NEAR(phi.row(static_cast<std::size_t>(i)).norm(), 1.0, 1e-12);
    EXPECT_GT(min_eigenvalue(phi, d), 1e-6);
    EXPECT_EQ(phi.kind(), FeatureKind::Dual);
    EXPECT_TRUE(random_features(8, 3, 4, d).matrix() == phi.matrix());
    EXPECT_RTD_ERROR(random_features(4, 5, 1, std::vector<double>(4, 0.25)), ErrorCode::InvalidFeatures);
}
