#include "rtdlab/learners.hpp"
#include "rtdlab/oracle.hpp"

#include "test_macros.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace rtdlab;

namespace {

struct Tabular {
    Mdp mdp;
    Policy pi;
    FeatureMap phi, psi;

    explicit Tabular(Mdp m)
        : mdp(std::move(m)), pi(uniform_policy(mdp.n_states, mdp.n_actions)),
          phi(tabular_features(mdp.n_states, mdp.n_actions, FeatureKind::Primal)),
          psi(tabular_features(mdp.n_states, mdp.n_actions, FeatureKind::Dual)) {}
};

LearnerConfig small_config(std::size_t t, std::size_t k, std::uint64_t seed = 0) {
    LearnerConfig cfg;
    cfg.t_outer = t;
    cfg.k_inner = k;
    cfg.seed = seed;
    return cfg;
}

double median(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

} // namespace

TEST(StepSizes, Examples) {
    LearnerConfig cfg;
    cfg.c = 1;
    cfg.omega = 0.75;
    EXPECT_EQ(alpha(0, cfg), 1.0);
    cfg.beta0 = 0.5;
    EXPECT_EQ(beta(3, cfg), 0.25);
    cfg.omega = 1;
    cfg.c = 2;
    EXPECT_EQ(alpha(1, cfg), 1.0);
}

TEST(LearnerConfig, Validation) {
    auto bad = [](auto mutate) {
        LearnerConfig cfg;
        mutate(cfg);
        EXPECT_RTD_ERROR(cfg.validate(), ErrorCode::InvalidConfig);
    };
    bad([](LearnerConfig& c) { c.k_inner = 0; });
    bad([](LearnerConfig& c) { c.beta0 = 0; });
    bad([](LearnerConfig& c) { c.c = -1; });
    bad([](LearnerConfig& c) { c.omega = 0.5; });
    bad([](LearnerConfig& c) { c.omega = 1.1; });
    bad([](LearnerConfig& c) { c.b_nu = 0.0; });
    EXPECT_NO_THROW(LearnerConfig{}.validate());
}

TEST(SuffixAverager, Examples) {
    Eigen::VectorXd nu0(2), a(2), b(2), c(2), d(2);
    nu0 << 7, 7;
    a << 1, 2;
    b << 3, 4;
    c << 5, 6;
    d << 7, 9;
    SuffixAverager avg(nu0);
    EXPECT_EQ(avg.average(), nu0);
    EXPECT_EQ(avg.push(a), a);
    avg.push(b);
    avg.push(c);
    const Eigen::VectorXd four = avg.push(d);
    EXPECT_EQ(four, (c + d) / 2);
    EXPECT_EQ(avg.count(), 4u);
    EXPECT_EQ(avg.total_sum(), a + b + c + d);
    EXPECT_EQ(avg.half_sum(), c + d);
}

TEST(SuffixAverager, MatchesNaiveRecomputation) {
    Rng rng(5);
    std::vector<Eigen::VectorXd> pushed;
    SuffixAverager avg(Eigen::VectorXd::Zero(3));
    for (std::size_t k = 1; k <= 5000; ++k) {
        Eigen::VectorXd nu(3);
        for (auto& x : nu)
            x = rng.normal();
        pushed.push_back(nu);
        const Eigen::VectorXd got = avg.push(nu);
        if (k <= 1000 || k % 97 == 0) {
            Eigen::VectorXd naive = Eigen::VectorXd::Zero(3);
            for (std::size_t l = k / 2; l < k; ++l)
                naive += pushed[l];
            naive /= static_cast<double>(k - k / 2);
            EXPECT_LE((got - naive).cwiseAbs().maxCoeff(), 1e-12) << "k=" << k;
        }
    }
}

TEST(RobustTd, ZeroOuterIterationsReturnZero) {
    Tabular p(random_mdp(3, 2, 1));
    const auto res = robust_td(p.mdp, p.pi, p.phi, p.psi, make_tv(0.2), small_config(0, 10));
    EXPECT_TRUE(res.theta_hat.isZero());
    EXPECT_EQ(res.trace.records.size(), 1u);
    const auto q = robust_q(p.mdp, p.pi, p.phi, p.psi, make_tv(0.2), small_config(0, 10));
    EXPECT_TRUE(q.theta_hat.isZero());
}

TEST(RobustTd, DegenerateMdpFollowsTheOuterRecursion) {
    // one state: theta_hat_{t+1} = 1 + 0.9 theta_hat_t, so theta_hat_T = 10 (1 - 0.9^T)
    Tabular p(rtdlab::testing::one_state_mdp(1.0, 0.9));
    const auto res = robust_td(p.mdp, p.pi, p.phi, p.psi, make_tv(0.3), small_config(20, 5000));
    EXPECT_NEAR(res.theta_hat(0), 10 * (1 - std::pow(0.9, 20)), 0.05);
}

TEST(RobustTd, DegenerateMdpReachesTen) {
    Tabular p(rtdlab::testing::one_state_mdp(1.0, 0.9));
    const UncertaintySet tv = make_tv(0.3);
    const UncertaintySet w = make_wasserstein(0.3, 1, 1, line_metric(1));
    for (const auto& u : {tv, w}) {
        const auto res = robust_td(p.mdp, p.pi, p.phi, p.psi, u, small_config(80, 5000));
        EXPECT_NEAR(res.theta_hat(0), 10.0, 0.05);
    }
}

TEST(RobustTd, TraceShape) {
    Tabular p(random_mdp(3, 2, 2));
    const auto oracle = solve_policy(p.mdp, p.pi, make_tv(0.2));
    const auto res = robust_td(p.mdp, p.pi, p.phi, p.psi, make_tv(0.2), small_config(7, 100),
                               std::span<const double>(oracle.q));
    ASSERT_EQ(res.trace.records.size(), 8u);
    for (std::size_t t = 0; t <= 7; ++t) {
        const auto& rec = res.trace.records[t];
        EXPECT_EQ(rec.t, t);
        EXPECT_FALSE(std::isnan(rec.sup_err));
        EXPECT_DOUBLE_EQ(rec.theta_norm, rec.theta_hat.norm());
        EXPECT_EQ(std::isnan(rec.mean_td), t == 0);
    }
    EXPECT_EQ(res.trace.records.back().theta_hat, res.theta_hat);
    EXPECT_DOUBLE_EQ(res.trace.records[0].sup_err, *std::max_element(oracle.q.begin(), oracle.q.end()));
}

TEST(RobustTd, SameSeedIsBitIdentical) {
    Tabular p(random_mdp(4, 2, 3));
    const UncertaintySet u = make_wasserstein(0.2, 2, 4, line_metric(4));
    const auto a = robust_td(p.mdp, p.pi, p.phi, p.psi, u, small_config(5, 2000, 9));
    const auto b = robust_td(p.mdp, p.pi, p.phi, p.psi, u, small_config(5, 2000, 9));
    const auto c = robust_td(p.mdp, p.pi, p.phi, p.psi, u, small_config(5, 2000, 10));
    EXPECT_TRUE(a.theta_hat == b.theta_hat);
    for (std::size_t t = 0; t < a.trace.records.size(); ++t) {
        EXPECT_TRUE(a.trace.records[t].theta_hat == b.trace.records[t].theta_hat);
        const double ma = a.trace.records[t].mean_td, mb = b.trace.records[t].mean_td;
        EXPECT_TRUE(ma == mb || (std::isnan(ma) && std::isnan(mb)));
    }
    EXPECT_FALSE(a.theta_hat == c.theta_hat);
}

TEST(RobustTd, ReplayReproducesThetaTrajectory) {
    Tabular p(random_mdp(4, 2, 4));
    const UncertaintySet u = make_tv(0.25);
    const LearnerConfig cfg = small_config(4, 1500, 17);
    const LearnerProblem prob{p.mdp, p.pi, p.phi, p.psi, u};
    const double b_nu = resolve_b_nu(prob, cfg, stationary_distribution(p.mdp, p.pi).d);

    std::vector<Eigen::VectorXd> live, replayed;
    RecordingTransitions<SampledTransitions> rec(
        SampledTransitions(p.mdp, p.pi, TrajectoryCursor(cfg.initial_state, cfg.seed)));
    const auto a = run_robust_learner(TargetValue::Policy, prob, cfg, b_nu, rec, std::nullopt,
                                      [&](const StepInfo& s) { live.push_back(s.theta); });
    ReplayTransitions replay(rec.recorded());
    const auto b = run_robust_learner(TargetValue::Policy, prob, cfg, b_nu, replay, std::nullopt,
                                      [&](const StepInfo& s) { replayed.push_back(s.theta); });
    ASSERT_EQ(live.size(), replayed.size());
    for (std::size_t i = 0; i < live.size(); ++i)
        ASSERT_TRUE(live[i] == replayed[i]) << "step " << i;
    EXPECT_TRUE(a.theta_hat == b.theta_hat);

    // the public entry point consumes the same stream
    const auto c = robust_td(p.mdp, p.pi, p.phi, p.psi, u, cfg);
    EXPECT_TRUE(c.theta_hat == a.theta_hat);

    ReplayTransitions short_stream(std::span<const Transition>(rec.recorded()).first(10));
    EXPECT_RTD_ERROR(run_robust_learner(TargetValue::Policy, prob, cfg, b_nu, short_stream), ErrorCode::InvalidConfig);
}

TEST(RobustTd, TrajectoryCarriesAcrossOuterIterations) {
    Tabular p(random_mdp(4, 2, 5));
    const UncertaintySet u = make_tv(0.2);
    const LearnerConfig cfg = small_config(3, 50, 1);
    const LearnerProblem prob{p.mdp, p.pi, p.phi, p.psi, u};
    RecordingTransitions<SampledTransitions> rec(SampledTransitions(p.mdp, p.pi, TrajectoryCursor(0, 1)));
    run_robust_learner(TargetValue::Policy, prob, cfg, 10.0, rec);
    const auto& tr = rec.recorded();
    ASSERT_EQ(tr.size(), 150u);
    EXPECT_EQ(tr[0].state, 0u);
    for (std::size_t i = 1; i < tr.size(); ++i)
        EXPECT_EQ(tr[i].state, tr[i - 1].next_state);
}

class LearnerInvariants : public ::testing::TestWithParam<bool> {};

TEST_P(LearnerInvariants, DualBallAndTdBound) {
    Tabular p(random_mdp(4, 2, 6));
    const UncertaintySet u = GetParam() ? UncertaintySet(make_tv(0.3))
                                        : UncertaintySet(make_wasserstein(0.3, 1, 4, line_metric(4)));
    for (bool warm : {false, true}) {
        LearnerConfig cfg = small_config(6, 3000, 2);
        cfg.warm_start = warm;
        cfg.b_nu = 4.0;
        const double vb = p.mdp.value_bound();
        const double delta = radius(u);
        const double sigma_m = GetParam() ? vb + 2 * delta * vb : (delta + 1) * *cfg.b_nu + vb;
        double max_ball = 0.0;
        double prev_theta_norm = 0.0;
        bool ok = true;
        robust_td(p.mdp, p.pi, p.phi, p.psi, u, cfg, std::nullopt, [&](const StepInfo& s) {
            max_ball = std::max(max_ball, s.nu.norm());
            if (s.k == 0 && !warm)
                prev_theta_norm = 0.0;
            ok &= std::abs(s.td) <= 1 + p.mdp.gamma * sigma_m + prev_theta_norm + 1e-12;
            prev_theta_norm = s.theta.norm();
        });
        EXPECT_LE(max_ball, 4.0 + 1e-12);
        EXPECT_TRUE(ok);
    }
}

TEST_P(LearnerInvariants, DualArgumentStaysInDomain) {
    Tabular p(random_mdp(3, 2, 7));
    const UncertaintySet u = GetParam() ? UncertaintySet(make_tv(0.3))
                                        : UncertaintySet(make_wasserstein(0.3, 1, 3, line_metric(3)));
    LearnerConfig cfg = small_config(3, 2000, 3);
    cfg.b_nu = 100.0;
    const double vb = p.mdp.value_bound();
    robust_td(p.mdp, p.pi, p.phi, p.psi, u, cfg, std::nullopt, [&](const StepInfo& s) {
        if (GetParam()) {
            ASSERT_LE(std::abs(s.lambda), vb);
            ASSERT_LE(std::abs(s.lambda_bar), vb);
        } else {
            ASSERT_GE(s.lambda, 0.0);
            ASSERT_GE(s.lambda_bar, 0.0);
        }
    });
}

TEST_P(LearnerInvariants, MedianErrorNonIncreasingInT) {
    Tabular p(random_mdp(5, 2, 0));
    const UncertaintySet u = GetParam() ? UncertaintySet(make_tv(0.2))
                                        : UncertaintySet(make_wasserstein(0.2, 1, 5, line_metric(5)));
    const auto oracle = solve_policy(p.mdp, p.pi, u);
    const std::size_t t_outer = 12;
    std::vector<std::vector<double>> errs(t_outer + 1);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto res = robust_td(p.mdp, p.pi, p.phi, p.psi, u, small_config(t_outer, 20000, seed),
                                   std::span<const double>(oracle.q));
        for (std::size_t t = 0; t <= t_outer; ++t)
            errs[t].push_back(res.trace.records[t].sup_err);
    }
    for (std::size_t t = 1; t <= t_outer; ++t)
        EXPECT_LE(median(errs[t]), median(errs[t - 1])) << "t=" << t;
}

INSTANTIATE_TEST_SUITE_P(BothSets, LearnerInvariants, ::testing::Values(true, false),
                         [](const auto& info) { return info.param ? "TV" : "Wasserstein"; });

TEST(RobustTd, ConvergesOnWassersteinSet) {
    Tabular p(random_mdp(5, 2, 0));
    for (double ell : {1.0, 2.0}) {
        const UncertaintySet u = make_wasserstein(0.2, ell, 5, line_metric(5));
        const auto oracle = solve_policy(p.mdp, p.pi, u);
        const auto res = robust_td(p.mdp, p.pi, p.phi, p.psi, u, small_config(30, 20000, 1),
                                   std::span<const double>(oracle.q));
        EXPECT_LE(res.trace.records.back().sup_err, 0.5);
    }
}

TEST(RobustTd, InputChecks) {
    Tabular p(random_mdp(3, 2, 8));
    const UncertaintySet u = make_tv(0.2);
    EXPECT_RTD_ERROR(robust_td(p.mdp, p.pi, tabular_features(2, 2), p.psi, u, small_config(1, 10)),
                     ErrorCode::DimensionMismatch);
    LearnerConfig cfg = small_config(1, 10);
    cfg.initial_state = 3;
    EXPECT_RTD_ERROR(robust_td(p.mdp, p.pi, p.phi, p.psi, u, cfg), ErrorCode::DimensionMismatch);
    EXPECT_RTD_ERROR(robust_td(p.mdp, p.pi, p.phi, p.psi, make_tv(0.0), small_config(1, 10)),
                     ErrorCode::InvalidUncertainty);
    EXPECT_RTD_ERROR(robust_td(p.mdp, p.pi, p.phi, p.psi, make_wasserstein(0.1, 1, 4, line_metric(4)), small_config(1, 10)),
                     ErrorCode::DimensionMismatch);
    const std::vector<double> short_q(3, 0.0);
    EXPECT_RTD_ERROR(robust_td(p.mdp, p.pi, p.phi, p.psi, u, small_config(1, 10), std::span<const double>(short_q)),
                     ErrorCode::DimensionMismatch);

    Tabular periodic(Mdp{2, 1, {0, 1, 1, 0}, {0.1, 0.2}, 0.9});
    EXPECT_RTD_ERROR(robust_td(periodic.mdp, periodic.pi, periodic.phi, periodic.psi, u, small_config(1, 10)),
                     ErrorCode::MixingAssumptionViolated);
    Tabular split(Mdp{2, 1, {1, 0, 0, 1}, {0.1, 0.2}, 0.9});
    EXPECT_RTD_ERROR(robust_q(split.mdp, split.pi, split.phi, split.psi, u, small_config(1, 10)),
                     ErrorCode::MixingAssumptionViolated);
}

TEST(RobustTd, DefaultDualRadiusUsesDualCovariance) {
    Tabular p(random_mdp(3, 2, 9));
    const auto d = stationary_distribution(p.mdp, p.pi).d;
    const UncertaintySet u = make_tv(0.2);
    const LearnerProblem prob{p.mdp, p.pi, p.phi, p.psi, u};
    const double mu = *std::min_element(d.begin(), d.end());
    EXPECT_NEAR(resolve_b_nu(prob, LearnerConfig{}, d), 10.0 / std::sqrt(mu), 1e-9);
    LearnerConfig cfg;
    cfg.b_nu = 2.5;
    EXPECT_EQ(resolve_b_nu(prob, cfg, d), 2.5);
}

TEST(RobustQ, SingleActionMatchesRobustTd) {
    Tabular p(random_mdp(4, 1, 10));
    const UncertaintySet u = make_tv(0.2);
    const auto a = robust_td(p.mdp, p.pi, p.phi, p.psi, u, small_config(4, 3000, 5));
    const auto b = robust_q(p.mdp, p.pi, p.phi, p.psi, u, small_config(4, 3000, 5));
    EXPECT_TRUE(a.theta_hat == b.theta_hat);
}

TEST(RobustQ, GreedyPolicyMatchesOracle) {
    Tabular p(random_mdp(4, 2, 3));
    const UncertaintySet u = make_tv(0.2);
    const auto oracle = solve_optimal(p.mdp, u);
    const auto res = robust_q(p.mdp, p.pi, p.phi, p.psi, u, small_config(30, 20000, 3),
                              std::span<const double>(oracle.q));
    const std::span<const double> q(res.theta_hat.data(), static_cast<std::size_t>(res.theta_hat.size()));
    EXPECT_EQ(greedy_actions(q, 4, 2), *oracle.greedy_policy);
    EXPECT_LE(res.trace.records.back().sup_err, 0.5);
}

TEST(NominalTd, TinyRadiusComparableToNominalReference) {
    Tabular p(random_mdp(5, 2, 0));
    const auto nominal_q = solve_policy(p.mdp, p.pi, make_tv(0.0)).q;
    const UncertaintySet tiny = make_tv(1e-6);
    const auto robust_q_values = solve_policy(p.mdp, p.pi, tiny).q;
    std::vector<double> robust_err, nominal_err;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const LearnerConfig cfg = small_config(30, 5000, seed);
        robust_err.push_back(robust_td(p.mdp, p.pi, p.phi, p.psi, tiny, cfg, std::span<const double>(robust_q_values))
                                 .trace.records.back().sup_err);
        nominal_err.push_back(nominal_td(p.mdp, p.pi, p.phi, cfg, std::span<const double>(nominal_q))
                                  .trace.records.back().sup_err);
    }
    const double r = median(robust_err), n = median(nominal_err);
    EXPECT_LE(r, 2 * n);
    EXPECT_LE(n, 2 * r);
}
