#pragma once

#include "rtdlab/error.hpp"
#include "rtdlab/linear_fa.hpp"
#include "rtdlab/mdp.hpp"
#include "rtdlab/uncertainty.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rtdlab {

struct LearnerConfig {
    std::size_t t_outer = 30;
    std::size_t k_inner = 20000;
    double beta0 = 2.0;
    double c = 4.0;
    double omega = 0.75;
    std::optional<double> b_nu; ///< unset: 1 / ((1 - gamma) sqrt(mu_psi))
    bool warm_start = false;
    std::uint64_t seed = 0;
    std::size_t initial_state = 0;

    void validate() const {
        auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
        if (k_inner < 1)
            fail("K must be >= 1");
        if (!(beta0 > 0.0))
            fail("beta0 must be positive");
        if (!(c > 0.0))
            fail("c must be positive");
        if (!(omega > 0.5 && omega <= 1.0))
            fail("omega must lie in (0.5, 1]");
        if (b_nu && !(*b_nu > 0.0))
            fail("b_nu must be positive");
    }
};

/// Slow step c / (k+1)^omega.
inline double alpha(std::size_t k, const LearnerConfig& cfg) {
    return cfg.c / std::pow(static_cast<double>(k + 1), cfg.omega);
}

/// Fast step beta0 / sqrt(k+1).
inline double beta(std::size_t k, const LearnerConfig& cfg) {
    return cfg.beta0 / std::sqrt(static_cast<double>(k + 1));
}

/**
@brief Half-tail average of the dual iterates.

After pushing nu_0, ..., nu_{k-1} the average is
(1 / ceil(k/2)) * sum_{l = floor(k/2)}^{k-1} nu_l; before any push it is the
initial iterate. Iterates still inside the window are kept in a flat buffer.
*/
class SuffixAverager {
public:
    explicit SuffixAverager(Eigen::VectorXd initial) { reset(std::move(initial)); }

    void reset(Eigen::VectorXd initial) {
        initial_ = std::move(initial);
        const auto d = initial_.size();
        total_sum_ = Eigen::VectorXd::Zero(d);
        half_sum_ = Eigen::VectorXd::Zero(d);
        buffer_.clear();
        front_ = 0;
        count_ = 0;
    }

    const Eigen::VectorXd& push(const Eigen::VectorXd& nu) {
        const auto d = static_cast<std::size_t>(initial_.size());
        buffer_.insert(buffer_.end(), nu.data(), nu.data() + d);
        total_sum_ += nu;
        half_sum_ += nu;
        ++count_;
        // window start floor(k/2) advances by one whenever k becomes even
        if (count_ % 2 == 0) {
            half_sum_ -= Eigen::Map<const Eigen::VectorXd>(buffer_.data() + front_ * d,
                                                           static_cast<Eigen::Index>(d));
            ++front_;
        }
        // compact once the retired prefix dominates the buffer
        if (front_ > 1024 && front_ * 2 > buffer_.size() / d) {
            buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(front_ * d));
            front_ = 0;
        }
        update_average();
        return average_;
    }

    /// Current average; the initial iterate when nothing was pushed.
    const Eigen::VectorXd& average() const { return count_ == 0 ? initial_ : average_; }

    std::size_t count() const { return count_; }
    const Eigen::VectorXd& total_sum() const { return total_sum_; }
    const Eigen::VectorXd& half_sum() const { return half_sum_; }

private:
    void update_average() {
        const std::size_t window = count_ - count_ / 2;
        average_ = half_sum_ / static_cast<double>(window);
    }

    Eigen::VectorXd initial_, total_sum_, half_sum_, average_;
    std::vector<double> buffer_;
    std::size_t front_ = 0;
    std::size_t count_ = 0;
};

struct TraceRecord {
    std::size_t t = 0;
    Eigen::VectorXd theta_hat;
    double sup_err = std::numeric_limits<double>::quiet_NaN();
    double theta_norm = 0.0;
    double mean_td = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
};

/// One record per outer iteration, t = 0..T.
struct RunTrace {
    std::vector<TraceRecord> records;
};

struct LearnerResult {
    Eigen::VectorXd theta_hat;
    RunTrace trace;
};

/// Which value of the frozen target enters the dual problem.
enum class TargetValue {
    Policy,  ///< V(s) = sum_a pi(a|s) Clip(phi^T theta_hat)
    Greedy,  ///< V*(s) = max_a Clip(phi^T theta_hat)
};

struct LearnerProblem {
    const Mdp& mdp;
    const Policy& policy;
    const FeatureMap& phi;
    const FeatureMap& psi;
    const UncertaintySet& uncertainty;
};

/// Per-step snapshot handed to observers; references are valid for the call only.
struct StepInfo {
    std::size_t t;
    std::size_t k;
    const Transition& transition;
    const Eigen::VectorXd& nu;
    const Eigen::VectorXd& theta;
    double lambda;
    double lambda_bar;
    double sigma;
    double td;
};

struct NoObserver {
    void operator()(const StepInfo&) const noexcept {}
};

/// Transitions drawn on-line from the nominal kernel.
class SampledTransitions {
public:
    SampledTransitions(const Mdp& mdp, const Policy& pi, TrajectoryCursor cursor)
        : mdp_(mdp), pi_(pi), cursor_(std::move(cursor)) {}

    Transition next() { return sample_step(mdp_, pi_, cursor_); }
    const TrajectoryCursor& cursor() const { return cursor_; }

private:
    const Mdp& mdp_;
    const Policy& pi_;
    TrajectoryCursor cursor_;
};

/// Replays a recorded stream; throws once it is exhausted.
class ReplayTransitions {
public:
    explicit ReplayTransitions(std::span<const Transition> stream) : stream_(stream) {}

    Transition next() {
        if (pos_ >= stream_.size())
            throw Error(ErrorCode::InvalidConfig, "replay stream exhausted");
        return stream_[pos_++];
    }

private:
    std::span<const Transition> stream_;
    std::size_t pos_ = 0;
};

/// Wraps a source and keeps a copy of everything it emits.
template <class Source>
class RecordingTransitions {
public:
    explicit RecordingTransitions(Source source) : source_(std::move(source)) {}

    Transition next() {
        recorded_.push_back(source_.next());
        return recorded_.back();
    }
    const std::vector<Transition>& recorded() const { return recorded_; }

private:
    Source source_;
    std::vector<Transition> recorded_;
};

/// Zero-radius reference: the plain expected next value, no dual variable.
struct NominalSet {};

namespace detail {

template <class Set>
struct DualEstimator;

template <>
struct DualEstimator<NominalSet> {
    const NominalSet& set;
    double bound;

    double to_domain(double lambda) const { return lambda; }
    double grad(double, std::size_t, const DualEvalContext&) const { return 0.0; }
    double objective(double, std::size_t next_state, const DualEvalContext& ctx) const {
        return ctx.v[next_state];
    }
};

/// TV duals live in [-1/(1-gamma), 1/(1-gamma)].
template <>
struct DualEstimator<TotalVariation> {
    const TotalVariation& set;
    double bound;

    double to_domain(double lambda) const { return std::min(std::max(lambda, -bound), bound); }
    double grad(double lambda, std::size_t next_state, const DualEvalContext& ctx) const {
        return tv_grad_estimate(lambda, ctx.v[next_state], set.delta);
    }
    double objective(double lambda, std::size_t next_state, const DualEvalContext& ctx) const {
        return tv_obj_estimate(lambda, ctx.v[next_state], set.delta, ctx.min_v);
    }
};

/// Wasserstein duals live in [0, inf).
template <>
struct DualEstimator<Wasserstein> {
    const Wasserstein& set;
    double bound;

    double to_domain(double lambda) const { return std::max(lambda, 0.0); }
    double grad(double lambda, std::size_t next_state, const DualEvalContext& ctx) const {
        return w_grad_estimate(lambda, next_state, ctx, set);
    }
    double objective(double lambda, std::size_t next_state, const DualEvalContext& ctx) const {
        return w_obj_estimate(lambda, next_state, ctx, set);
    }
};

inline double sup_error(const FeatureMap& phi, const Eigen::VectorXd& theta,
                        std::span<const double> q) {
    const Eigen::VectorXd approx = phi.matrix() * theta;
    double m = 0.0;
    for (Eigen::Index i = 0; i < approx.size(); ++i)
        m = std::max(m, std::abs(approx(i) - q[static_cast<std::size_t>(i)]));
    return m;
}

template <class Set, class Source, class Observer>
LearnerResult run_outer_loop(TargetValue target, const LearnerProblem& prob,
                             const LearnerConfig& cfg, double b_nu, const Set& set, Source& source,
                             std::optional<std::span<const double>> oracle_q, Observer& observe) {
    using Clock = std::chrono::steady_clock;
    const Mdp& mdp = prob.mdp;
    const DualEstimator<Set> dual{set, mdp.value_bound()};
    const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(prob.phi.dim());
    const Eigen::VectorXd nu0 = Eigen::VectorXd::Zero(prob.psi.dim());

    auto make_record = [&](std::size_t t, const Eigen::VectorXd& theta_hat, double mean_td,
                           double wall_ms) {
        TraceRecord rec;
        rec.t = t;
        rec.theta_hat = theta_hat;
        rec.theta_norm = theta_hat.norm();
        rec.mean_td = mean_td;
        rec.wall_ms = wall_ms;
        if (oracle_q)
            rec.sup_err = sup_error(prob.phi, theta_hat, *oracle_q);
        return rec;
    };

    LearnerResult result;
    result.theta_hat = theta0;
    result.trace.records.reserve(cfg.t_outer + 1);
    result.trace.records.push_back(make_record(0, theta0, std::numeric_limits<double>::quiet_NaN(), 0.0));

    Eigen::VectorXd theta = theta0;
    Eigen::VectorXd nu = nu0;
    SuffixAverager averager(nu0);
    Eigen::VectorXd nu_bar(nu0.size());

    for (std::size_t t = 0; t < cfg.t_outer; ++t) {
        const auto start = Clock::now();
        const std::vector<double> v = target == TargetValue::Policy
                                          ? v_from_theta(mdp, prob.policy, prob.phi, result.theta_hat)
                                          : v_star_from_theta(mdp, prob.phi, result.theta_hat);
        const auto [vmin, vmax] = std::minmax_element(v.begin(), v.end());
        double td_sum = 0.0;

        for (std::size_t k = 0; k < cfg.k_inner; ++k) {
            const Transition tr = source.next();
            const std::size_t pair = mdp.pair(tr.state, tr.action);
            const DualEvalContext ctx(v, mdp.row(pair), *vmin, *vmax);
            const auto psi_row = prob.psi.row(pair);
            const auto phi_row = prob.phi.row(pair);

            // fast scale: projected supergradient ascent on the dual
            const double lambda = dual.to_domain(psi_row.dot(nu));
            const double g = dual.grad(lambda, tr.next_state, ctx);
            nu_bar = averager.average();
            averager.push(nu);
            nu = project_ball(nu + (beta(k, cfg) * g) * psi_row.transpose(), b_nu);

            // slow scale: TD step against the averaged dual
            const double lambda_bar = dual.to_domain(psi_row.dot(nu_bar));
            const double sigma = dual.objective(lambda_bar, tr.next_state, ctx);
            const double td = mdp.r[pair] + mdp.gamma * sigma - phi_row.dot(theta);
            theta += (alpha(k, cfg) * td) * phi_row.transpose();
            td_sum += td;

            observe(StepInfo{t, k, tr, nu, theta, lambda, lambda_bar, sigma, td});
        }

        result.theta_hat = theta;
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        result.trace.records.push_back(
            make_record(t + 1, theta, td_sum / static_cast<double>(cfg.k_inner), ms));
        if (cfg.warm_start) {
            averager.reset(nu);
        } else {
            theta = theta0;
            nu = nu0;
            averager.reset(nu0);
        }
    }
    return result;
}

} // namespace detail

/**
@brief Dual-ball radius for a run: the configured value, or the default
1 / ((1 - gamma) sqrt(mu_psi)) with mu_psi the floor of Psi^T D Psi.
*/
inline double resolve_b_nu(const LearnerProblem& prob, const LearnerConfig& cfg,
                           std::span<const double> d_pi) {
    if (cfg.b_nu)
        return *cfg.b_nu;
    const double mu_psi = min_eigenvalue(prob.psi, d_pi);
    if (!(mu_psi > kSingularEigenvalue))
        throw Error(ErrorCode::SingularCovariance,
                    "dual features are degenerate under d_pi; set b_nu explicitly");
    return prob.mdp.value_bound() / std::sqrt(mu_psi);
}

/// Shape and assumption checks shared by both algorithms. Returns d_pi.
inline std::vector<double> check_learner_problem(const LearnerProblem& prob, const LearnerConfig& cfg) {
    cfg.validate();
    require_valid(prob.mdp);
    require_positive_radius(prob.uncertainty);
    const Mdp& mdp = prob.mdp;
    if (static_cast<std::size_t>(prob.phi.rows()) != mdp.n_pairs() ||
        static_cast<std::size_t>(prob.psi.rows()) != mdp.n_pairs())
        throw Error(ErrorCode::DimensionMismatch, "feature rows must match |S||A|");
    if (cfg.initial_state >= mdp.n_states)
        throw Error(ErrorCode::DimensionMismatch, "initial state out of range");
    if (const auto* w = std::get_if<Wasserstein>(&prob.uncertainty); w && w->n_states != mdp.n_states)
        throw Error(ErrorCode::DimensionMismatch, "distance matrix does not match the state count");
    try {
        return stationary_distribution(mdp, prob.policy).d;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotIrreducible || e.code() == ErrorCode::Periodic)
            throw Error(ErrorCode::MixingAssumptionViolated, e.what());
        throw;
    }
}

/**
@brief Two-time-scale robust learner with a frozen target, driven by any
transition source (`Transition next()`).

Each outer iteration freezes theta_hat, runs K inner steps of projected dual
ascent (fast) and TD (slow) with the half-tail dual average, then promotes
the inner iterate to the new target. Inner iterates restart from zero unless
warm_start is set.
*/
template <class Source, class Observer = NoObserver>
LearnerResult run_robust_learner(TargetValue target, const LearnerProblem& prob,
                                 const LearnerConfig& cfg, double b_nu, Source& source,
                                 std::optional<std::span<const double>> oracle_q = std::nullopt,
                                 Observer observe = {}) {
    if (oracle_q && oracle_q->size() != prob.mdp.n_pairs())
        throw Error(ErrorCode::DimensionMismatch, "oracle Q has the wrong length");
    return std::visit(
        [&](const auto& set) {
            return detail::run_outer_loop(target, prob, cfg, b_nu, set, source, oracle_q, observe);
        },
        prob.uncertainty);
}

/// Robust TD evaluation of `policy`.
template <class Observer = NoObserver>
LearnerResult robust_td(const Mdp& mdp, const Policy& policy, const FeatureMap& phi,
                        const FeatureMap& psi, const UncertaintySet& u, const LearnerConfig& cfg,
                        std::optional<std::span<const double>> oracle_q = std::nullopt,
                        Observer observe = {}) {
    const LearnerProblem prob{mdp, policy, phi, psi, u};
    const std::vector<double> d_pi = check_learner_problem(prob, cfg);
    const double b_nu = resolve_b_nu(prob, cfg, d_pi);
    SampledTransitions source(mdp, policy, TrajectoryCursor(cfg.initial_state, cfg.seed));
    return run_robust_learner(TargetValue::Policy, prob, cfg, b_nu, source, oracle_q, observe);
}

/// Non-robust target-network TD, the zero-radius reference for robust_td.
template <class Observer = NoObserver>
LearnerResult nominal_td(const Mdp& mdp, const Policy& policy, const FeatureMap& phi,
                         const LearnerConfig& cfg,
                         std::optional<std::span<const double>> oracle_q = std::nullopt,
                         Observer observe = {}) {
    const UncertaintySet placeholder = TotalVariation{1.0};
    const LearnerProblem prob{mdp, policy, phi, phi, placeholder};
    check_learner_problem(prob, cfg);
    if (oracle_q && oracle_q->size() != mdp.n_pairs())
        throw Error(ErrorCode::DimensionMismatch, "oracle Q has the wrong length");
    SampledTransitions source(mdp, policy, TrajectoryCursor(cfg.initial_state, cfg.seed));
    const NominalSet nominal;
    return detail::run_outer_loop(TargetValue::Policy, prob, cfg, 1.0, nominal, source, oracle_q,
                                  observe);
}

/// Robust Q-learning from a behavior policy; the target uses max over actions.
template <class Observer = NoObserver>
LearnerResult robust_q(const Mdp& mdp, const Policy& behavior, const FeatureMap& phi,
                       const FeatureMap& psi, const UncertaintySet& u, const LearnerConfig& cfg,
                       std::optional<std::span<const double>> oracle_q = std::nullopt,
                       Observer observe = {}) {
    const LearnerProblem prob{mdp, behavior, phi, psi, u};
    const std::vector<double> d_pi = check_learner_problem(prob, cfg);
    const double b_nu = resolve_b_nu(prob, cfg, d_pi);
    SampledTransitions source(mdp, behavior, TrajectoryCursor(cfg.initial_state, cfg.seed));
    return run_robust_learner(TargetValue::Greedy, prob, cfg, b_nu, source, oracle_q, observe);
}

} // namespace rtdlab
