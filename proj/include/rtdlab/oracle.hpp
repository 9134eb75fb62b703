#pragma once

#include "rtdlab/error.hpp"
#include "rtdlab/linear_fa.hpp"
#include "rtdlab/mdp.hpp"
#include "rtdlab/uncertainty.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace rtdlab {

inline constexpr double kDefaultOracleTol = 1e-10;

struct OracleSolution {
    std::vector<double> q; ///< per pair, s * n_actions + a
    std::size_t iterations = 0;
    double residual = 0.0;
    std::optional<std::vector<std::size_t>> greedy_policy;
};

namespace detail {

inline void check_set_shape(const Mdp& mdp, const UncertaintySet& u) {
    if (const auto* w = std::get_if<Wasserstein>(&u); w && w->n_states != mdp.n_states)
        throw Error(ErrorCode::DimensionMismatch, "distance matrix does not match the state count");
}

/// r + gamma * sigma_{P(s,a)}(V) for every pair.
inline std::vector<double> robust_backup(const std::vector<double>& v, const Mdp& mdp,
                                         const UncertaintySet& u) {
    check_set_shape(mdp, u);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    std::vector<double> out(mdp.n_pairs());
    for (std::size_t i = 0; i < mdp.n_pairs(); ++i) {
        const DualEvalContext ctx(v, mdp.row(i), *lo, *hi);
        out[i] = mdp.r[i] + mdp.gamma * exact_sigma(ctx, u).sigma;
    }
    return out;
}

inline std::vector<double> policy_values(const std::vector<double>& q, const Mdp& mdp,
                                         const Policy& pi) {
    std::vector<double> v(mdp.n_states, 0.0);
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        for (std::size_t a = 0; a < mdp.n_actions; ++a)
            v[s] += pi.prob(s, a) * q[mdp.pair(s, a)];
    return v;
}

inline std::vector<double> greedy_values(const std::vector<double>& q, const Mdp& mdp) {
    std::vector<double> v(mdp.n_states);
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        v[s] = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(mdp.pair(s, 0)),
                                 q.begin() + static_cast<std::ptrdiff_t>(mdp.pair(s, 0) + mdp.n_actions));
    return v;
}

inline double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace detail

/// (T^pi Q)(s,a) = r(s,a) + gamma * sigma_{P(s,a)}(V), V(s') = sum_a' pi(a'|s') Q(s',a').
inline std::vector<double> robust_bellman_policy(const std::vector<double>& q, const Mdp& mdp,
                                                 const Policy& pi, const UncertaintySet& u) {
    if (q.size() != mdp.n_pairs())
        throw Error(ErrorCode::DimensionMismatch, "Q has the wrong length");
    return detail::robust_backup(detail::policy_values(q, mdp, pi), mdp, u);
}

/// (T* Q)(s,a) = r(s,a) + gamma * sigma_{P(s,a)}(max_a' Q(., a')).
inline std::vector<double> robust_bellman_optimal(const std::vector<double>& q, const Mdp& mdp,
                                                  const UncertaintySet& u) {
    if (q.size() != mdp.n_pairs())
        throw Error(ErrorCode::DimensionMismatch, "Q has the wrong length");
    return detail::robust_backup(detail::greedy_values(q, mdp), mdp, u);
}

/// Greedy actions of a Q table, smallest action index on ties.
inline std::vector<std::size_t> greedy_actions(std::span<const double> q, std::size_t n_states,
                                               std::size_t n_actions) {
    std::vector<std::size_t> g(n_states, 0);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 1; a < n_actions; ++a)
            if (q[s * n_actions + a] > q[s * n_actions + g[s]])
                g[s] = a;
    return g;
}

namespace detail {

/// Synchronous sweeps from Q = 0 until ||Q_{k+1} - Q_k|| <= tol (1 - gamma),
/// which puts Q_{k+1} within tol of the fixed point.
template <class Operator>
OracleSolution solve_fixed_point(const Mdp& mdp, double tol, Operator&& apply) {
    require_valid(mdp);
    if (!(tol > 0.0))
        throw Error(ErrorCode::InvalidConfig, "oracle tolerance must be positive");
    const double stop = tol * (1.0 - mdp.gamma);
    const auto cap = static_cast<std::size_t>(
                         std::ceil(std::log(stop) / std::log(mdp.gamma))) + 1000;
    OracleSolution sol;
    sol.q.assign(mdp.n_pairs(), 0.0);
    for (std::size_t it = 1; it <= cap; ++it) {
        std::vector<double> next = apply(sol.q);
        sol.residual = sup_distance(next, sol.q);
        sol.q = std::move(next);
        sol.iterations = it;
        if (sol.residual <= stop)
            return sol;
    }
    throw Error(ErrorCode::NonConvergence,
                "robust value iteration exceeded " + std::to_string(cap) + " sweeps");
}

} // namespace detail

inline OracleSolution solve_policy(const Mdp& mdp, const Policy& pi, const UncertaintySet& u,
                                   double tol = kDefaultOracleTol) {
    if (auto v = validate_policy(pi, mdp))
        v->raise();
    return detail::solve_fixed_point(
        mdp, tol, [&](const std::vector<double>& q) { return robust_bellman_policy(q, mdp, pi, u); });
}

inline OracleSolution solve_optimal(const Mdp& mdp, const UncertaintySet& u,
                                    double tol = kDefaultOracleTol) {
    OracleSolution sol = detail::solve_fixed_point(
        mdp, tol, [&](const std::vector<double>& q) { return robust_bellman_optimal(q, mdp, u); });
    sol.greedy_policy = greedy_actions(sol.q, mdp.n_states, mdp.n_actions);
    return sol;
}

/**
@brief Target of the inner loop for a frozen parameter theta_hat.

theta* = (Phi^T D Phi)^{-1} Phi^T D [r + gamma F*], where F*(s,a) is the exact
worst-case expectation of V_theta_hat under P0(.|s,a).
*/
inline Eigen::VectorXd theta_star(const Mdp& mdp, const Policy& pi, const FeatureMap& phi,
                                  std::span<const double> d_pi, const Eigen::VectorXd& theta_hat,
                                  const UncertaintySet& u) {
    const std::vector<double> v = v_from_theta(mdp, pi, phi, theta_hat);
    const std::vector<double> target = detail::robust_backup(v, mdp, u);
    return weighted_least_squares(phi, d_pi, as_vector(target));
}

} // namespace rtdlab
