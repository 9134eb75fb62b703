#pragma once

#include "rtdlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rtdlab {

// ---------------------------------------------------------------------------
// Uncertainty sets
// ---------------------------------------------------------------------------

/// Total-variation ball {q : 0.5 * ||q - p0||_1 <= delta}.
struct TotalVariation {
    double delta = 0.0;
};

/**
@brief Wasserstein-ell ball {q : W_ell(p0, q) <= delta}.

`cost` caches dist(x, y)^ell row-major and `budget` caches delta^ell.
*/
struct Wasserstein {
    double delta = 0.0;
    double ell = 1.0;
    std::size_t n_states = 0;
    std::vector<double> dist;
    std::vector<double> cost;
    double budget = 0.0;

    double distance(std::size_t x, std::size_t y) const { return dist[x * n_states + y]; }
    double transport_cost(std::size_t x, std::size_t y) const { return cost[x * n_states + y]; }
};

using UncertaintySet = std::variant<TotalVariation, Wasserstein>;

/// delta = 0 is accepted here so the exact oracles can serve as a nominal
/// reference; learners reject it separately (see require_positive_radius).
inline TotalVariation make_tv(double delta) {
    if (!(delta >= 0.0 && delta <= 1.0))
        throw Error(ErrorCode::InvalidUncertainty,
                    "TV radius must lie in [0,1], got " + std::to_string(delta));
    return {delta};
}

inline Wasserstein make_wasserstein(double delta, double ell, std::size_t n_states,
                                    std::vector<double> dist) {
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw Error(ErrorCode::InvalidUncertainty, "Wasserstein radius must be nonnegative");
    if (!(ell >= 1.0) || !std::isfinite(ell))
        throw Error(ErrorCode::InvalidUncertainty, "Wasserstein exponent must be >= 1");
    if (dist.size() != n_states * n_states)
        throw Error(ErrorCode::DimensionMismatch, "distance matrix must be n_states x n_states");
    for (std::size_t x = 0; x < n_states; ++x) {
        if (dist[x * n_states + x] != 0.0)
            throw Error(ErrorCode::InvalidUncertainty, "distance matrix needs a zero diagonal");
        for (std::size_t y = 0; y < n_states; ++y) {
            const double d = dist[x * n_states + y];
            if (!(d >= 0.0 && d <= 1.0))
                throw Error(ErrorCode::InvalidUncertainty, "distances must lie in [0,1]");
            if (d != dist[y * n_states + x])
                throw Error(ErrorCode::InvalidUncertainty, "distance matrix must be symmetric");
        }
    }
    Wasserstein w{delta, ell, n_states, std::move(dist), {}, std::pow(delta, ell)};
    w.cost.resize(w.dist.size());
    for (std::size_t i = 0; i < w.dist.size(); ++i)
        w.cost[i] = std::pow(w.dist[i], ell);
    return w;
}

/// Normalized line metric |x - y| / (n - 1).
inline std::vector<double> line_metric(std::size_t n_states) {
    std::vector<double> dist(n_states * n_states, 0.0);
    if (n_states < 2)
        return dist;
    const double scale = 1.0 / static_cast<double>(n_states - 1);
    for (std::size_t x = 0; x < n_states; ++x)
        for (std::size_t y = 0; y < n_states; ++y)
            dist[x * n_states + y] =
                static_cast<double>(x > y ? x - y : y - x) * scale;
    return dist;
}

inline double radius(const UncertaintySet& u) {
    return std::visit([](const auto& set) { return set.delta; }, u);
}

inline void require_positive_radius(const UncertaintySet& u) {
    if (!(radius(u) > 0.0))
        throw Error(ErrorCode::InvalidUncertainty, "learners require a positive radius");
}

// ---------------------------------------------------------------------------
// Evaluation context
// ---------------------------------------------------------------------------

/// Value vector and nominal row for one (s,a), with min/span cached.
/// Non-owning: the spans must outlive the context.
struct DualEvalContext {
    std::span<const double> v;
    std::span<const double> p0_row;
    double min_v = 0.0;
    double max_v = 0.0;
    double span_v = 0.0;

    DualEvalContext(std::span<const double> values, std::span<const double> row)
        : v(values), p0_row(row) {
        if (values.empty() || values.size() != row.size())
            throw Error(ErrorCode::DimensionMismatch, "value vector and kernel row differ in size");
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        min_v = *lo;
        max_v = *hi;
        span_v = max_v - min_v;
    }

    /// Precomputed extrema, for callers that scan v once and reuse it.
    DualEvalContext(std::span<const double> values, std::span<const double> row, double lo,
                    double hi)
        : v(values), p0_row(row), min_v(lo), max_v(hi), span_v(hi - lo) {}

    double nominal_mean() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            acc += p0_row[i] * v[i];
        return acc;
    }
};

struct DualSolution {
    double sigma = 0.0;
    double lambda = 0.0;
};

// ---------------------------------------------------------------------------
// Total variation
// ---------------------------------------------------------------------------

/// F(lambda) = E[min(V, lambda)] - delta * (lambda - min V).
inline double tv_dual_objective(double lambda, const DualEvalContext& ctx, double delta) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ctx.v.size(); ++i)
        acc += ctx.p0_row[i] * std::min(ctx.v[i], lambda);
    return acc - delta * (lambda - ctx.min_v);
}

/// G(lambda) = P[V(X) >= lambda] - delta.
inline double tv_supergradient(double lambda, const DualEvalContext& ctx, double delta) {
    double mass = 0.0;
    for (std::size_t i = 0; i < ctx.v.size(); ++i)
        if (ctx.v[i] >= lambda)
            mass += ctx.p0_row[i];
    return mass - delta;
}

inline double tv_grad_estimate(double lambda, double next_state_value, double delta) {
    return (next_state_value >= lambda ? 1.0 : 0.0) - delta;
}

inline double tv_obj_estimate(double lambda, double next_state_value, double delta, double min_v) {
    return std::min(next_state_value, lambda) - delta * (lambda - min_v);
}

/**
@brief Exact worst-case expectation over the TV ball.

The dual objective is concave and piecewise linear with kinks only at the
values of V, so the maximum is attained at one of them. Ties resolve to the
smallest lambda.
*/
inline DualSolution tv_exact_sigma(const DualEvalContext& ctx, double delta) {
    std::vector<double> candidates(ctx.v.begin(), ctx.v.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    DualSolution best{tv_dual_objective(candidates.front(), ctx, delta), candidates.front()};
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double f = tv_dual_objective(candidates[i], ctx, delta);
        if (f > best.sigma)
            best = {f, candidates[i]};
    }
    return best;
}

// ---------------------------------------------------------------------------
// Wasserstein-ell
// ---------------------------------------------------------------------------

struct InnerArgmin {
    std::size_t y_star = 0;
    double value = 0.0;
};

/// argmin_y V(y) + lambda * d(x,y)^ell, smallest index on ties.
inline InnerArgmin w_inner_argmin(double lambda, std::size_t from_state, const DualEvalContext& ctx,
                                  const Wasserstein& u) {
    InnerArgmin best{0, ctx.v[0] + lambda * u.transport_cost(from_state, 0)};
    for (std::size_t y = 1; y < ctx.v.size(); ++y) {
        const double val = ctx.v[y] + lambda * u.transport_cost(from_state, y);
        if (val < best.value)
            best = {y, val};
    }
    return best;
}

namespace detail {
inline void require_nonnegative(double lambda) {
    if (!(lambda >= 0.0))
        throw Error(ErrorCode::NegativeLambda,
                    "Wasserstein dual variable must be >= 0, got " + std::to_string(lambda));
}
} // namespace detail

/// F(lambda) = -lambda * delta^ell + E_{X~p0}[min_y V(y) + lambda * d(X,y)^ell].
inline double w_dual_objective(double lambda, const DualEvalContext& ctx, const Wasserstein& u) {
    detail::require_nonnegative(lambda);
    double acc = 0.0;
    for (std::size_t x = 0; x < ctx.v.size(); ++x)
        if (ctx.p0_row[x] > 0.0)
            acc += ctx.p0_row[x] * w_inner_argmin(lambda, x, ctx, u).value;
    return acc - lambda * u.budget;
}

inline double w_supergradient(double lambda, const DualEvalContext& ctx, const Wasserstein& u) {
    detail::require_nonnegative(lambda);
    double acc = 0.0;
    for (std::size_t x = 0; x < ctx.v.size(); ++x)
        if (ctx.p0_row[x] > 0.0)
            acc += ctx.p0_row[x] * u.transport_cost(x, w_inner_argmin(lambda, x, ctx, u).y_star);
    return acc - u.budget;
}

inline double w_grad_estimate(double lambda, std::size_t next_state, const DualEvalContext& ctx,
                              const Wasserstein& u) {
    detail::require_nonnegative(lambda);
    const auto inner = w_inner_argmin(lambda, next_state, ctx, u);
    return u.transport_cost(next_state, inner.y_star) - u.budget;
}

inline double w_obj_estimate(double lambda, std::size_t next_state, const DualEvalContext& ctx,
                             const Wasserstein& u) {
    detail::require_nonnegative(lambda);
    const auto inner = w_inner_argmin(lambda, next_state, ctx, u);
    return -lambda * u.budget + ctx.v[inner.y_star] +
           lambda * u.transport_cost(next_state, inner.y_star);
}

/**
@brief Exact worst-case expectation over the Wasserstein-ell ball.

The optimal lambda lies in [0, span(V) / delta^ell]. Each inner minimum is a
lower envelope of lines in lambda, so the dual objective can only kink where
two lines (v(y), d(x,y)^ell) and (v(y'), d(x,y')^ell) cross. All crossings
inside the interval, plus both endpoints, are evaluated. O(|S|^3).
*/
inline DualSolution w_exact_sigma(const DualEvalContext& ctx, const Wasserstein& u) {
    if (u.budget <= 0.0)
        return {ctx.nominal_mean(), 0.0};
    const double lambda_max = ctx.span_v / u.budget;
    const std::size_t n = ctx.v.size();
    std::vector<double> candidates{0.0, lambda_max};
    for (std::size_t x = 0; x < n; ++x) {
        if (ctx.p0_row[x] <= 0.0)
            continue;
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t y2 = 0; y2 < n; ++y2) {
                const double denom = u.transport_cost(x, y2) - u.transport_cost(x, y);
                if (denom <= 0.0)
                    continue;
                const double lam = (ctx.v[y] - ctx.v[y2]) / denom;
                if (lam > 0.0 && lam < lambda_max)
                    candidates.push_back(lam);
            }
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<double> unique;
    unique.reserve(candidates.size());
    for (double c : candidates)
        if (unique.empty() || c - unique.back() > 1e-13 * std::max(1.0, std::abs(c)))
            unique.push_back(c);

    DualSolution best{w_dual_objective(unique.front(), ctx, u), unique.front()};
    for (std::size_t i = 1; i < unique.size(); ++i) {
        const double f = w_dual_objective(unique[i], ctx, u);
        if (f > best.sigma)
            best = {f, unique[i]};
    }
    return best;
}

/// Exact inner problem for either set type.
inline DualSolution exact_sigma(const DualEvalContext& ctx, const UncertaintySet& u) {
    return std::visit(
        [&](const auto& set) -> DualSolution {
            using Set = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<Set, TotalVariation>)
                return tv_exact_sigma(ctx, set.delta);
            else
                return w_exact_sigma(ctx, set);
        },
        u);
}

} // namespace rtdlab
