#pragma once

#include "rtdlab/error.hpp"
#include "rtdlab/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rtdlab {

/// Tolerance on kernel and policy row sums.
inline constexpr double kRowSumTol = 1e-12;

/**
@brief Finite nominal MDP.

The kernel is stored row-major: the distribution over next states for the
pair (s, a) occupies p0[(s * n_actions + a) * n_states, ...). Rewards are
indexed by pair as r[s * n_actions + a].
*/
struct Mdp {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> p0;
    std::vector<double> r;
    double gamma = 0.9;

    std::size_t n_pairs() const { return n_states * n_actions; }
    std::size_t pair(std::size_t s, std::size_t a) const { return s * n_actions + a; }

    std::span<const double> row(std::size_t s, std::size_t a) const {
        return {p0.data() + pair(s, a) * n_states, n_states};
    }
    std::span<const double> row(std::size_t pair_index) const {
        return {p0.data() + pair_index * n_states, n_states};
    }
    double reward(std::size_t s, std::size_t a) const { return r[pair(s, a)]; }

    /// Largest attainable |value|, 1/(1-gamma).
    double value_bound() const { return 1.0 / (1.0 - gamma); }
};

inline std::optional<Violation> validate_mdp(const Mdp& mdp) {
    if (mdp.n_states == 0 || mdp.n_actions == 0)
        return Violation{ErrorCode::DimensionMismatch, 0, 0, "empty state or action space"};
    if (mdp.p0.size() != mdp.n_pairs() * mdp.n_states || mdp.r.size() != mdp.n_pairs())
        return Violation{ErrorCode::DimensionMismatch, 0, 0, "kernel or reward has the wrong size"};
    if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0))
        return Violation{ErrorCode::GammaOutOfRange, 0, 0,
                         "gamma must lie in (0,1), got " + std::to_string(mdp.gamma)};
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            const auto row = mdp.row(s, a);
            double sum = 0.0;
            bool negative = false;
            for (double p : row) {
                negative = negative || !(p >= 0.0);
                sum += p;
            }
            if (negative || !(std::abs(sum - 1.0) <= kRowSumTol))
                return Violation{ErrorCode::RowNotStochastic, s, a,
                                 "kernel row (" + std::to_string(s) + "," + std::to_string(a) +
                                     ") is not a distribution (sum " + std::to_string(sum) + ")"};
            const double rew = mdp.reward(s, a);
            if (!(rew >= 0.0 && rew <= 1.0))
                return Violation{ErrorCode::RewardOutOfRange, s, a,
                                 "reward at (" + std::to_string(s) + "," + std::to_string(a) +
                                     ") is " + std::to_string(rew)};
        }
    }
    return std::nullopt;
}

inline void require_valid(const Mdp& mdp) {
    if (auto v = validate_mdp(mdp))
        v->raise();
}

/// Stochastic policy, probs[s * n_actions + a] = pi(a|s).
struct Policy {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> probs;

    double prob(std::size_t s, std::size_t a) const { return probs[s * n_actions + a]; }
    std::span<const double> row(std::size_t s) const {
        return {probs.data() + s * n_actions, n_actions};
    }
};

inline Policy uniform_policy(std::size_t n_states, std::size_t n_actions) {
    return {n_states, n_actions,
            std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions))};
}

inline Policy deterministic_policy(std::size_t n_actions, std::span<const std::size_t> actions) {
    Policy pi{actions.size(), n_actions, std::vector<double>(actions.size() * n_actions, 0.0)};
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= n_actions)
            throw Error(ErrorCode::InvalidPolicy, "action index out of range");
        pi.probs[s * n_actions + actions[s]] = 1.0;
    }
    return pi;
}

inline std::optional<Violation> validate_policy(const Policy& pi, const Mdp& mdp) {
    if (pi.n_states != mdp.n_states || pi.n_actions != mdp.n_actions ||
        pi.probs.size() != mdp.n_pairs())
        return Violation{ErrorCode::DimensionMismatch, 0, 0, "policy shape does not match the MDP"};
    for (std::size_t s = 0; s < pi.n_states; ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < pi.n_actions; ++a) {
            const double p = pi.prob(s, a);
            if (!(p >= 0.0))
                return Violation{ErrorCode::InvalidPolicy, s, a, "negative action probability"};
            sum += p;
        }
        if (!(std::abs(sum - 1.0) <= kRowSumTol))
            return Violation{ErrorCode::InvalidPolicy, s, 0,
                             "policy row " + std::to_string(s) + " does not sum to one"};
    }
    return std::nullopt;
}

/// Kernel rows ~ Dirichlet(1), rewards ~ Uniform[0,1].
inline Mdp random_mdp(std::size_t n_states, std::size_t n_actions, std::uint64_t seed,
                      double gamma = 0.9) {
    if (n_states == 0 || n_actions == 0)
        throw Error(ErrorCode::DimensionMismatch, "random_mdp needs at least one state and action");
    Mdp mdp{n_states, n_actions, std::vector<double>(n_states * n_actions * n_states),
            std::vector<double>(n_states * n_actions), gamma};
    Rng kernel_rng(seed, Stream::MdpKernel);
    Rng reward_rng(seed, Stream::MdpReward);
    for (std::size_t i = 0; i < mdp.n_pairs(); ++i) {
        double* row = mdp.p0.data() + i * n_states;
        double sum = 0.0;
        for (std::size_t j = 0; j < n_states; ++j) {
            row[j] = kernel_rng.exponential();
            sum += row[j];
        }
        for (std::size_t j = 0; j < n_states; ++j)
            row[j] /= sum;
        mdp.r[i] = reward_rng.uniform();
    }
    return mdp;
}

// ---------------------------------------------------------------------------
// Chain structure on (s,a) pairs
// ---------------------------------------------------------------------------

/// Transition matrix of the pair chain (s,a) -> (s',a'), P0(s'|s,a) pi(a'|s').
inline Eigen::MatrixXd pair_chain_matrix(const Mdp& mdp, const Policy& pi) {
    const std::size_t n = mdp.n_pairs();
    Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = mdp.row(i);
        for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
            for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2)
                chain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(mdp.pair(s2, a2))) =
                    row[s2] * pi.prob(s2, a2);
    }
    return chain;
}

struct ChainStructure {
    std::size_t closed_classes = 0;
    std::size_t period = 0;            ///< period of the first closed class
    std::vector<bool> recurrent;       ///< pair belongs to a closed class
};

namespace detail {

template <class Visit>
void for_each_successor(const Mdp& mdp, const Policy& pi, std::size_t pair, Visit&& visit) {
    const auto row = mdp.row(pair);
    for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
        if (row[s2] <= 0.0)
            continue;
        for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2)
            if (pi.prob(s2, a2) > 0.0)
                visit(mdp.pair(s2, a2));
    }
}

} // namespace detail

/**
@brief Structural analysis of the support graph of the pair chain.

Strongly connected components are found with an iterative Tarjan pass; a
component is closed when no edge leaves it. The period of a closed class is
the gcd of level[u] + 1 - level[v] over its edges, with levels taken from a
BFS inside the class.
*/
inline ChainStructure analyze_chain(const Mdp& mdp, const Policy& pi) {
    const std::size_t n = mdp.n_pairs();
    constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> succ(n);
    for (std::size_t i = 0; i < n; ++i)
        detail::for_each_successor(mdp, pi, i, [&](std::size_t j) { succ[i].push_back(j); });

    std::size_t counter = 0, n_comp = 0;
    struct Frame {
        std::size_t node;
        std::size_t next_edge;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnvisited)
            continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.next_edge < succ[f.node].size()) {
                const std::size_t w = succ[f.node][f.next_edge++];
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.node] = std::min(low[f.node], index[w]);
                }
                continue;
            }
            const std::size_t v = f.node;
            frames.pop_back();
            if (!frames.empty())
                low[frames.back().node] = std::min(low[frames.back().node], low[v]);
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = n_comp;
                } while (w != v);
                ++n_comp;
            }
        }
    }

    std::vector<bool> closed(n_comp, true);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : succ[i])
            if (comp[j] != comp[i])
                closed[comp[i]] = false;

    ChainStructure out;
    out.recurrent.assign(n, false);
    std::optional<std::size_t> first_closed;
    for (std::size_t c = 0; c < n_comp; ++c)
        if (closed[c]) {
            ++out.closed_classes;
            if (!first_closed)
                first_closed = c;
        }
    for (std::size_t i = 0; i < n; ++i)
        out.recurrent[i] = closed[comp[i]];

    if (first_closed) {
        std::size_t root = 0;
        while (comp[root] != *first_closed)
            ++root;
        std::vector<std::size_t> level(n, kUnvisited);
        std::vector<std::size_t> queue{root};
        level[root] = 0;
        std::size_t g = 0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::size_t u = queue[head];
            for (std::size_t v : succ[u]) {
                if (level[v] == kUnvisited) {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                } else {
                    const auto diff = static_cast<long long>(level[u] + 1) -
                                      static_cast<long long>(level[v]);
                    g = std::gcd(g, static_cast<std::size_t>(std::llabs(diff)));
                }
            }
        }
        out.period = g;
    }
    return out;
}

struct StationaryDistribution {
    std::vector<double> d; ///< indexed by pair s * n_actions + a
    bool mixing_ok = false;
};

enum class MixingCheck { Require, Report };

/// Above this many pairs the dense solve is replaced by power iteration.
inline constexpr std::size_t kDenseStationaryLimit = 2000;

/**
@brief Stationary distribution of the (s,a) pair chain under pi.

Throws NotIrreducible when the chain has more than one closed class. With
MixingCheck::Require a periodic closed class throws Periodic; with
MixingCheck::Report the distribution is still returned and mixing_ok is false.
*/
inline StationaryDistribution stationary_distribution(const Mdp& mdp, const Policy& pi,
                                                      MixingCheck check = MixingCheck::Require) {
    require_valid(mdp);
    if (auto v = validate_policy(pi, mdp))
        v->raise();
    const ChainStructure structure = analyze_chain(mdp, pi);
    if (structure.closed_classes != 1)
        throw Error(ErrorCode::NotIrreducible,
                    "pair chain has " + std::to_string(structure.closed_classes) + " closed classes");
    const bool aperiodic = structure.period == 1;
    if (!aperiodic && check == MixingCheck::Require)
        throw Error(ErrorCode::Periodic,
                    "pair chain has period " + std::to_string(structure.period));

    const std::size_t n = mdp.n_pairs();
    StationaryDistribution out;
    out.mixing_ok = aperiodic;
    if (n <= kDenseStationaryLimit) {
        // Stack (I - P^T) d = 0 on top of 1^T d = 1 and solve in the least
        // squares sense; the stacked system has full column rank when the
        // closed class is unique.
        const auto ni = static_cast<Eigen::Index>(n);
        const Eigen::MatrixXd chain = pair_chain_matrix(mdp, pi);
        Eigen::MatrixXd system(ni + 1, ni);
        system.topRows(ni) = Eigen::MatrixXd::Identity(ni, ni) - chain.transpose();
        system.row(ni).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni + 1);
        rhs(ni) = 1.0;
        const Eigen::VectorXd d = system.colPivHouseholderQr().solve(rhs);
        out.d.assign(d.data(), d.data() + n);
    } else {
        if (!aperiodic)
            throw Error(ErrorCode::Periodic, "power iteration requires an aperiodic chain");
        std::vector<double> d(n, 1.0 / static_cast<double>(n)), next(n);
        std::vector<double> state_mass(mdp.n_states);
        constexpr std::size_t kMaxIter = 1'000'000;
        std::size_t it = 0;
        for (; it < kMaxIter; ++it) {
            std::fill(state_mass.begin(), state_mass.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = mdp.row(i);
                for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
                    state_mass[s2] += d[i] * row[s2];
            }
            double diff = 0.0;
            for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
                for (std::size_t a2 = 0; a2 < mdp.n_actions; ++a2) {
                    const std::size_t j = mdp.pair(s2, a2);
                    next[j] = state_mass[s2] * pi.prob(s2, a2);
                    diff = std::max(diff, std::abs(next[j] - d[j]));
                }
            d.swap(next);
            if (diff <= 1e-12)
                break;
        }
        if (it == kMaxIter)
            throw Error(ErrorCode::NonConvergence, "power iteration did not converge");
        out.d = std::move(d);
    }
    // Transient pairs carry no mass; clear solver round-off and renormalize.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!structure.recurrent[i] || out.d[i] < 0.0)
            out.d[i] = 0.0;
        total += out.d[i];
    }
    for (double& x : out.d)
        x /= total;
    return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct Transition {
    std::size_t state;
    std::size_t action;
    std::size_t next_state;

    bool operator==(const Transition&) const = default;
};

class TrajectoryCursor;
inline Transition sample_step(const Mdp& mdp, const Policy& pi, TrajectoryCursor& cursor);

/// Position on a single sampled trajectory. Single owner; not thread-safe.
class TrajectoryCursor {
public:
    TrajectoryCursor(std::size_t initial_state, std::uint64_t seed)
        : state_(initial_state), rng_(seed, Stream::Trajectory) {}

    std::size_t current_state() const { return state_; }

private:
    friend Transition sample_step(const Mdp&, const Policy&, TrajectoryCursor&);
    std::size_t state_;
    Rng rng_;
};

/// Draws A ~ pi(.|S), S' ~ P0(.|S,A) and advances the cursor to S'.
inline Transition sample_step(const Mdp& mdp, const Policy& pi, TrajectoryCursor& cursor) {
    const std::size_t s = cursor.state_;
    const std::size_t a = cursor.rng_.categorical(pi.row(s));
    const std::size_t s2 = cursor.rng_.categorical(mdp.row(s, a));
    cursor.state_ = s2;
    return {s, a, s2};
}

} // namespace rtdlab
