// Robust TD on a random 5-state, 2-action MDP with a TV ball of radius 0.2,
// compared against the exact robust Q-function.

#include "rtdlab/learners.hpp"
#include "rtdlab/oracle.hpp"

#include <cstdio>

int main() {
    using namespace rtdlab;

    const Mdp mdp = random_mdp(5, 2, /*seed=*/0, /*gamma=*/0.9);
    const Policy pi = uniform_policy(mdp.n_states, mdp.n_actions);
    const UncertaintySet tv = make_tv(0.2);
    const FeatureMap phi = tabular_features(mdp.n_states, mdp.n_actions, FeatureKind::Primal);
    const FeatureMap psi = tabular_features(mdp.n_states, mdp.n_actions, FeatureKind::Dual);

    const OracleSolution oracle = solve_policy(mdp, pi, tv);

    LearnerConfig cfg;
    cfg.t_outer = 30;
    cfg.k_inner = 20000;
    cfg.seed = 1;
    const LearnerResult res = robust_td(mdp, pi, phi, psi, tv, cfg, std::span<const double>(oracle.q));

    for (const auto& rec : res.trace.records)
        if (rec.t % 5 == 0)
            std::printf("t=%2zu  sup_err=%.4f  |theta|=%.3f\n", rec.t, rec.sup_err, rec.theta_norm);

    std::printf("\n  s a   robust Q   estimate\n");
    for (std::size_t i = 0; i < mdp.n_pairs(); ++i)
        std::printf("  %zu %zu  %9.4f  %9.4f\n", i / mdp.n_actions, i % mdp.n_actions, oracle.q[i],
                    res.theta_hat(static_cast<Eigen::Index>(i)));
    return 0;
}
