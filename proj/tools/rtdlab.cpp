// rtdlab command line: run, oracle, rate-study, gen-mdp.

#include "rtdlab/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace rtdlab;
using namespace rtdlab::harness;

// Flag values as given on the command line; unset ones leave the config alone.
struct Flags {
    std::string config;
    std::string algo;
    std::string mdp, policy, uncertainty, features, dual_features, out;
    std::optional<double> gamma, beta0, c, omega, b_nu, tol;
    std::optional<std::size_t> t_outer, k_inner, initial_state;
    std::optional<std::uint64_t> seed;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> k_grid;
    bool warm_start = false;
    bool record_time = false;
    bool no_oracle = false;
};

void add_flags(CLI::App* cmd, Flags& f, bool learner_flags) {
    cmd->add_option("--config", f.config, "TOML experiment file");
    cmd->add_option("--algo", f.algo, "td or q")->check(CLI::IsMember({"td", "q"}));
    cmd->add_option("--mdp", f.mdp, "random:<S>x<A>:<seed> or an MDP JSON file");
    cmd->add_option("--gamma", f.gamma, "discount for random MDPs");
    cmd->add_option("--policy", f.policy, "uniform, deterministic:<a0>,<a1>,... or a policy JSON file");
    cmd->add_option("--uncertainty", f.uncertainty, "tv:<delta>, w:<delta>:<ell>[:<distfile>] or nominal");
    cmd->add_option("--tol", f.tol, "oracle tolerance");
    cmd->add_option("--out", f.out, "output directory");
    if (!learner_flags)
        return;
    cmd->add_option("--features", f.features, "tabular, random:<d>:<seed> or a feature JSON file");
    cmd->add_option("--dual-features", f.dual_features, "feature spec for the dual parameter");
    cmd->add_option("--T", f.t_outer, "outer iterations");
    cmd->add_option("--K", f.k_inner, "inner steps per outer iteration");
    cmd->add_option("--beta0", f.beta0, "fast step scale");
    cmd->add_option("--c", f.c, "slow step scale");
    cmd->add_option("--omega", f.omega, "slow step exponent");
    cmd->add_option("--b-nu", f.b_nu, "dual ball radius");
    cmd->add_option("--seed", f.seed, "learner seed");
    cmd->add_option("--seeds", f.seeds, "learner seeds")->delimiter(',');
    cmd->add_option("--K-grid", f.k_grid, "K values for rate-study")->delimiter(',');
    cmd->add_option("--initial-state", f.initial_state, "trajectory start state");
    cmd->add_flag("--warm-start", f.warm_start, "carry inner iterates across outer iterations");
    cmd->add_flag("--record-time", f.record_time, "write wall-clock times into trace.csv");
    cmd->add_flag("--no-oracle", f.no_oracle, "skip the oracle (no sup_err column values)");
}

ExperimentConfig build_config(const Flags& f) {
    ExperimentConfig cfg;
    if (!f.config.empty())
        cfg = load_config_file(f.config);
    if (!f.algo.empty())
        cfg.algo = f.algo == "q" ? Algo::Q : Algo::Td;
    if (!f.mdp.empty()) {
        cfg.mdp = f.mdp;
        cfg.inline_mdp.reset();
    }
    if (f.gamma)
        cfg.gamma = *f.gamma;
    if (!f.policy.empty())
        cfg.policy = f.policy;
    if (!f.uncertainty.empty())
        cfg.uncertainty = f.uncertainty;
    if (!f.features.empty())
        cfg.features = f.features;
    if (!f.dual_features.empty())
        cfg.dual_features = f.dual_features;
    if (!f.out.empty())
        cfg.out = f.out;
    if (f.tol)
        cfg.oracle_tol = *f.tol;
    LearnerConfig& lc = cfg.learner;
    if (f.t_outer)
        lc.t_outer = *f.t_outer;
    if (f.k_inner)
        lc.k_inner = *f.k_inner;
    if (f.beta0)
        lc.beta0 = *f.beta0;
    if (f.c)
        lc.c = *f.c;
    if (f.omega)
        lc.omega = *f.omega;
    if (f.b_nu)
        lc.b_nu = *f.b_nu;
    if (f.seed)
        lc.seed = *f.seed;
    if (f.initial_state)
        lc.initial_state = *f.initial_state;
    if (f.warm_start)
        lc.warm_start = true;
    if (!f.seeds.empty())
        cfg.seeds = f.seeds;
    if (!f.k_grid.empty())
        cfg.k_grid = f.k_grid;
    if (f.record_time)
        cfg.record_time = true;
    if (f.no_oracle)
        cfg.with_oracle = false;
    return cfg;
}

int cmd_run(const ExperimentConfig& cfg) {
    for (const auto& run : run_experiment(cfg)) {
        const auto& last = run.result.trace.records.back();
        std::cout << run.dir.string() << "  final sup_err " << format_double(last.sup_err)
                  << "  theta_norm " << format_double(last.theta_norm) << '\n';
    }
    return kExitOk;
}

int cmd_oracle(const ExperimentConfig& cfg) {
    const OracleOutput out = run_oracle(cfg);
    std::cout << out.file.string() << "  iterations " << out.solution.iterations << "  residual "
              << format_double(out.solution.residual) << '\n';
    return kExitOk;
}

int cmd_rate_study(const ExperimentConfig& cfg) {
    const RateStudy study = run_rate_study(cfg);
    std::printf("%10s %14s %14s %14s\n", "K", "median_err", "q25", "q75");
    for (const auto& pt : study.points)
        std::printf("%10zu %14.6g %14.6g %14.6g\n", pt.k, pt.median, pt.q25, pt.q75);
    std::printf("slope %.4f (reference %.4f)\n%s\n", study.fit.slope, -cfg.learner.omega / 2.0,
                study.dir.string().c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust TD and robust Q-learning with linear function approximation"};
    app.require_subcommand(1);
    Flags run_flags, oracle_flags, rate_flags, gen_flags;
    CLI::App* run = app.add_subcommand("run", "run a learner for one or more seeds");
    CLI::App* oracle = app.add_subcommand("oracle", "solve the robust Bellman fixed point");
    CLI::App* rate = app.add_subcommand("rate-study", "final error against K across seeds");
    CLI::App* gen = app.add_subcommand("gen-mdp", "write an MDP as JSON (--out is the file)");
    add_flags(run, run_flags, true);
    add_flags(oracle, oracle_flags, false);
    add_flags(rate, rate_flags, true);
    add_flags(gen, gen_flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run)
            return cmd_run(build_config(run_flags));
        if (*oracle)
            return cmd_oracle(build_config(oracle_flags));
        if (*rate)
            return cmd_rate_study(build_config(rate_flags));
        if (gen_flags.out.empty()) {
            std::cerr << "gen-mdp: --out <file.json> is required\n";
            return kExitConfig;
        }
        ExperimentConfig cfg = build_config(gen_flags);
        generate_mdp(cfg, gen_flags.out);
        std::cout << gen_flags.out << '\n';
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "rtdlab: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "rtdlab: " << e.what() << '\n';
        return kExitFailure;
    }
}
