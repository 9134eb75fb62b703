#pragma once

// Experiment orchestration behind the rtdlab CLI: config resolution, single
// runs, oracle solves and K-scaling rate studies, plus their on-disk outputs.

#include "rtdlab/error.hpp"
#include "rtdlab/learners.hpp"
#include "rtdlab/linear_fa.hpp"
#include "rtdlab/mdp.hpp"
#include "rtdlab/oracle.hpp"
#include "rtdlab/serialization.hpp"
#include "rtdlab/uncertainty.hpp"

#include <toml.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace rtdlab::harness {

namespace fs = std::filesystem;

enum class Algo { Td, Q };

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMixing = 3;
inline constexpr int kExitNonConvergence = 4;

inline int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::MixingAssumptionViolated:
    case ErrorCode::NotIrreducible:
    case ErrorCode::Periodic:
        return kExitMixing;
    case ErrorCode::NonConvergence:
        return kExitNonConvergence;
    default:
        return kExitConfig;
    }
}

/**
@brief Everything needed to reproduce an experiment.

Sources are kept as their textual specs:
  mdp          random:<S>x<A>:<seed> | <file.json>   (or an inline table)
  policy       uniform | deterministic:<a0>,<a1>,... | <file.json>
  uncertainty  tv:<delta> | w:<delta>:<ell>[:<distfile>] | nominal
  features     tabular | random:<d>:<seed> | <file.json>
*/
struct ExperimentConfig {
    Algo algo = Algo::Td;
    std::string mdp = "random:5x2:0";
    std::optional<Mdp> inline_mdp;
    double gamma = 0.9;
    std::string policy = "uniform";
    std::string uncertainty = "tv:0.2";
    std::string features = "tabular";
    std::string dual_features = "tabular";
    LearnerConfig learner;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> k_grid;
    double oracle_tol = kDefaultOracleTol;
    bool with_oracle = true;
    bool record_time = false;
    std::string out = "runs";

    std::vector<std::uint64_t> seed_list() const {
        return seeds.empty() ? std::vector<std::uint64_t>{learner.seed} : seeds;
    }
};

struct ResolvedExperiment {
    Mdp mdp;
    Policy policy;
    UncertaintySet uncertainty;
    bool nominal = false;
    std::vector<double> d_pi;
    FeatureMap phi;
    FeatureMap psi;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, what);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        parts.push_back(cur);
    if (!s.empty() && s.back() == sep)
        parts.emplace_back();
    return parts;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double x = std::stod(s, &used);
        if (used != s.size())
            config_error("bad number for " + what + ": " + s);
        return x;
    } catch (const std::logic_error&) {
        config_error("bad number for " + what + ": " + s);
    }
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& what) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        config_error("bad integer for " + what + ": " + s);
    try {
        return std::stoull(s);
    } catch (const std::logic_error&) {
        config_error("bad integer for " + what + ": " + s);
    }
}

inline bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

inline Mdp resolve_mdp(const ExperimentConfig& cfg) {
    if (cfg.inline_mdp) {
        require_valid(*cfg.inline_mdp);
        return *cfg.inline_mdp;
    }
    if (starts_with(cfg.mdp, "random:")) {
        const auto parts = split(cfg.mdp.substr(7), ':');
        if (parts.size() != 2)
            config_error("mdp spec must be random:<S>x<A>:<seed>");
        const auto dims = split(parts[0], 'x');
        if (dims.size() != 2)
            config_error("mdp spec must be random:<S>x<A>:<seed>");
        const auto n_states = parse_uint(dims[0], "n_states");
        const auto n_actions = parse_uint(dims[1], "n_actions");
        if (n_states == 0 || n_actions == 0)
            config_error("random MDP needs at least one state and action");
        Mdp mdp = random_mdp(n_states, n_actions, parse_uint(parts[1], "mdp seed"), cfg.gamma);
        require_valid(mdp);
        return mdp;
    }
    return mdp_from_json(read_json_file(cfg.mdp));
}

inline Policy resolve_policy(const std::string& spec, const Mdp& mdp) {
    Policy pi;
    if (spec == "uniform") {
        pi = uniform_policy(mdp.n_states, mdp.n_actions);
    } else if (starts_with(spec, "deterministic:")) {
        std::vector<std::size_t> actions;
        for (const auto& a : split(spec.substr(14), ','))
            actions.push_back(parse_uint(a, "policy action"));
        if (actions.size() != mdp.n_states)
            config_error("deterministic policy needs one action per state");
        pi = deterministic_policy(mdp.n_actions, actions);
    } else {
        pi = policy_from_json(read_json_file(spec));
    }
    if (auto v = validate_policy(pi, mdp))
        throw Error(ErrorCode::InvalidConfig, v->message);
    return pi;
}

inline std::pair<UncertaintySet, bool> resolve_uncertainty(const std::string& spec, const Mdp& mdp) {
    if (spec == "nominal")
        return {make_tv(0.0), true};
    const auto parts = split(spec, ':');
    if (parts.size() == 2 && parts[0] == "tv")
        return {make_tv(parse_double(parts[1], "TV radius")), false};
    if ((parts.size() == 3 || parts.size() == 4) && parts[0] == "w") {
        std::vector<double> dist = parts.size() == 4
                                       ? distance_from_json(read_json_file(parts[3]), mdp.n_states)
                                       : line_metric(mdp.n_states);
        return {make_wasserstein(parse_double(parts[1], "Wasserstein radius"),
                                 parse_double(parts[2], "Wasserstein exponent"), mdp.n_states,
                                 std::move(dist)),
                false};
    }
    config_error("uncertainty spec must be tv:<delta>, w:<delta>:<ell>[:<distfile>] or nominal");
}

inline FeatureMap resolve_features(const std::string& spec, const Mdp& mdp,
                                   std::span<const double> d_pi, FeatureKind kind) {
    if (spec == "tabular")
        return tabular_features(mdp.n_states, mdp.n_actions, kind);
    if (starts_with(spec, "random:")) {
        const auto parts = split(spec.substr(7), ':');
        if (parts.size() != 2)
            config_error("feature spec must be random:<d>:<seed>");
        return random_features(mdp.n_pairs(), parse_uint(parts[0], "feature dim"),
                               parse_uint(parts[1], "feature seed"), d_pi, kind);
    }
    FeatureMap f = features_from_json(read_json_file(spec), kind);
    if (static_cast<std::size_t>(f.rows()) != mdp.n_pairs())
        config_error("feature file must have |S||A| rows");
    return f;
}

} // namespace detail

/// Builds the concrete problem. Mixing failures surface as MixingAssumptionViolated.
inline ResolvedExperiment resolve(const ExperimentConfig& cfg) {
    Mdp mdp = detail::resolve_mdp(cfg);
    Policy pi = detail::resolve_policy(cfg.policy, mdp);
    auto [u, nominal] = detail::resolve_uncertainty(cfg.uncertainty, mdp);
    std::vector<double> d_pi;
    try {
        d_pi = stationary_distribution(mdp, pi).d;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotIrreducible || e.code() == ErrorCode::Periodic)
            throw Error(ErrorCode::MixingAssumptionViolated, e.what());
        throw;
    }
    FeatureMap phi = detail::resolve_features(cfg.features, mdp, d_pi, FeatureKind::Primal);
    FeatureMap psi = detail::resolve_features(cfg.dual_features, mdp, d_pi, FeatureKind::Dual);
    return {std::move(mdp), std::move(pi), std::move(u), nominal, std::move(d_pi), std::move(phi),
            std::move(psi)};
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

/**
@brief Reads a TOML experiment file.

Top-level keys mirror the CLI flags (algo, mdp, gamma, policy, uncertainty,
features, dual_features, out, oracle_tol, with_oracle); learner settings go in
[learner] (T, K, beta0, c, omega, b_nu, warm_start, seed, initial_state) and
sweeps in [sweep] (seeds, K_grid). `mdp` may also be an inline table with
n_states, n_actions, p0, r, gamma.
*/
inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig cfg = {}) {
    if (!fs::exists(path))
        detail::config_error("config file not found: " + path);
    toml::table tbl;
    try {
        tbl = toml::parse_file(path);
    } catch (const toml::parse_error& e) {
        detail::config_error(path + ": " + std::string(e.description()));
    }
    auto get_string = [&](std::string_view key, std::string& dst) {
        if (auto v = tbl[key].value<std::string>())
            dst = *v;
    };
    if (auto algo = tbl["algo"].value<std::string>()) {
        if (*algo == "td")
            cfg.algo = Algo::Td;
        else if (*algo == "q")
            cfg.algo = Algo::Q;
        else
            detail::config_error("algo must be td or q");
    }
    if (const toml::table* m = tbl["mdp"].as_table()) {
        auto floats = [&](const char* key) {
            std::vector<double> out;
            if (const toml::array* arr = (*m)[key].as_array())
                for (const auto& x : *arr)
                    out.push_back(x.value<double>().value_or(std::nan("")));
            return out;
        };
        cfg.inline_mdp = Mdp{static_cast<std::size_t>((*m)["n_states"].value_or<std::int64_t>(0)),
                             static_cast<std::size_t>((*m)["n_actions"].value_or<std::int64_t>(0)),
                             floats("p0"), floats("r"), (*m)["gamma"].value_or(cfg.gamma)};
    } else {
        get_string("mdp", cfg.mdp);
    }
    cfg.gamma = tbl["gamma"].value_or(cfg.gamma);
    get_string("policy", cfg.policy);
    get_string("uncertainty", cfg.uncertainty);
    get_string("features", cfg.features);
    get_string("dual_features", cfg.dual_features);
    get_string("out", cfg.out);
    cfg.oracle_tol = tbl["oracle_tol"].value_or(cfg.oracle_tol);
    cfg.with_oracle = tbl["with_oracle"].value_or(cfg.with_oracle);

    if (const toml::table* l = tbl["learner"].as_table()) {
        auto& lc = cfg.learner;
        lc.t_outer = static_cast<std::size_t>((*l)["T"].value_or<std::int64_t>(static_cast<std::int64_t>(lc.t_outer)));
        lc.k_inner = static_cast<std::size_t>((*l)["K"].value_or<std::int64_t>(static_cast<std::int64_t>(lc.k_inner)));
        lc.beta0 = (*l)["beta0"].value_or(lc.beta0);
        lc.c = (*l)["c"].value_or(lc.c);
        lc.omega = (*l)["omega"].value_or(lc.omega);
        if (auto b = (*l)["b_nu"].value<double>())
            lc.b_nu = *b;
        lc.warm_start = (*l)["warm_start"].value_or(lc.warm_start);
        lc.seed = static_cast<std::uint64_t>((*l)["seed"].value_or<std::int64_t>(static_cast<std::int64_t>(lc.seed)));
        lc.initial_state = static_cast<std::size_t>(
            (*l)["initial_state"].value_or<std::int64_t>(static_cast<std::int64_t>(lc.initial_state)));
    }
    if (const toml::table* s = tbl["sweep"].as_table()) {
        if (const toml::array* arr = (*s)["seeds"].as_array()) {
            cfg.seeds.clear();
            for (const auto& x : *arr)
                cfg.seeds.push_back(static_cast<std::uint64_t>(x.value_or<std::int64_t>(0)));
        }
        if (const toml::array* arr = (*s)["K_grid"].as_array()) {
            cfg.k_grid.clear();
            for (const auto& x : *arr)
                cfg.k_grid.push_back(static_cast<std::size_t>(x.value_or<std::int64_t>(0)));
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Provenance
// ---------------------------------------------------------------------------

inline json to_json(const LearnerConfig& lc) {
    json j{{"T", lc.t_outer},       {"K", lc.k_inner},         {"beta0", lc.beta0},
           {"c", lc.c},             {"omega", lc.omega},       {"warm_start", lc.warm_start},
           {"seed", lc.seed},       {"initial_state", lc.initial_state}};
    j["b_nu"] = lc.b_nu ? json(*lc.b_nu) : json(nullptr);
    return j;
}

/// Resolved description of a run; its hash names the output directory.
inline json describe(const ExperimentConfig& cfg, const ResolvedExperiment& res) {
    return {{"algo", cfg.algo == Algo::Td ? "td" : "q"},
            {"mdp", rtdlab::to_json(res.mdp)},
            {"policy", rtdlab::to_json(res.policy)},
            {"uncertainty", cfg.uncertainty},
            {"features", rtdlab::to_json(res.phi)},
            {"dual_features", rtdlab::to_json(res.psi)},
            {"learner", to_json(cfg.learner)},
            {"oracle_tol", cfg.oracle_tol}};
}

/// FNV-1a, rendered as 16 hex digits.
inline std::string content_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_double(double x) {
    if (std::isnan(x))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Worker count: RTDLAB_THREADS if set and positive, else hardware concurrency.
inline std::size_t worker_count() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RTDLAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            n = static_cast<std::size_t>(v);
    }
    return n;
}

/// Runs job(i) for i in [0, n) on a pool; rethrows the first failure.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job,
                         std::size_t workers = worker_count()) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

inline OracleSolution solve_oracle(const ExperimentConfig& cfg, const ResolvedExperiment& res) {
    return cfg.algo == Algo::Td ? solve_policy(res.mdp, res.policy, res.uncertainty, cfg.oracle_tol)
                                : solve_optimal(res.mdp, res.uncertainty, cfg.oracle_tol);
}

inline LearnerResult run_learner(const ExperimentConfig& cfg, const ResolvedExperiment& res,
                                 const LearnerConfig& lc,
                                 std::optional<std::span<const double>> oracle_q) {
    if (res.nominal) {
        if (cfg.algo != Algo::Td)
            detail::config_error("the nominal reference is only available for td");
        return nominal_td(res.mdp, res.policy, res.phi, lc, oracle_q);
    }
    return cfg.algo == Algo::Td
               ? robust_td(res.mdp, res.policy, res.phi, res.psi, res.uncertainty, lc, oracle_q)
               : robust_q(res.mdp, res.policy, res.phi, res.psi, res.uncertainty, lc, oracle_q);
}

/// Trace CSV; wall_ms is written as 0 unless timing is requested, which
/// keeps the file a pure function of (config, seed).
inline void write_trace_csv(const std::string& path, const RunTrace& trace, bool record_time) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
    out << "t,sup_err,theta_norm,mean_td,wall_ms\n";
    for (const auto& rec : trace.records)
        out << rec.t << ',' << format_double(rec.sup_err) << ',' << format_double(rec.theta_norm)
            << ',' << format_double(rec.mean_td) << ','
            << format_double(record_time ? rec.wall_ms : 0.0) << '\n';
}

struct RunOutput {
    fs::path dir;
    LearnerResult result;
};

/// `run`: one learner run per seed, each in <out>/<hash>/.
inline std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg) {
    const ResolvedExperiment res = resolve(cfg);
    std::optional<OracleSolution> oracle;
    if (cfg.with_oracle)
        oracle = solve_oracle(cfg, res);
    const auto seeds = cfg.seed_list();
    std::vector<RunOutput> outputs(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        LearnerConfig lc = cfg.learner;
        lc.seed = seeds[i];
        ExperimentConfig seeded = cfg;
        seeded.learner = lc;
        json desc = describe(seeded, res);
        const fs::path dir = fs::path(cfg.out) / content_hash(desc.dump());
        fs::create_directories(dir);
        std::optional<std::span<const double>> q;
        if (oracle)
            q = std::span<const double>(oracle->q);
        LearnerResult result = run_learner(cfg, res, lc, q);
        write_trace_csv((dir / "trace.csv").string(), result.trace, cfg.record_time);
        const Eigen::VectorXd& th = result.theta_hat;
        json sidecar{{"config", desc},
                     {"theta_hat", std::vector<double>(th.data(), th.data() + th.size())}};
        write_json_file((dir / "config.json").string(), sidecar);
        if (oracle)
            write_json_file((dir / "oracle.json").string(), rtdlab::to_json(*oracle));
        outputs[i] = {dir, std::move(result)};
    });
    return outputs;
}

struct OracleOutput {
    fs::path file;
    OracleSolution solution;
};

/// `oracle`: Q^pi for td, Q* and its greedy policy for q.
inline OracleOutput run_oracle(const ExperimentConfig& cfg) {
    const ResolvedExperiment res = resolve(cfg);
    OracleSolution sol = solve_oracle(cfg, res);
    json desc{{"algo", cfg.algo == Algo::Td ? "td" : "q"},
              {"mdp", rtdlab::to_json(res.mdp)},
              {"policy", rtdlab::to_json(res.policy)},
              {"uncertainty", cfg.uncertainty},
              {"oracle_tol", cfg.oracle_tol}};
    const fs::path dir = fs::path(cfg.out) / content_hash(desc.dump());
    fs::create_directories(dir);
    write_json_file((dir / "config.json").string(), json{{"config", desc}});
    const fs::path file = dir / "oracle.json";
    write_json_file(file.string(), rtdlab::to_json(sol));
    return {file, std::move(sol)};
}

/// Linear-interpolation quantile of a sorted sample (numpy's default rule).
inline double quantile(std::span<const double> sorted, double p) {
    if (sorted.empty())
        return std::nan("");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

struct RatePoint {
    std::size_t k = 0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    std::vector<double> errors; ///< final sup-norm error per seed, in seed order
};

struct RateStudy {
    fs::path dir;
    std::vector<RatePoint> points;
    LineFit fit; ///< log(median_err) against log(K)
};

/// `rate-study`: final error vs K across seeds, with a log-log slope.
inline RateStudy run_rate_study(const ExperimentConfig& cfg) {
    if (cfg.k_grid.size() < 3)
        detail::config_error("rate-study needs a K grid with at least 3 points");
    const auto seeds = cfg.seed_list();
    if (seeds.size() < 10)
        detail::config_error("rate-study needs at least 10 seeds");
    if (!cfg.with_oracle)
        detail::config_error("rate-study measures error against the oracle");
    const ResolvedExperiment res = resolve(cfg);
    const OracleSolution oracle = solve_oracle(cfg, res);
    const std::span<const double> q(oracle.q);

    const std::size_t n_k = cfg.k_grid.size();
    std::vector<double> errors(n_k * seeds.size());
    parallel_for(errors.size(), [&](std::size_t job) {
        LearnerConfig lc = cfg.learner;
        lc.k_inner = cfg.k_grid[job / seeds.size()];
        lc.seed = seeds[job % seeds.size()];
        errors[job] = run_learner(cfg, res, lc, q).trace.records.back().sup_err;
    });

    RateStudy study;
    std::vector<double> log_k, log_err;
    for (std::size_t i = 0; i < n_k; ++i) {
        RatePoint pt;
        pt.k = cfg.k_grid[i];
        pt.errors.assign(errors.begin() + static_cast<std::ptrdiff_t>(i * seeds.size()),
                         errors.begin() + static_cast<std::ptrdiff_t>((i + 1) * seeds.size()));
        std::vector<double> sorted = pt.errors;
        std::sort(sorted.begin(), sorted.end());
        pt.median = quantile(sorted, 0.5);
        pt.q25 = quantile(sorted, 0.25);
        pt.q75 = quantile(sorted, 0.75);
        log_k.push_back(std::log(static_cast<double>(pt.k)));
        log_err.push_back(std::log(pt.median));
        study.points.push_back(std::move(pt));
    }
    study.fit = least_squares(log_k, log_err);

    json desc = describe(cfg, res);
    desc["learner"].erase("K");
    desc["learner"].erase("seed");
    desc["seeds"] = seeds;
    desc["K_grid"] = cfg.k_grid;
    study.dir = fs::path(cfg.out) / content_hash(desc.dump());
    fs::create_directories(study.dir);
    {
        std::ofstream out(study.dir / "rate_summary.csv");
        out << "K,median_err,q25,q75,slope\n";
        for (const auto& pt : study.points)
            out << pt.k << ',' << format_double(pt.median) << ',' << format_double(pt.q25) << ','
                << format_double(pt.q75) << ',' << format_double(study.fit.slope) << '\n';
    }
    {
        std::ofstream out(study.dir / "rate_runs.csv");
        out << "K,seed,final_err\n";
        for (const auto& pt : study.points)
            for (std::size_t s = 0; s < seeds.size(); ++s)
                out << pt.k << ',' << seeds[s] << ',' << format_double(pt.errors[s]) << '\n';
    }
    write_json_file((study.dir / "rate_fit.json").string(),
                    json{{"slope", study.fit.slope},
                         {"intercept", study.fit.intercept},
                         {"omega", cfg.learner.omega},
                         {"reference_slope", -cfg.learner.omega / 2.0}});
    write_json_file((study.dir / "config.json").string(), json{{"config", desc}});
    write_json_file((study.dir / "oracle.json").string(), rtdlab::to_json(oracle));
    return study;
}

/// `gen-mdp`: writes the resolved MDP as JSON.
inline Mdp generate_mdp(const ExperimentConfig& cfg, const std::string& path) {
    Mdp mdp = detail::resolve_mdp(cfg);
    const fs::path p(path);
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    write_json_file(path, rtdlab::to_json(mdp));
    return mdp;
}

} // namespace rtdlab::harness
