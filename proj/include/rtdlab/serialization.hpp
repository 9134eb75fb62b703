#pragma once

// JSON encodings for the exchanged artifacts. nlohmann::json writes doubles
// with 17 significant digits, so numeric round trips are bit-exact.

#include "rtdlab/error.hpp"
#include "rtdlab/learners.hpp"
#include "rtdlab/linear_fa.hpp"
#include "rtdlab/mdp.hpp"
#include "rtdlab/oracle.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace rtdlab {

using json = nlohmann::json;

inline json to_json(const Mdp& mdp) {
    return {{"n_states", mdp.n_states},
            {"n_actions", mdp.n_actions},
            {"p0", mdp.p0},
            {"r", mdp.r},
            {"gamma", mdp.gamma}};
}

inline Mdp mdp_from_json(const json& j) {
    try {
        Mdp mdp{j.at("n_states").get<std::size_t>(), j.at("n_actions").get<std::size_t>(),
                j.at("p0").get<std::vector<double>>(), j.at("r").get<std::vector<double>>(),
                j.at("gamma").get<double>()};
        require_valid(mdp);
        return mdp;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed MDP JSON: ") + e.what());
    }
}

inline json to_json(const Policy& pi) {
    return {{"n_states", pi.n_states}, {"n_actions", pi.n_actions}, {"probs", pi.probs}};
}

inline Policy policy_from_json(const json& j) {
    try {
        return {j.at("n_states").get<std::size_t>(), j.at("n_actions").get<std::size_t>(),
                j.at("probs").get<std::vector<double>>()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed policy JSON: ") + e.what());
    }
}

/// {rows, cols, data} with data row-major.
inline json to_json(const FeatureMap& phi) {
    const RowMatrix& m = phi.matrix();
    return {{"rows", m.rows()},
            {"cols", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline FeatureMap features_from_json(const json& j, FeatureKind kind) {
    try {
        const auto rows = j.at("rows").get<Eigen::Index>();
        const auto cols = j.at("cols").get<Eigen::Index>();
        const auto data = j.at("data").get<std::vector<double>>();
        if (rows <= 0 || cols <= 0 || data.size() != static_cast<std::size_t>(rows * cols))
            throw Error(ErrorCode::InvalidFeatures, "feature JSON data does not match rows x cols");
        RowMatrix m = Eigen::Map<const RowMatrix>(data.data(), rows, cols);
        return FeatureMap(std::move(m), kind);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed feature JSON: ") + e.what());
    }
}

/// Distance matrices are a bare array of rows or {"n", "data"} row-major.
inline std::vector<double> distance_from_json(const json& j, std::size_t n_states) {
    try {
        std::vector<double> flat;
        if (j.is_array()) {
            for (const auto& row : j)
                for (const auto& x : row)
                    flat.push_back(x.get<double>());
        } else {
            flat = j.at("data").get<std::vector<double>>();
        }
        if (flat.size() != n_states * n_states)
            throw Error(ErrorCode::DimensionMismatch, "distance matrix must be n_states x n_states");
        return flat;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("malformed distance JSON: ") + e.what());
    }
}

inline json to_json(const OracleSolution& sol) {
    json j{{"q", sol.q}, {"iterations", sol.iterations}, {"residual", sol.residual}};
    if (sol.greedy_policy)
        j["greedy_policy"] = *sol.greedy_policy;
    return j;
}

inline OracleSolution oracle_from_json(const json& j) {
    OracleSolution sol{j.at("q").get<std::vector<double>>(), j.at("iterations").get<std::size_t>(),
                       j.at("residual").get<double>(), std::nullopt};
    if (j.contains("greedy_policy"))
        sol.greedy_policy = j.at("greedy_policy").get<std::vector<std::size_t>>();
    return sol;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::InvalidConfig, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
    out << j.dump(2) << '\n';
}

} // namespace rtdlab
