#pragma once

#include "oed/adaptive.hpp"
#include "oed/criteria.hpp"
#include "oed/models.hpp"
#include "oed/weight_solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oed::cli {

inline constexpr int kSchemaVersion = 1;

struct ModelBlock {
    std::string name;
    nlohmann::json constants = nlohmann::json::object();
    std::optional<std::vector<double>> theta_bar;
    std::optional<Eigen::MatrixXd> noise_covariance;
    double h_rel = 1e-6;
    JacobianScaling scaling = JacobianScaling::absolute;
};

struct AxisBlock {
    std::string name;
    GridAxis axis;
};

struct X0Block {
    enum class Kind { corners, all, points } kind = Kind::corners;
    std::vector<std::vector<double>> points;
};

struct AlgorithmBlock {
    // One of the four adaptive variants or "vertex_direction".
    std::string variant = "exchange_strict";
    X0Block x0;
    ToleranceSchedule schedule{.eps = 1e-4};
    RunCaps caps;
    double w_min = 1e-9;
    std::uint64_t seed = 0;
    bool seeded_scan = false;
    bool literal_update = false;
    SolveSettings solver;
    VertexStep vertex_step = VertexStep::harmonic;
};

struct RatesBlock {
    int samples = 2000;
    std::string theorem = "auto"; // auto, sublinear, linear, none
    double tol = 1e-8;
};

struct OutputBlock {
    std::string directory = "out";
    bool timings = false;
    int threads = 1;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    ModelBlock model;
    std::vector<AxisBlock> grid;
    nlohmann::json criterion_json; // normalized criterion block
    AlgorithmBlock algorithm;
    RatesBlock rates;
    OutputBlock output;

    // Every setting with defaults filled in.
    nlohmann::json effective() const;
};

// Parses and validates; errors name the offending key by JSON pointer.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Criterion block to a specification for information matrices of dimension d.
CriterionSpec criterion_from_json(const nlohmann::json& j, int d, const std::string& path = "/criterion");
nlohmann::json criterion_to_json(const CriterionSpec& spec);

} // namespace oed::cli
