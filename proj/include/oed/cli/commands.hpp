#pragma once

#include "oed/adaptive.hpp"
#include "oed/cli/config.hpp"
#include "oed/design_space.hpp"
#include "oed/registry.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace oed::cli {

struct CommandOptions {
    std::string config;
    std::optional<std::string> design;
    std::optional<std::string> trace;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

// Everything a command needs, built from a validated configuration.
struct Experiment {
    ExperimentConfig config;
    ModelInstance model;
    Eigen::VectorXd theta_bar;
    std::optional<DesignSpace> space;
    CriterionSpec criterion;
    std::vector<std::size_t> x0;
    std::vector<std::string> input_names;

    // Effective configuration including model defaults.
    nlohmann::json effective() const;
};

// Applies command-line overrides, builds the model and the atoms of every grid point.
Experiment prepare(ExperimentConfig config, const CommandOptions& options);

// Design file (JSON from run, or the CSV table) matched to grid points within 1e-9.
Design load_design(const Experiment& ex, const std::string& path);
nlohmann::json design_json(const Experiment& ex, const Design& xi);
// Support points and weights rounded to 6 decimals.
std::string design_csv(const Experiment& ex, const Design& xi);

int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_certify(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_rates(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_reduce(const CommandOptions& options, std::ostream& out, std::ostream& err);

} // namespace oed::cli
