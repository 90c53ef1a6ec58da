#pragma once

#include "oed/models.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace oed {

struct ModelInstance {
    std::shared_ptr<const Model> model;
    // Nominal parameter used when the configuration supplies none; may be empty.
    Eigen::VectorXd default_theta_bar;
    // Constants with every default filled in.
    nlohmann::json effective_constants;
};

using ModelFactory = std::function<ModelInstance(const nlohmann::json& constants)>;

// Registers or replaces a factory. Built-in names: "linear", "benzene_cstr", "williams_otto".
void register_model(const std::string& name, ModelFactory factory);

// Throws InvalidInput for unknown names or unknown constant keys.
ModelInstance make_model(const std::string& name, const nlohmann::json& constants);

std::vector<std::string> registered_models();

} // namespace oed
