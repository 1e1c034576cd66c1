#pragma once

#include "json.hpp"

#include "multirecv/mcmc.hpp"
#include "multirecv/model.hpp"
#include "multirecv/ppc.hpp"

namespace multirecv {

// Section parsers. Unknown keys, wrong types and out-of-range values throw
// ConfigError so that typos in run documents fail loudly.
ModelConfig model_config_from_json(const nlohmann::json& j);
McmcSettings mcmc_settings_from_json(const nlohmann::json& j);
SimulationDesign simulation_design_from_json(const nlohmann::json& j);
PpcOptions ppc_options_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelConfig& config);
nlohmann::json to_json(const McmcSettings& settings);
nlohmann::json to_json(const SimulationDesign& design);
nlohmann::json to_json(const PpcOptions& options);

// Parameters of a state (z and c omitted), e.g. a simulation ground truth.
nlohmann::json state_to_json(const LatentState& state);

// Parse text, mapping syntax errors to ConfigError.
nlohmann::json parse_config_text(std::string_view text);

}  // namespace multirecv
