#pragma once

/// @file config.hpp
/// One-file run configuration: sectioned key-value text with the model,
/// power, pricing, trace, controller and engine parameters. Every run
/// embeds its effective config in the output headers, so any report can
/// be re-derived from its own header.

#include <optional>
#include <string>

#include "wattvm/engine.hpp"

namespace wattvm {

/// Shipped defaults (also the content of data/default.ini).
SimulationConfig default_config();

/// Parses config text; unknown sections or keys and malformed values
/// raise std::runtime_error with the file/line location.
SimulationConfig parse_config_text(const std::string& text, const std::string& source_name);

SimulationConfig load_config(const std::string& path);

/// Canonical serialization of the effective config. When `running` is
/// given the controller selection collapses to that single controller.
std::string serialize_config(const SimulationConfig& config,
                             std::optional<ControllerKind> running = std::nullopt);

/// Recovers the effective config from the '# '-prefixed header of an
/// output file written by the report writers.
SimulationConfig extract_config_from_report(const std::string& path);

}  // namespace wattvm
