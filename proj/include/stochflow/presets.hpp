#pragma once

// Shipped experiment configs; the same texts live in presets/*.cfg.

#include <optional>
#include <string_view>
#include <vector>

#include "stochflow/config.hpp"

namespace stochflow::presets {

struct Preset {
  std::string_view name;
  std::string_view text;
};

const std::vector<Preset>& all();
std::optional<std::string_view> find(std::string_view name);
/// Throws ConfigurationError for unknown names.
config::ExperimentConfig load(std::string_view name);

} // namespace stochflow::presets
