#include "stochflow/presets.hpp"

#include "stochflow/errors.hpp"

namespace stochflow::presets {

const std::vector<Preset>& all() {
  static const std::vector<Preset> table{
#include "presets_data.inc"
  };
  return table;
}

std::optional<std::string_view> find(std::string_view name) {
  for (const auto& p : all())
    if (p.name == name) return p.text;
  return std::nullopt;
}

config::ExperimentConfig load(std::string_view name) {
  const auto text = find(name);
  if (!text) throw ConfigurationError("unknown preset '" + std::string(name) + "'");
  return config::parse_config(*text);
}

} // namespace stochflow::presets
