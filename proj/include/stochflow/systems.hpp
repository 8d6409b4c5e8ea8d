#pragma once

// Built-in example systems shared by the presets and the test suites.

#include <string>
#include <vector>

#include "stochflow/sde.hpp"

namespace stochflow::systems {

/// Field components as expression strings, the form used in config files.
struct FieldStrings {
  std::vector<std::string> drift;
  std::vector<std::vector<std::string>> diffusions;
};

/// Hamiltonian fields X_h = (dh/dx2, -dh/dx1) on the unit torus T^2 for
///   h0 = sin(2 pi (x1 + x2)) / (8 pi^2)              (drift)
///   h1 = sin(2 pi x1) cos(2 pi x2) / (4 pi^2)
///   h2 = (cos(2 pi x1) + sin(2 pi x2)) / (4 pi^2)
FieldStrings hamiltonian_torus_fields();
StratonovichSystem hamiltonian_torus();

/// Standard Brownian motion on T^2: X_1 = d/dx1, X_2 = d/dx2.
StratonovichSystem translation_bm_torus();

/// X_1 = sin(2 pi x) d/dx on T^1 (multiplicative noise).
StratonovichSystem multiplicative_circle();

/// X_0 = sin(2 pi x) d/dx on T^1, no noise.
StratonovichSystem sink_circle();

/// X_1 = d/dx on T^1 (additive noise).
StratonovichSystem additive_circle();

/// Builds a system from expression strings.
StratonovichSystem from_strings(const ChartedManifold& m, const FieldStrings& fields);

} // namespace stochflow::systems
