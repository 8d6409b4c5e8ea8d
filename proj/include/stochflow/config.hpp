#pragma once

// Experiment files. Grammar (one item per line, '#' starts a comment):
//
//   [section]            section header; checks use [check <kind>]
//   key = value          lists are comma separated
//
// Sections of a flow experiment:
//   [experiment] name
//   [manifold]   type = torus | heisenberg, lengths (torus only)
//   [fields]     drift (optional), diffusion (repeatable), one expression
//                per coordinate
//   [density]    f (default 1), normalize
//   [current]    type = density | empirical, atom = <weight> @ <coords>
//                (repeatable, empirical only)
//   [check K]    grid, K, dt, T, paths, probes, seed, tolerance,
//                bias_constant, x0
//   [simulate]   x0, dt, T, seed, path
// A Lie-algebra experiment has [experiment] and [liealg] only:
//   [liealg]     algebra (builtin name) or constants (JSON file), subalgebra
//                (1-based indices), realization = builtin | none, grid, K,
//                dt, T, paths, probes, seed, tolerance, bias_constant
//
// A document whose first non-blank character is '{' is read as JSON with the
// same structure: {"experiment": {...}, "manifold": {...}, "fields":
// {"drift": [...], "diffusions": [[...], ...]}, "checks": [{"kind": ...}],
// ...}.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stochflow/errors.hpp"
#include "stochflow/invariance.hpp"

namespace stochflow::config {

struct ManifoldSpec {
  std::string type = "torus";
  std::vector<double> lengths;
  friend bool operator==(const ManifoldSpec&, const ManifoldSpec&) = default;
};

struct Atom {
  double weight = 1.0;
  std::vector<double> point;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct CurrentSpec {
  std::string type = "density";
  std::vector<Atom> atoms;
  friend bool operator==(const CurrentSpec&, const CurrentSpec&) = default;
};

struct CheckSpec {
  CheckKind kind{};
  int grid = 16;
  int basis_k = 3;
  double dt = 1e-3;
  double T = 1.0;
  int n_paths = 100;
  int probes = 5;
  std::uint64_t seed = 1;
  double tolerance = 1e-8;
  double bias_constant = 0.0;
  /// Start point of Jacobian checks; empty means the centre of the box.
  std::vector<double> x0;
  friend bool operator==(const CheckSpec&, const CheckSpec&) = default;
};

/// Defaults of a check of the given kind.
CheckSpec default_check(CheckKind kind);

struct SimulateSpec {
  std::vector<double> x0;
  double dt = 1e-3;
  double T = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t path = 0;
  friend bool operator==(const SimulateSpec&, const SimulateSpec&) = default;
};

struct FlowExperiment {
  ManifoldSpec manifold;
  std::vector<std::string> drift;
  std::vector<std::vector<std::string>> diffusions;
  std::string density = "1";
  bool normalize = false;
  CurrentSpec current;
  std::vector<CheckSpec> checks;
  std::optional<SimulateSpec> simulate;
  friend bool operator==(const FlowExperiment&, const FlowExperiment&) = default;
};

struct LiealgExperiment {
  std::string algebra;    // builtin name
  std::string constants;  // JSON file, resolved against base_dir
  std::vector<int> subalgebra;  // 1-based
  std::string realization = "builtin";
  int grid = 8;
  int basis_k = 2;
  double dt = 1e-3;
  double T = 1.0;
  int n_paths = 1000;
  int probes = 5;
  std::uint64_t seed = 1;
  double tolerance = 1e-2;
  double bias_constant = 0.0;
  friend bool operator==(const LiealgExperiment&, const LiealgExperiment&) = default;
};

struct ExperimentConfig {
  std::string name;
  std::optional<FlowExperiment> flow;
  std::optional<LiealgExperiment> liealg;
  /// Directory used to resolve relative file names; not serialized.
  std::string base_dir;
  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.name == b.name && a.flow == b.flow && a.liealg == b.liealg;
  }
};

struct Diagnostic {
  int line = 0;    // 1-based; 0 when the input is JSON
  int column = 0;  // 1-based
  std::string path;  // e.g. fields.diffusion[2][1]
  std::string message;
  std::string to_string() const;
};

/// Thrown by parse_config with every problem found.
class ConfigParseError : public ConfigurationError {
public:
  explicit ConfigParseError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
  std::vector<Diagnostic> diagnostics_;
};

ExperimentConfig parse_config(std::string_view text, std::string base_dir = ".");
/// Reads and parses a file; relative references resolve against its directory.
ExperimentConfig load_config(const std::string& path);
/// Key-value form, accepted by parse_config.
std::string serialize(const ExperimentConfig& config);

/// Built-in systems and current of a flow experiment. Throws ConfigurationError.
ChartedManifold build_manifold(const ManifoldSpec& spec);
StratonovichSystem build_system(const FlowExperiment& flow);
Current build_current(const FlowExperiment& flow, const ChartedManifold& m, int grid);

} // namespace stochflow::config
