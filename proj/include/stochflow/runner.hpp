#pragma once

// Executes an experiment config and writes its reports.
//
// Output directory layout:
//   report.json            {"payload": {...}, "payload_hash": "<fnv1a64>", "timestamp": "..."}
//   check_<n>_<kind>.csv   rows check,basis_index,field_index,value
// The payload holds the effective config and every check report; it is a
// pure function of the config, so equal configs give equal hashes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stochflow/config.hpp"

namespace stochflow::runner {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<int> n_paths;
  int threads = 0;
};

/// Applies overrides to every simulation parameter of the config.
config::ExperimentConfig apply(config::ExperimentConfig cfg, const Overrides& o);

struct Outcome {
  std::vector<InvarianceReport> reports;
  std::string payload;  // compact JSON
  std::string payload_hash;

  bool all_true() const;
  int exit_code() const { return all_true() ? 0 : 2; }
};

/// Runs every check; library errors propagate.
Outcome execute(const config::ExperimentConfig& cfg, int threads = 0);

/// FNV-1a 64-bit hash as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Runs, writes the output directory and prints one line per check to `log`.
/// Returns 0 when every verdict holds, 2 when one fails, 1 on any error.
int run(const config::ExperimentConfig& cfg, const std::string& out_dir, const Overrides& o, std::ostream& log);

/// Weak-error constants C for each empirical_mean check (or the liealg mean
/// check), in config order.
std::vector<double> calibrate(const config::ExperimentConfig& cfg, int threads = 0);

} // namespace stochflow::runner
