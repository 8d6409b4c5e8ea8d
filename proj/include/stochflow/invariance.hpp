#pragma once

// Invariance checkers. Each returns a report whose verdict is
// residual <= tolerance, with the metadata needed to rerun it.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stochflow/currents.hpp"
#include "stochflow/liealg.hpp"

namespace stochflow {

enum class CheckKind {
  strict_nform,
  mean_nform,
  strict_residual,
  mean_residual,
  empirical_pathwise,
  empirical_mean,
  foliation_verdict,
  volume_preservation,
  jacobian_consistency,
};

std::string_view to_string(CheckKind kind);
std::optional<CheckKind> check_kind_from_string(std::string_view name);

struct ReportMetadata {
  double dt = 0.0;
  double T = 0.0;
  int n_paths = 0;
  int grid = 0;
  int basis_k = 0;
  std::uint64_t seed = 0;
};

/// One row of a report. Indices are -1 when not applicable. For
/// empirical_mean rows `reference` is T(f_k); for Jacobian rows basis_index
/// is the path index.
struct ReportEntry {
  int basis_index = -1;
  int field_index = -1;
  std::string label;
  double value = 0.0;
  std::optional<double> reference;
  std::optional<double> std_error;
};

struct InvarianceReport {
  CheckKind kind{};
  double residual = 0.0;
  double tolerance = 0.0;
  bool verdict = false;
  ReportMetadata meta;
  std::vector<ReportEntry> per_basis;
  /// foliation_verdict only.
  std::vector<std::pair<std::string, double>> offending;
  std::vector<double> drift;

  static InvarianceReport make(CheckKind kind, double residual, double tolerance, ReportMetadata meta = {});
};

/// JSON object {kind, residual, tolerance, verdict, dt, T, n_paths, grid,
/// basisK, seed, per_basis, ...}.
std::string report_json(const InvarianceReport& r);
/// Rows `check,basis_index,field_index,value`, header included.
void write_residual_csv(std::ostream& out, const InvarianceReport& r);

/// max over grid nodes and i of |div(f X_i)|.
InvarianceReport check_strict_nform(const ChartedManifold& m, const ScalarField& density,
                                    std::span<const VectorField> fields, int grid, double tolerance = 1e-8);

/// max over grid nodes of
///   | -div(f X_0) + (1/2) sum_i (X_i + div X_i)(div(f X_i)) |,
/// the density form of (X_0 - (1/2) sum X_i^2)^* f = 0.
InvarianceReport check_mean_nform(const ChartedManifold& m, const ScalarField& density, const VectorField& drift,
                                  std::span<const VectorField> diffusions, int grid, double tolerance = 1e-6);

/// max |s_ik| from strict_residuals.
InvarianceReport check_strict_residual(const Current& T, const StratonovichSystem& sys, const TestBasis& basis,
                                       double tolerance = 1e-8);
/// max |r_k| from generator_residuals.
InvarianceReport check_mean_residual(const Current& T, const StratonovichSystem& sys, const TestBasis& basis,
                                     double tolerance = 1e-8);

struct SimulationParams {
  double t = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  int n_paths = 1000;
  /// Pathwise mode tolerance.
  double tolerance = 1e-2;
  /// Weak-error constant C of the mean-mode bound 3 se + C dt.
  double bias_constant = 0.0;
  int probe_paths = 5;
  int threads = 0;
};

enum class EmpiricalMode { pathwise, mean };

/// pathwise: residual = max_k max over probe paths |T(f_k o phi_t) - T(f_k)|.
/// mean: residual = max_k (|E T(f_k o phi_t) - T(f_k)| - 3 se_k) against the
/// tolerance C dt + 1e-12, so the verdict holds iff every k meets its own bound.
/// Mean mode uses Quadrature::shifted.
InvarianceReport empirical_check(const Current& T, const StratonovichSystem& sys, const TestBasis& basis,
                                 const SimulationParams& params, EmpiricalMode mode);

/// Weak-error constant from a dt-halving run: paths are drawn at dt/2 and
/// coarsened to dt, both runs share the grid shift of their path, and
/// C = 2 max_k |E_dt - E_{dt/2}| / dt.
double calibrate_bias_constant(const Current& T, const StratonovichSystem& sys, const TestBasis& basis,
                               const SimulationParams& params);

/// residual = max over paths of max(max_t |J_t - 1|, |J_fd(T) - 1|), with J_t
/// co-evolved along the flow of x0.
InvarianceReport check_volume_preservation(const StratonovichSystem& sys, const Point& x0,
                                           const SimulationParams& params);
/// residual = max over paths of |J_fd(T) - J(T)| / J(T).
InvarianceReport check_jacobian_consistency(const StratonovichSystem& sys, const Point& x0,
                                            const SimulationParams& params);

/// Manifold with frame fields V_1..V_n realizing a Lie algebra.
struct FrameRealization {
  ChartedManifold manifold;
  std::vector<VectorField> frame;
};

/// Throws RealizationError unless [V_i, V_j] = sum_k c_ij^k V_k within
/// `tolerance` at sample points.
void verify_realization(const liealg::LieAlgebra& g, const FrameRealization& r, double tolerance = 1e-6);

/// Heisenberg algebra on the Heisenberg nilmanifold, abelian algebras on unit
/// tori; nullopt otherwise.
std::optional<FrameRealization> builtin_realization(const liealg::LieAlgebra& g);

/// Foliated Brownian motion dx = sum_k d_k V_k dt + sum_{i in h} V_i o dB^i.
StratonovichSystem foliated_system(const liealg::LieAlgebra& g, const liealg::Subalgebra& h,
                                   const FrameRealization& r);

struct FoliationOptions {
  SimulationParams simulation;
  int grid = 8;
  int basis_k = 2;
  /// Generator residual tolerance.
  double generator_tolerance = 1e-6;
  /// Derivative-current tolerance for every frame field.
  double frame_tolerance = 1e-8;
};

struct FoliationResult {
  InvarianceReport verdict;
  std::vector<double> drift;
  /// Present iff a realization was supplied.
  std::optional<StratonovichSystem> system;
  /// mean_residual, strict_residual over the whole frame, empirical_mean and,
  /// when totally invariant, empirical_pathwise.
  std::vector<InvarianceReport> checks;

  bool all_true() const;
};

FoliationResult foliation_pipeline(const liealg::LieAlgebra& g, const liealg::Subalgebra& h,
                                   const std::optional<FrameRealization>& realization,
                                   const FoliationOptions& options = {});

} // namespace stochflow
