#pragma once

// Stratonovich SDE  dx = X_0(x) dt + sum_{i=1}^m X_i(x) o dB^i  on a charted
// manifold, integrated with the Stratonovich Heun predictor-corrector.

#include <iosfwd>
#include <span>
#include <vector>

#include "stochflow/manifold.hpp"
#include "stochflow/noise.hpp"

namespace stochflow {

class StratonovichSystem {
public:
  /// Throws ConfigurationError when a field does not descend to the manifold.
  StratonovichSystem(ChartedManifold manifold, VectorField drift, std::vector<VectorField> diffusions);

  const ChartedManifold& manifold() const noexcept { return manifold_; }
  const VectorField& drift() const noexcept { return fields_.front(); }
  /// X_0 (drift) followed by X_1..X_m.
  const std::vector<VectorField>& fields() const noexcept { return fields_; }
  const VectorField& field(int i) const { return fields_[i]; }
  /// Number of driving Brownian motions.
  int m() const noexcept { return static_cast<int>(fields_.size()) - 1; }
  int dim() const noexcept { return manifold_.dim(); }

  /// div_mu(X_i), cached at construction.
  const ScalarField& divergence(int i) const { return divergences_[i]; }

private:
  ChartedManifold manifold_;
  std::vector<VectorField> fields_;
  std::vector<ScalarField> divergences_;
  std::vector<bool> zero_;

  friend Point heun_step_lifted(const StratonovichSystem&, const Point&, std::span<const double>);
  friend struct HeunKernel;
};

/// One Heun step on the covering space (no wrapping). `dB` has m+1 entries
/// with dB[0] = dt.
Point heun_step_lifted(const StratonovichSystem& sys, const Point& x, std::span<const double> dB);

/// Heun step followed by wrapping into the fundamental domain.
Point heun_step(const StratonovichSystem& sys, const Point& x, std::span<const double> dB);

struct FlowResult {
  double dt = 0.0;
  std::vector<Point> trajectory;     // canonical points at t_k = k dt
  std::vector<double> log_jacobian;  // log J at t_k; empty for flow()
};

/// Trajectory of x0 driven by `noise`. T must equal noise.steps() * dt.
FlowResult flow(const StratonovichSystem& sys, const Point& x0, double T, double dt, const NoisePath& noise);

/// Trajectory plus log J, co-evolved as d(log J) = sum_i div(X_i)(x) o dB^i
/// with the same predictor-corrector and shared noise.
FlowResult flow_with_jacobian(const StratonovichSystem& sys, const Point& x0, double T, double dt,
                              const NoisePath& noise);

/// Endpoint of the lifted flow (no wrapping at any step).
Point flow_endpoint_lifted(const StratonovichSystem& sys, const Point& x0, const NoisePath& noise);
/// Canonical endpoint.
Point flow_endpoint(const StratonovichSystem& sys, const Point& x0, const NoisePath& noise);

/// det of the central-difference Jacobian of x -> phi_T(x) under the same
/// noise path, using lifted (unwrapped) endpoints.
double fd_jacobian(const StratonovichSystem& sys, const Point& x0, double T, double dt, const NoisePath& noise,
                   double h_fd = 1e-6);

/// CSV with header `t,x1..xn,logJ` (logJ column left empty when absent).
void write_trajectory_csv(std::ostream& out, const FlowResult& result);

} // namespace stochflow
