#include "stochflow/sde.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/Dense>

#include "stochflow/errors.hpp"

namespace stochflow {

StratonovichSystem::StratonovichSystem(ChartedManifold manifold, VectorField drift, std::vector<VectorField> diffusions)
    : manifold_(std::move(manifold)) {
  fields_.reserve(diffusions.size() + 1);
  fields_.push_back(std::move(drift));
  for (auto& d : diffusions) fields_.push_back(std::move(d));
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    require_compatible(manifold_, fields_[i], i == 0 ? std::string("drift") : "diffusion " + std::to_string(i));
    divergences_.push_back(divergence_field(manifold_, fields_[i]));
    zero_.push_back(fields_[i].is_zero());
  }
}

namespace {

void check_increments(const StratonovichSystem& sys, std::span<const double> dB) {
  if (static_cast<int>(dB.size()) != sys.m() + 1)
    throw ConfigurationError("expected " + std::to_string(sys.m() + 1) + " increments, got " + std::to_string(dB.size()));
}

void check_noise(const StratonovichSystem& sys, double T, double dt, const NoisePath& noise) {
  if (noise.m() != sys.m())
    throw ConfigurationError("noise has " + std::to_string(noise.m()) + " components, system needs " + std::to_string(sys.m()));
  if (std::abs(noise.dt() - dt) > 1e-12 * dt) throw ConfigurationError("noise step does not match dt");
  if (std::abs(noise.steps() * dt - T) > 1e-9 * std::max(1.0, T))
    throw ConfigurationError("T = " + std::to_string(T) + " is not steps*dt for the supplied noise");
}

} // namespace

// Shared predictor-corrector; `on_stage` receives the stage point so the
// Jacobian can ride along without a second field evaluation pass.
struct HeunKernel {
  const StratonovichSystem& sys;

  Point step(const Point& x, std::span<const double> dB, double* log_j) const {
    const int nf = static_cast<int>(sys.fields_.size());
    Tangent k1(x.dim());
    double dl1 = 0.0;
    for (int i = 0; i < nf; ++i) {
      if (sys.zero_[i] || dB[i] == 0.0) continue;
      k1.axpy(dB[i], sys.fields_[i](x));
      if (log_j) dl1 += sys.divergences_[i](x) * dB[i];
    }
    const Point pred = x + k1;
    Tangent k2(x.dim());
    double dl2 = 0.0;
    for (int i = 0; i < nf; ++i) {
      if (sys.zero_[i] || dB[i] == 0.0) continue;
      k2.axpy(dB[i], sys.fields_[i](pred));
      if (log_j) dl2 += sys.divergences_[i](pred) * dB[i];
    }
    Point out = x;
    out.axpy(0.5, k1);
    out.axpy(0.5, k2);
    if (log_j) *log_j += 0.5 * (dl1 + dl2);
    return out;
  }

  template <class Visit>
  Point run(const Point& x0, const NoisePath& noise, bool wrap, double* log_j, Visit&& visit) const {
    const int m = sys.m();
    std::vector<double> dB(m + 1);
    dB[0] = noise.dt();
    Point x = x0;
    for (int s = 0; s < noise.steps(); ++s) {
      const auto inc = noise.step_increments(s);
      for (int i = 0; i < m; ++i) dB[i + 1] = inc[i];
      x = step(x, dB, log_j);
      if (wrap) x = sys.manifold_.wrap(x);
      visit(x);
    }
    return x;
  }
};

Point heun_step_lifted(const StratonovichSystem& sys, const Point& x, std::span<const double> dB) {
  check_increments(sys, dB);
  return HeunKernel{sys}.step(x, dB, nullptr);
}

Point heun_step(const StratonovichSystem& sys, const Point& x, std::span<const double> dB) {
  return sys.manifold().wrap(heun_step_lifted(sys, x, dB));
}

namespace {

FlowResult run_flow(const StratonovichSystem& sys, const Point& x0, double T, double dt, const NoisePath& noise,
                    bool jacobian) {
  check_noise(sys, T, dt, noise);
  FlowResult r;
  r.dt = dt;
  r.trajectory.reserve(noise.steps() + 1);
  r.trajectory.push_back(sys.manifold().wrap(x0));
  double log_j = 0.0;
  if (jacobian) {
    r.log_jacobian.reserve(noise.steps() + 1);
    r.log_jacobian.push_back(0.0);
  }
  HeunKernel{sys}.run(r.trajectory.front(), noise, true, jacobian ? &log_j : nullptr, [&](const Point& x) {
    r.trajectory.push_back(x);
    if (jacobian) r.log_jacobian.push_back(log_j);
  });
  return r;
}

} // namespace

FlowResult flow(const StratonovichSystem& sys, const Point& x0, double T, double dt, const NoisePath& noise) {
  return run_flow(sys, x0, T, dt, noise, false);
}

FlowResult flow_with_jacobian(const StratonovichSystem& sys, const Point& x0, double T, double dt,
                              const NoisePath& noise) {
  return run_flow(sys, x0, T, dt, noise, true);
}

Point flow_endpoint_lifted(const StratonovichSystem& sys, const Point& x0, const NoisePath& noise) {
  if (noise.m() != sys.m()) throw ConfigurationError("noise dimension does not match the system");
  return HeunKernel{sys}.run(x0, noise, false, nullptr, [](const Point&) {});
}

Point flow_endpoint(const StratonovichSystem& sys, const Point& x0, const NoisePath& noise) {
  return sys.manifold().wrap(flow_endpoint_lifted(sys, x0, noise));
}

double fd_jacobian(const StratonovichSystem& sys, const Point& x0, double T, double dt, const NoisePath& noise,
                   double h_fd) {
  check_noise(sys, T, dt, noise);
  const int d = sys.dim();
  const Point base = sys.manifold().wrap(x0);
  Eigen::MatrixXd jac(d, d);
  for (int i = 0; i < d; ++i) {
    Point a = base, b = base;
    a[i] += h_fd;
    b[i] -= h_fd;
    const Tangent diff = flow_endpoint_lifted(sys, a, noise) - flow_endpoint_lifted(sys, b, noise);
    for (int k = 0; k < d; ++k) jac(k, i) = diff[k] / (2.0 * h_fd);
  }
  return jac.determinant();
}

void write_trajectory_csv(std::ostream& out, const FlowResult& result) {
  const int d = result.trajectory.empty() ? 0 : result.trajectory.front().dim();
  out << "t";
  for (int i = 0; i < d; ++i) out << ",x" << i + 1;
  out << ",logJ\n";
  char buf[32];
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(k) * result.dt);
    out << buf;
    for (int i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", result.trajectory[k][i]);
      out << ',' << buf;
    }
    out << ',';
    if (k < result.log_jacobian.size()) {
      std::snprintf(buf, sizeof buf, "%.17g", result.log_jacobian[k]);
      out << buf;
    }
    out << '\n';
  }
}

} // namespace stochflow
