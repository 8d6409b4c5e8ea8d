#include "stochflow/currents.hpp"

#include <cmath>

#include "stochflow/errors.hpp"
#include "stochflow/parallel.hpp"

namespace stochflow {

Current Current::density(ChartedManifold m, ScalarField density, int grid, bool normalize) {
  auto g = midpoint_grid(m, grid);
  if (const double defect = invariance_defect(m, density); defect > 1e-10)
    throw ConfigurationError("density does not respect the identification of " + m.name());
  double mass = 0.0;
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    const double f = density(g.nodes[j]);
    if (!(f > 0.0) || !std::isfinite(f)) throw DegenerateDensityError("density is not positive on the quadrature grid");
    g.weights[j] *= f;
    mass += g.weights[j];
  }
  const double scale = normalize ? 1.0 / mass : 1.0;
  for (double& w : g.weights) w *= scale;
  return Current(std::move(m), Density{std::move(density), grid}, std::move(g.nodes), std::move(g.weights), scale);
}

Current Current::empirical(ChartedManifold m, std::vector<Point> points, std::vector<double> weights) {
  if (points.size() != weights.size()) throw ConfigurationError("empirical current needs one weight per point");
  if (points.empty()) throw ConfigurationError("empirical current needs at least one atom");
  for (double w : weights)
    if (!std::isfinite(w)) throw ConfigurationError("empirical weights must be finite");
  std::vector<Point> nodes;
  nodes.reserve(points.size());
  for (const auto& p : points) nodes.push_back(m.wrap(p));
  auto w = weights;
  return Current(std::move(m), Empirical{nodes, std::move(weights)}, nodes, std::move(w));
}

Current Current::shifted(std::span<const double> offset) const {
  const auto* d = std::get_if<Density>(&spec_);
  if (!d) return *this;
  if (static_cast<int>(offset.size()) != manifold_.dim()) throw ConfigurationError("grid offset has the wrong dimension");
  std::vector<Point> nodes(nodes_.begin(), nodes_.end());
  std::vector<double> weights(weights_.size());
  double cell = 1.0;
  for (int a = 0; a < manifold_.dim(); ++a) cell *= manifold_.box_length(a) / d->grid;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    // Midpoints move by (u - 1/2) cells and so sweep their own cell.
    for (int a = 0; a < manifold_.dim(); ++a) nodes[j][a] += (offset[a] - 0.5) * manifold_.box_length(a) / d->grid;
    weights[j] = scale_ * cell * d->density(nodes[j]);
  }
  return Current(manifold_, spec_, std::move(nodes), std::move(weights), scale_);
}

double Current::total_mass() const {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

double eval(const Current& T, const ScalarField& f) {
  const auto nodes = T.nodes();
  const auto w = T.weights();
  double s = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) s += w[j] * f(nodes[j]);
  return s;
}

int step_count(double t, double dt) {
  if (!(dt > 0.0) || !(t >= 0.0)) throw ConfigurationError("need dt > 0 and t >= 0");
  const double n = std::round(t / dt);
  if (n < 1 || std::abs(n * dt - t) > 1e-9 * std::max(1.0, t))
    throw ConfigurationError("t = " + std::to_string(t) + " is not a positive multiple of dt = " + std::to_string(dt));
  return static_cast<int>(n);
}

namespace {

void check_same_manifold(const Current& T, const StratonovichSystem& sys) {
  if (!(T.manifold() == sys.manifold())) throw ConfigurationError("current and system live on different manifolds");
}

std::vector<double> pullback_from_noise(const Current& T, std::span<const ScalarField> fs, const StratonovichSystem& sys,
                                        const NoisePath& noise) {
  const auto nodes = T.nodes();
  const auto w = T.weights();
  std::vector<double> out(fs.size(), 0.0);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const Point end = flow_endpoint(sys, nodes[j], noise);
    for (std::size_t k = 0; k < fs.size(); ++k) out[k] += w[j] * fs[k](end);
  }
  return out;
}

} // namespace

std::vector<double> pullback_eval(const Current& T, std::span<const ScalarField> fs, const StratonovichSystem& sys,
                                  double t, double dt, const NoisePath& noise) {
  check_same_manifold(T, sys);
  if (noise.m() != sys.m() || noise.steps() != step_count(t, dt) || std::abs(noise.dt() - dt) > 1e-12 * dt)
    throw ConfigurationError("noise path does not match (t, dt, m)");
  return pullback_from_noise(T, fs, sys, noise);
}

double pullback_eval(const Current& T, const ScalarField& f, const StratonovichSystem& sys, double t, double dt,
                     const NoisePath& noise) {
  return pullback_eval(T, std::span<const ScalarField>(&f, 1), sys, t, dt, noise).front();
}

std::vector<double> quadrature_shift(std::uint64_t seed, std::uint64_t path, int dim) {
  std::vector<double> u(dim);
  for (int a = 0; a < dim; ++a) u[a] = uniform(seed, path, kAuxiliaryStep, static_cast<std::uint32_t>(a));
  return u;
}

std::vector<ActionEstimate> mean_action(const Current& T, std::span<const ScalarField> fs, const StratonovichSystem& sys,
                                        double t, double dt, std::uint64_t seed, int n_paths, int threads,
                                        Quadrature q) {
  check_same_manifold(T, sys);
  if (n_paths < 2) throw ConfigurationError("mean action needs at least 2 paths");
  const int steps = step_count(t, dt);
  std::vector<std::vector<double>> samples(n_paths);
  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t p) {
    const auto noise = generate_noise(seed, p, sys.m(), dt, steps);
    samples[p] = q == Quadrature::shifted && T.is_density()
                     ? pullback_from_noise(T.shifted(quadrature_shift(seed, p, sys.dim())), fs, sys, noise)
                     : pullback_from_noise(T, fs, sys, noise);
  });
  std::vector<ActionEstimate> out(fs.size());
  for (std::size_t k = 0; k < fs.size(); ++k) {
    // Shifted accumulation: identical samples give their exact value and a
    // zero standard error.
    const double shift = samples[0][k];
    double s = 0.0, s2 = 0.0;
    for (int p = 0; p < n_paths; ++p) {
      const double d = samples[p][k] - shift;
      s += d;
      s2 += d * d;
    }
    const double mean_d = s / n_paths;
    const double var = std::max(0.0, (s2 - n_paths * mean_d * mean_d) / (n_paths - 1));
    out[k] = {shift + mean_d, std::sqrt(var / n_paths), n_paths, t, dt};
  }
  return out;
}

ActionEstimate mean_action(const Current& T, const ScalarField& f, const StratonovichSystem& sys, double t, double dt,
                           std::uint64_t seed, int n_paths, int threads, Quadrature q) {
  return mean_action(T, std::span<const ScalarField>(&f, 1), sys, t, dt, seed, n_paths, threads, q).front();
}

double derivative_current_eval(const VectorField& X, const Current& T, const ScalarField& f) {
  return -eval(T, directional_derivative(T.manifold(), X, f));
}

std::vector<double> generator_residuals(const Current& T, const StratonovichSystem& sys, const TestBasis& basis) {
  check_same_manifold(T, sys);
  const auto& m = sys.manifold();
  std::vector<double> out;
  out.reserve(basis.size());
  for (const auto& b : basis) {
    double r = eval(T, directional_derivative(m, sys.drift(), b.f));
    for (int i = 1; i <= sys.m(); ++i) {
      const ScalarField xf = directional_derivative(m, sys.field(i), b.f);
      r += 0.5 * eval(T, directional_derivative(m, sys.field(i), xf));
    }
    out.push_back(r);
  }
  return out;
}

std::vector<std::vector<double>> strict_residuals(const Current& T, const StratonovichSystem& sys,
                                                  const TestBasis& basis) {
  check_same_manifold(T, sys);
  std::vector<std::vector<double>> out;
  for (const auto& X : sys.fields()) {
    std::vector<double> row;
    row.reserve(basis.size());
    for (const auto& b : basis) row.push_back(derivative_current_eval(X, T, b.f));
    out.push_back(std::move(row));
  }
  return out;
}

} // namespace stochflow
