#pragma once

// 0-currents T : C^inf(M) -> R of two kinds, both reduced to a weighted sum
// over nodes:
//   Density   T(f) = int f * density dmu_g, realized on a midpoint grid;
//   Empirical T(f) = sum_j w_j f(p_j).
// The pullback under one flow realization moves the nodes and keeps the
// weights: (phi_t^* T)(f) = T(f o phi_t).

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "stochflow/manifold.hpp"
#include "stochflow/sde.hpp"

namespace stochflow {

class Current {
public:
  struct Density {
    ScalarField density;
    int grid;
  };
  struct Empirical {
    std::vector<Point> points;
    std::vector<double> weights;
  };

  /// Throws DegenerateDensityError if the density is not positive on the grid
  /// and ConfigurationError if it does not respect the identification. With
  /// `normalize` the weights are scaled to total mass 1.
  static Current density(ChartedManifold m, ScalarField density, int grid, bool normalize = false);
  /// Volume measure of m, i.e. density 1.
  static Current volume(ChartedManifold m, int grid) { return density(std::move(m), ScalarField::constant(1.0), grid); }
  /// Points are wrapped into the fundamental domain.
  static Current empirical(ChartedManifold m, std::vector<Point> points, std::vector<double> weights);
  static Current dirac(ChartedManifold m, Point p, double weight = 1.0) {
    return empirical(std::move(m), {std::move(p)}, {weight});
  }

  const ChartedManifold& manifold() const noexcept { return manifold_; }
  bool is_density() const noexcept { return std::holds_alternative<Density>(spec_); }
  const std::variant<Density, Empirical>& spec() const noexcept { return spec_; }

  std::span<const Point> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double total_mass() const;

  /// Density current whose grid is translated by `offset` (in cell units,
  /// each coordinate in [0, 1)), weights re-evaluated at the moved nodes.
  /// Returns *this for empirical currents.
  Current shifted(std::span<const double> offset) const;

private:
  Current(ChartedManifold m, std::variant<Density, Empirical> spec, std::vector<Point> nodes, std::vector<double> weights,
          double scale = 1.0)
      : manifold_(std::move(m)), spec_(std::move(spec)), nodes_(std::move(nodes)), weights_(std::move(weights)),
        scale_(scale) {}

  ChartedManifold manifold_;
  std::variant<Density, Empirical> spec_;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
  double scale_;  // 1 / mass when normalized
};

/// T(f).
double eval(const Current& T, const ScalarField& f);

/// T(f o phi_t) for one realization; every node is moved by the same noise.
double pullback_eval(const Current& T, const ScalarField& f, const StratonovichSystem& sys, double t, double dt,
                     const NoisePath& noise);
/// Same for several test functions with a single set of flows.
std::vector<double> pullback_eval(const Current& T, std::span<const ScalarField> fs, const StratonovichSystem& sys,
                                  double t, double dt, const NoisePath& noise);

struct ActionEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
  double t = 0.0;
  double dt = 0.0;
};

/// fixed: every path uses the nodes of T.
/// shifted: path p translates a density grid by a uniform fraction of a cell
/// drawn from (seed, p). The midpoint rule then estimates the integral
/// without bias for any integrand, so grid error enters the standard error
/// instead of the mean.
enum class Quadrature { fixed, shifted };

/// Monte Carlo estimate of E[T(f o phi_t)] over path indices 0..n_paths-1.
/// Paths run on `threads` workers (0 = all cores); the reduction is in path
/// order, so the result does not depend on the worker count.
ActionEstimate mean_action(const Current& T, const ScalarField& f, const StratonovichSystem& sys, double t, double dt,
                           std::uint64_t seed, int n_paths, int threads = 0, Quadrature q = Quadrature::fixed);
std::vector<ActionEstimate> mean_action(const Current& T, std::span<const ScalarField> fs, const StratonovichSystem& sys,
                                        double t, double dt, std::uint64_t seed, int n_paths, int threads = 0,
                                        Quadrature q = Quadrature::fixed);

/// Grid offset used by Quadrature::shifted for one path.
std::vector<double> quadrature_shift(std::uint64_t seed, std::uint64_t path, int dim);

/// (XT)(f) = -T(Xf).
double derivative_current_eval(const VectorField& X, const Current& T, const ScalarField& f);

/// r_k = T(X_0 f_k + (1/2) sum_i X_i(X_i f_k)) = -((X_0 - (1/2) sum_i X_i^2) T)(f_k).
/// T is invariant in mean iff every r_k vanishes.
std::vector<double> generator_residuals(const Current& T, const StratonovichSystem& sys, const TestBasis& basis);

/// s[i][k] = (X_i T)(f_k) for i = 0..m. T is invariant iff all vanish.
std::vector<std::vector<double>> strict_residuals(const Current& T, const StratonovichSystem& sys,
                                                  const TestBasis& basis);

/// Number of steps n with n*dt == t; throws ConfigurationError otherwise.
int step_count(double t, double dt);

} // namespace stochflow
