#pragma once

// Compact manifolds presented as a periodic box with identifications, plus
// the fields, differential operators and quadrature that live on them.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stochflow/expr.hpp"
#include "stochflow/point.hpp"

namespace stochflow {

/// Smooth real function on the covering space. Backed either by an
/// expression (analytic derivatives) or by an opaque callable (central
/// finite differences).
class ScalarField {
public:
  ScalarField();
  ScalarField(expr::Expr e); // NOLINT(google-explicit-constructor)
  explicit ScalarField(std::function<double(const Point&)> fn);

  static ScalarField parse(std::string_view text) { return ScalarField(expr::Expr::parse(text)); }
  static ScalarField constant(double v) { return ScalarField(expr::Expr::constant(v)); }

  double operator()(const Point& p) const { return expr_ ? (*expr_)(p.values()) : (*fn_)(p); }

  bool analytic() const noexcept { return expr_.has_value(); }
  /// Only valid when analytic().
  const expr::Expr& expression() const { return *expr_; }
  /// True when the field is the analytic constant `v`.
  bool is_constant(double v) const { return expr_ && expr_->is_constant() && expr_->constant_value() == v; }
  std::string to_string() const { return expr_ ? expr_->to_string() : std::string("<callable>"); }

private:
  std::optional<expr::Expr> expr_;
  std::shared_ptr<const std::function<double(const Point&)>> fn_;
};

/// Vector field given by coordinate components.
class VectorField {
public:
  VectorField() = default;
  explicit VectorField(std::vector<ScalarField> components);

  static VectorField parse(std::span<const std::string> components);
  static VectorField zero(int dim);

  int dim() const noexcept { return static_cast<int>(components_.size()); }
  const ScalarField& component(int i) const { return components_[i]; }
  const std::vector<ScalarField>& components() const noexcept { return components_; }

  Tangent operator()(const Point& p) const {
    Tangent v(dim());
    for (int i = 0; i < dim(); ++i) v[i] = components_[i](p);
    return v;
  }

  bool analytic() const;
  bool is_zero() const;

private:
  std::vector<ScalarField> components_;
};

enum class Identification { torus, heisenberg };

/// Compact manifold: a box [0,L_1) x ... x [0,L_n) glued by a lattice action.
///
/// torus: x ~ x + sum_i k_i L_i e_i.
/// heisenberg (dim 3, unit box): (x,y,z) ~ (x+a, y+b, z+c+a*y) for integers
/// a,b,c, i.e. left multiplication by the integer Heisenberg lattice.
/// Both carry volume density 1.
class ChartedManifold {
public:
  static ChartedManifold torus(std::vector<double> lengths);
  static ChartedManifold unit_torus(int dim) { return torus(std::vector<double>(dim, 1.0)); }
  static ChartedManifold heisenberg();

  int dim() const noexcept { return static_cast<int>(lengths_.size()); }
  Identification identification() const noexcept { return identification_; }
  std::span<const double> box_lengths() const noexcept { return lengths_; }
  double box_length(int axis) const { return lengths_[axis]; }
  double volume() const;
  double volume_density(const Point&) const noexcept { return 1.0; }
  std::string name() const;

  /// Canonical representative in the fundamental domain; throws
  /// InvalidPointError on wrong dimension or non-finite coordinates.
  Point wrap(const Point& p) const;
  bool in_domain(const Point& p) const;

  /// Image of p under the lattice element with integer coordinates `shift`.
  Point deck(const Point& p, std::span<const int> shift) const;
  /// Differential of the deck map at p applied to v.
  Tangent deck_push(const Point& p, const Tangent& v, std::span<const int> shift) const;

  /// Central finite-difference step along `axis`.
  double fd_step(int axis) const { return 1e-5 * lengths_[axis]; }

  /// Global invariant orthonormal frame: coordinate fields on the torus;
  /// X = d/dx, Y = d/dy + x d/dz, Z = d/dz on the Heisenberg manifold.
  std::vector<VectorField> invariant_frame() const;

  friend bool operator==(const ChartedManifold&, const ChartedManifold&) = default;

private:
  ChartedManifold(Identification id, std::vector<double> lengths)
      : identification_(id), lengths_(std::move(lengths)) {}

  Identification identification_;
  std::vector<double> lengths_;
};

/// Partial derivative of f along coordinate `axis` at p.
double partial(const ChartedManifold& m, const ScalarField& f, int axis, const Point& p);

/// The function Xf = sum_i X^i d_i f; symbolic when both inputs are analytic.
ScalarField directional_derivative(const ChartedManifold& m, const VectorField& X, const ScalarField& f);

/// The field f*X.
VectorField scaled(const ScalarField& f, const VectorField& X);

/// div_mu(X) for the volume measure mu (density 1) as a field.
ScalarField divergence_field(const ChartedManifold& m, const VectorField& X);

/// div of X with respect to mu_g.
double divergence(const ChartedManifold& m, const VectorField& X, const Point& p);

/// div of X with respect to density*mu_g, i.e. sum_i d_i(f X^i) / f. Throws
/// DegenerateDensityError when density(p) <= 0.
double divergence(const ChartedManifold& m, const VectorField& X, const ScalarField& density, const Point& p);

/// [X,Y] = (X.grad)Y - (Y.grad)X at p.
Tangent lie_bracket(const ChartedManifold& m, const VectorField& X, const VectorField& Y, const Point& p);

/// Uniform midpoint grid of the fundamental domain with N points per axis.
struct QuadratureGrid {
  std::vector<Point> nodes;
  std::vector<double> weights; // cell volume times volume density
  int per_axis = 0;
};

QuadratureGrid midpoint_grid(const ChartedManifold& m, int n);

/// Midpoint-rule integral of f against the volume form.
double quadrature(const ChartedManifold& m, const ScalarField& f, int n);

struct BasisFunction {
  std::string label;
  ScalarField f;
};

/// Trigonometric test functions; element 0 is the constant 1.
class TestBasis {
public:
  TestBasis(int cutoff, std::vector<BasisFunction> functions)
      : cutoff_(cutoff), functions_(std::move(functions)) {}

  int cutoff() const noexcept { return cutoff_; }
  std::size_t size() const noexcept { return functions_.size(); }
  const BasisFunction& operator[](std::size_t k) const { return functions_[k]; }
  auto begin() const { return functions_.begin(); }
  auto end() const { return functions_.end(); }

private:
  int cutoff_;
  std::vector<BasisFunction> functions_;
};

/// Torus: products over axes of {1, cos(2 pi k x_i/L_i), sin(2 pi k x_i/L_i)}
/// for 1 <= k <= K. Heisenberg: the same on the base torus (x, y), constant
/// along the fibre, hence invariant under the identification.
TestBasis make_test_basis(const ChartedManifold& m, int cutoff);

/// max |X(deck(p)) - deck_push(X(p))| over sampled p and unit lattice shifts.
double compatibility_defect(const ChartedManifold& m, const VectorField& X, int samples = 32);
/// max |f(deck(p)) - f(p)| over sampled p and unit lattice shifts.
double invariance_defect(const ChartedManifold& m, const ScalarField& f, int samples = 32);

/// Throws ConfigurationError naming `what` when X does not descend to m.
void require_compatible(const ChartedManifold& m, const VectorField& X, std::string_view what,
                        double tolerance = 1e-10);

} // namespace stochflow
