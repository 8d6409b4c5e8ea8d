#include "stochflow/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "stochflow/errors.hpp"

namespace stochflow {

double max_abs(const Coords& v) noexcept {
  double m = 0.0;
  for (double c : v.values()) m = std::max(m, std::abs(c));
  return m;
}

ScalarField::ScalarField() : expr_(expr::Expr::constant(0.0)) {}

ScalarField::ScalarField(expr::Expr e) : expr_(std::move(e)) {}

ScalarField::ScalarField(std::function<double(const Point&)> fn)
    : fn_(std::make_shared<const std::function<double(const Point&)>>(std::move(fn))) {}

VectorField::VectorField(std::vector<ScalarField> components) : components_(std::move(components)) {
  if (components_.empty() || dim() > kMaxDim) throw ConfigurationError("vector field must have 1.." + std::to_string(kMaxDim) + " components");
}

VectorField VectorField::parse(std::span<const std::string> components) {
  std::vector<ScalarField> comps;
  comps.reserve(components.size());
  for (const auto& c : components) comps.push_back(ScalarField::parse(c));
  return VectorField(std::move(comps));
}

VectorField VectorField::zero(int dim) { return VectorField(std::vector<ScalarField>(dim, ScalarField::constant(0.0))); }

bool VectorField::analytic() const {
  return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.analytic(); });
}

bool VectorField::is_zero() const {
  return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.is_constant(0.0); });
}

// ---------------------------------------------------------------------------

ChartedManifold ChartedManifold::torus(std::vector<double> lengths) {
  if (lengths.empty() || static_cast<int>(lengths.size()) > kMaxDim)
    throw ConfigurationError("torus dimension must be 1.." + std::to_string(kMaxDim));
  for (double l : lengths)
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigurationError("torus period lengths must be positive");
  return ChartedManifold(Identification::torus, std::move(lengths));
}

ChartedManifold ChartedManifold::heisenberg() { return ChartedManifold(Identification::heisenberg, {1.0, 1.0, 1.0}); }

double ChartedManifold::volume() const {
  double v = 1.0;
  for (double l : lengths_) v *= l;
  return v;
}

std::string ChartedManifold::name() const {
  if (identification_ == Identification::heisenberg) return "heisenberg";
  return "T" + std::to_string(dim());
}

namespace {

// Splits x = r + k*L with r in [0, L).
double reduce(double x, double length, double& k) {
  k = std::floor(x / length);
  double r = x - k * length;
  if (r < 0.0) {
    r += length;
    k -= 1.0;
  }
  if (r >= length) {
    r -= length;
    k += 1.0;
  }
  return r;
}

} // namespace

Point ChartedManifold::wrap(const Point& p) const {
  if (p.dim() != dim()) throw InvalidPointError("point has " + std::to_string(p.dim()) + " coordinates, expected " + std::to_string(dim()));
  for (double c : p.values())
    if (!std::isfinite(c)) throw InvalidPointError("non-finite coordinate");
  Point q = p;
  double k = 0.0;
  if (identification_ == Identification::torus) {
    for (int i = 0; i < dim(); ++i) q[i] = reduce(p[i], lengths_[i], k);
    return q;
  }
  // Shifting x by a units moves z by a*y (original y); y and z shifts are plain.
  q[0] = reduce(p[0], 1.0, k);
  q[2] = p[2] - k * p[1];
  q[1] = reduce(p[1], 1.0, k);
  q[2] = reduce(q[2], 1.0, k);
  return q;
}

bool ChartedManifold::in_domain(const Point& p) const {
  if (p.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (!(p[i] >= 0.0 && p[i] < lengths_[i])) return false;
  return true;
}

Point ChartedManifold::deck(const Point& p, std::span<const int> shift) const {
  Point q = p;
  for (int i = 0; i < dim(); ++i) q[i] += shift[i] * lengths_[i];
  if (identification_ == Identification::heisenberg) q[2] += shift[0] * p[1];
  return q;
}

Tangent ChartedManifold::deck_push(const Point&, const Tangent& v, std::span<const int> shift) const {
  Tangent w = v;
  if (identification_ == Identification::heisenberg) w[2] += shift[0] * v[1];
  return w;
}

std::vector<VectorField> ChartedManifold::invariant_frame() const {
  std::vector<VectorField> frame;
  if (identification_ == Identification::heisenberg) {
    auto c = [](double v) { return ScalarField::constant(v); };
    frame.emplace_back(std::vector<ScalarField>{c(1), c(0), c(0)});
    frame.emplace_back(std::vector<ScalarField>{c(0), c(1), ScalarField(expr::Expr::variable(0))});
    frame.emplace_back(std::vector<ScalarField>{c(0), c(0), c(1)});
    return frame;
  }
  for (int i = 0; i < dim(); ++i) {
    std::vector<ScalarField> comps(dim(), ScalarField::constant(0.0));
    comps[i] = ScalarField::constant(1.0);
    frame.emplace_back(std::move(comps));
  }
  return frame;
}

// ---------------------------------------------------------------------------

double partial(const ChartedManifold& m, const ScalarField& f, int axis, const Point& p) {
  if (f.analytic()) return f.expression().derivative(axis)(p.values());
  const double h = m.fd_step(axis);
  Point a = p, b = p;
  a[axis] += h;
  b[axis] -= h;
  return (f(a) - f(b)) / (2.0 * h);
}

ScalarField directional_derivative(const ChartedManifold& m, const VectorField& X, const ScalarField& f) {
  if (X.analytic() && f.analytic()) {
    expr::Expr sum = expr::Expr::constant(0.0);
    for (int i = 0; i < X.dim(); ++i)
      sum = sum + X.component(i).expression() * f.expression().derivative(i);
    return ScalarField(sum);
  }
  return ScalarField([m, X, f](const Point& p) {
    double s = 0.0;
    for (int i = 0; i < X.dim(); ++i) {
      const double xi = X.component(i)(p);
      if (xi != 0.0) s += xi * partial(m, f, i, p);
    }
    return s;
  });
}

VectorField scaled(const ScalarField& f, const VectorField& X) {
  std::vector<ScalarField> comps;
  comps.reserve(X.dim());
  for (const auto& c : X.components()) {
    if (f.analytic() && c.analytic()) comps.emplace_back(f.expression() * c.expression());
    else comps.emplace_back([f, c](const Point& p) { return f(p) * c(p); });
  }
  return VectorField(std::move(comps));
}

ScalarField divergence_field(const ChartedManifold& m, const VectorField& X) {
  if (X.analytic()) {
    expr::Expr sum = expr::Expr::constant(0.0);
    for (int i = 0; i < X.dim(); ++i) sum = sum + X.component(i).expression().derivative(i);
    return ScalarField(sum);
  }
  return ScalarField([m, X](const Point& p) {
    double s = 0.0;
    for (int i = 0; i < X.dim(); ++i) s += partial(m, X.component(i), i, p);
    return s;
  });
}

double divergence(const ChartedManifold& m, const VectorField& X, const Point& p) {
  double s = 0.0;
  for (int i = 0; i < X.dim(); ++i) s += partial(m, X.component(i), i, p);
  return s;
}

double divergence(const ChartedManifold& m, const VectorField& X, const ScalarField& density, const Point& p) {
  const double f = density(p) * m.volume_density(p);
  if (!(f > 0.0)) throw DegenerateDensityError("density is not positive at the evaluation point");
  return divergence(m, scaled(density, X), p) / f;
}

Tangent lie_bracket(const ChartedManifold& m, const VectorField& X, const VectorField& Y, const Point& p) {
  Tangent out(X.dim());
  const Tangent xv = X(p), yv = Y(p);
  for (int k = 0; k < X.dim(); ++k) {
    double s = 0.0;
    for (int i = 0; i < X.dim(); ++i) {
      if (xv[i] != 0.0) s += xv[i] * partial(m, Y.component(k), i, p);
      if (yv[i] != 0.0) s -= yv[i] * partial(m, X.component(k), i, p);
    }
    out[k] = s;
  }
  return out;
}

QuadratureGrid midpoint_grid(const ChartedManifold& m, int n) {
  if (n < 2) throw ConfigurationError("quadrature grid needs at least 2 points per axis");
  const int d = m.dim();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  QuadratureGrid g;
  g.per_axis = n;
  g.nodes.reserve(total);
  g.weights.reserve(total);
  const double cell = m.volume() / static_cast<double>(total);
  std::vector<int> idx(d, 0);
  for (std::size_t t = 0; t < total; ++t) {
    Point p(d);
    for (int i = 0; i < d; ++i) p[i] = (idx[i] + 0.5) * m.box_length(i) / n;
    g.weights.push_back(cell * m.volume_density(p));
    g.nodes.push_back(p);
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
  }
  return g;
}

double quadrature(const ChartedManifold& m, const ScalarField& f, int n) {
  const auto g = midpoint_grid(m, n);
  double s = 0.0;
  for (std::size_t j = 0; j < g.nodes.size(); ++j) s += g.weights[j] * f(g.nodes[j]);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct Factor {
  std::string label;
  expr::Expr e;
};

std::vector<Factor> axis_factors(int axis, double length, int cutoff) {
  using expr::Expr;
  std::vector<Factor> out;
  out.push_back({"1", Expr::constant(1.0)});
  const std::string var = "x" + std::to_string(axis + 1);
  for (int k = 1; k <= cutoff; ++k) {
    const Expr arg = Expr::constant(2.0 * std::numbers::pi * k / length) * Expr::variable(axis);
    const std::string freq = (k == 1 ? "2*pi*" : std::to_string(2 * k) + "*pi*") + var;
    const std::string scale = length == 1.0 ? freq : "(" + freq + ")/" + std::to_string(length);
    out.push_back({"cos(" + scale + ")", cos(arg)});
    out.push_back({"sin(" + scale + ")", sin(arg)});
  }
  return out;
}

} // namespace

TestBasis make_test_basis(const ChartedManifold& m, int cutoff) {
  if (cutoff < 1) throw ConfigurationError("test basis cutoff must be at least 1");
  const int axes = m.identification() == Identification::heisenberg ? 2 : m.dim();
  std::vector<std::vector<Factor>> per_axis;
  for (int i = 0; i < axes; ++i) per_axis.push_back(axis_factors(i, m.box_length(i), cutoff));

  std::vector<BasisFunction> functions;
  const std::size_t width = per_axis.front().size();
  std::size_t total = 1;
  for (int i = 0; i < axes; ++i) total *= width;
  std::vector<std::size_t> idx(axes, 0);
  for (std::size_t t = 0; t < total; ++t) {
    expr::Expr e = expr::Expr::constant(1.0);
    std::string label;
    for (int i = 0; i < axes; ++i) {
      const auto& fac = per_axis[i][idx[i]];
      e = e * fac.e;
      if (idx[i] != 0) label += (label.empty() ? "" : "*") + fac.label;
    }
    functions.push_back({label.empty() ? "1" : label, ScalarField(e)});
    for (int i = axes - 1; i >= 0; --i) {
      if (++idx[i] < width) break;
      idx[i] = 0;
    }
  }
  return TestBasis(cutoff, std::move(functions));
}

namespace {

template <class Fn>
double over_deck_samples(const ChartedManifold& m, int samples, Fn&& fn) {
  std::mt19937_64 rng(0x5eed);
  const int d = m.dim();
  double worst = 0.0;
  std::vector<int> shift(d);
  for (int s = 0; s < samples; ++s) {
    Point p(d);
    for (int i = 0; i < d; ++i) p[i] = std::uniform_real_distribution<double>(0.0, m.box_length(i))(rng);
    // Unit shifts along each axis, plus one mixed shift.
    for (int axis = 0; axis <= d; ++axis) {
      for (int sign : {-1, 1}) {
        std::fill(shift.begin(), shift.end(), 0);
        if (axis < d) shift[axis] = sign;
        else std::fill(shift.begin(), shift.end(), sign);
        worst = std::max(worst, fn(p, std::span<const int>(shift)));
      }
    }
  }
  return worst;
}

} // namespace

double compatibility_defect(const ChartedManifold& m, const VectorField& X, int samples) {
  return over_deck_samples(m, samples, [&](const Point& p, std::span<const int> shift) {
    const Tangent there = X(m.deck(p, shift));
    const Tangent pushed = m.deck_push(p, X(p), shift);
    return max_abs(there - pushed) / std::max(1.0, max_abs(pushed));
  });
}

double invariance_defect(const ChartedManifold& m, const ScalarField& f, int samples) {
  return over_deck_samples(m, samples, [&](const Point& p, std::span<const int> shift) {
    const double a = f(p);
    return std::abs(f(m.deck(p, shift)) - a) / std::max(1.0, std::abs(a));
  });
}

void require_compatible(const ChartedManifold& m, const VectorField& X, std::string_view what, double tolerance) {
  if (X.dim() != m.dim())
    throw ConfigurationError(std::string(what) + ": field has " + std::to_string(X.dim()) + " components on a " +
                             std::to_string(m.dim()) + "-dimensional manifold");
  const double defect = compatibility_defect(m, X);
  if (defect > tolerance)
    throw ConfigurationError(std::string(what) + ": field does not respect the identification of " + m.name() +
                             " (defect " + std::to_string(defect) + ")");
}

} // namespace stochflow
