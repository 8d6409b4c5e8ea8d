#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stochflow/errors.hpp"
#include "stochflow/manifold.hpp"

using namespace stochflow;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

Point random_point(std::mt19937_64& rng, const ChartedManifold& m) {
  Point p(m.dim());
  for (int i = 0; i < m.dim(); ++i) p[i] = std::uniform_real_distribution<double>(0.0, m.box_length(i))(rng);
  return p;
}

VectorField hamiltonian_field() {
  // h = sin(2 pi x1) cos(2 pi x2); X_h = (dh/dx2, -dh/dx1)
  const auto h = expr::Expr::parse("sin(2*pi*x1)*cos(2*pi*x2)");
  return VectorField({ScalarField(h.derivative(1)), ScalarField(-h.derivative(0))});
}

// Same components hidden behind callables, forcing finite differences.
VectorField opaque(const VectorField& X) {
  std::vector<ScalarField> comps;
  for (const auto& c : X.components()) comps.emplace_back([c](const Point& p) { return c(p); });
  return VectorField(std::move(comps));
}

} // namespace

TEST_CASE("wrap reduces torus coordinates") {
  const auto t2 = ChartedManifold::unit_torus(2);
  const Point w = t2.wrap({1.25, -0.5});
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[1] == doctest::Approx(0.5));
  const Point inside{0.3, 0.7};
  CHECK(t2.wrap(inside) == inside);

  const auto t = ChartedManifold::torus({2.0, 0.5});
  const Point v = t.wrap({-0.5, 1.2});
  CHECK(v[0] == doctest::Approx(1.5));
  CHECK(v[1] == doctest::Approx(0.2));
}

TEST_CASE("wrap rejects malformed points") {
  const auto t2 = ChartedManifold::unit_torus(2);
  CHECK_THROWS_AS(t2.wrap({NAN, 0.0}), InvalidPointError);
  CHECK_THROWS_AS(t2.wrap({INFINITY, 0.0}), InvalidPointError);
  CHECK_THROWS_AS(t2.wrap({0.1}), InvalidPointError);
}

TEST_CASE("property: wrap is idempotent and lands in the domain") {
  std::mt19937_64 rng(3);
  for (const auto& m : {ChartedManifold::unit_torus(1), ChartedManifold::torus({1.0, 3.0}),
                        ChartedManifold::heisenberg()}) {
    for (int s = 0; s < 2000; ++s) {
      Point p(m.dim());
      for (int i = 0; i < m.dim(); ++i) p[i] = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
      const Point w = m.wrap(p);
      CHECK(m.in_domain(w));
      CHECK(m.wrap(w) == w);
    }
    // Values just below zero must not round up onto the upper face.
    Point tiny(m.dim());
    for (int i = 0; i < m.dim(); ++i) tiny[i] = -1e-18;
    CHECK(m.in_domain(m.wrap(tiny)));
  }
}

TEST_CASE("heisenberg wrap applies the lattice shear") {
  const auto h = ChartedManifold::heisenberg();
  const Point w = h.wrap({1.2, 0.5, 0.1});
  CHECK(w[0] == doctest::Approx(0.2));
  CHECK(w[1] == doctest::Approx(0.5));
  CHECK(w[2] == doctest::Approx(0.6));
  // Invariant test functions agree on both representatives.
  for (const auto& b : make_test_basis(h, 2)) CHECK(b.f({1.2, 0.5, 0.1}) == doctest::Approx(b.f(w)).epsilon(1e-12));
  // Canonical point and its deck translate wrap to the same representative.
  std::mt19937_64 rng(5);
  for (int s = 0; s < 200; ++s) {
    const Point p = random_point(rng, h);
    for (const auto& shift : {std::array{1, 0, 0}, std::array{-2, 3, 1}, std::array{0, -1, 5}}) {
      const Point q = h.wrap(h.deck(p, shift));
      for (int i = 0; i < 3; ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("divergence of constant and Hamiltonian fields vanishes") {
  const auto t2 = ChartedManifold::unit_torus(2);
  const auto d1 = VectorField({ScalarField::constant(1.0), ScalarField::constant(0.0)});
  CHECK(divergence(t2, d1, Point{0.3, 0.4}) == 0.0);

  const auto xh = hamiltonian_field();
  const auto xh_fd = opaque(xh);
  std::mt19937_64 rng(1);
  for (int s = 0; s < 100; ++s) {
    const Point p = random_point(rng, t2);
    CHECK(std::abs(divergence(t2, xh, p)) < 1e-8);
    CHECK(std::abs(divergence(t2, xh_fd, p)) < 1e-8);
  }
}

TEST_CASE("divergence of sin(2 pi x) d/dx at 0 is 2 pi") {
  const auto t1 = ChartedManifold::unit_torus(1);
  const auto X = VectorField({ScalarField::parse("sin(2*pi*x1)")});
  CHECK(divergence(t1, X, Point{0.0}) == doctest::Approx(kTwoPi).epsilon(1e-15));
  // Finite-difference route with the fixed step; truncation ~ h^2 (2 pi)^3 / 6.
  CHECK(divergence(t1, opaque(X), Point{0.0}) == doctest::Approx(kTwoPi).epsilon(1e-8));
  // Richer steps converge to the analytic value.
  const auto& f = X.component(0);
  double prev = INFINITY;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const double fd = (f(Point{h}) - f(Point{-h})) / (2 * h);
    const double err = std::abs(fd - kTwoPi);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("divergence against a density") {
  const auto t1 = ChartedManifold::unit_torus(1);
  const auto X = VectorField({ScalarField::constant(1.0)});
  const auto f = ScalarField::parse("1 + 0.5*sin(2*pi*x1)");
  // div_{f mu}(d/dx) = f'/f
  const double x = 0.2;
  const double expected = 0.5 * kTwoPi * std::cos(kTwoPi * x) / (1 + 0.5 * std::sin(kTwoPi * x));
  CHECK(divergence(t1, X, f, Point{x}) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(divergence(t1, X, ScalarField::parse("sin(2*pi*x1)"), Point{0.75}), DegenerateDensityError);
  CHECK_THROWS_AS(divergence(t1, X, ScalarField::constant(0.0), Point{0.1}), DegenerateDensityError);
}

TEST_CASE("property: Leibniz rule div(fX) = f div X + Xf") {
  const auto t2 = ChartedManifold::unit_torus(2);
  const auto X = VectorField({ScalarField::parse("sin(2*pi*x1) + cos(2*pi*x2)"), ScalarField::parse("exp(sin(2*pi*x2))*cos(2*pi*x1)")});
  const auto f = ScalarField::parse("2 + sin(2*pi*(x1 + 2*x2))");
  const double h = t2.fd_step(0);
  std::mt19937_64 rng(2);
  for (const bool fd : {false, true}) {
    const auto Xs = fd ? opaque(X) : X;
    const auto fs = fd ? ScalarField([f](const Point& p) { return f(p); }) : f;
    // Finite differences see third derivatives of size ~ (4 pi)^3.
    const double tol = fd ? 10 * h * h * std::pow(4 * std::numbers::pi, 3) : 10 * h * h;
    const auto Xf = directional_derivative(t2, Xs, fs);
    for (int s = 0; s < 50; ++s) {
      const Point p = random_point(rng, t2);
      const double lhs = divergence(t2, scaled(fs, Xs), p);
      const double rhs = fs(p) * divergence(t2, Xs, p) + Xf(p);
      CHECK(std::abs(lhs - rhs) < tol);
    }
  }
}

TEST_CASE("lie brackets") {
  const auto t2 = ChartedManifold::unit_torus(2);
  const auto frame2 = t2.invariant_frame();
  CHECK(max_abs(lie_bracket(t2, frame2[0], frame2[1], Point{0.2, 0.9})) == 0.0);

  const auto X = VectorField({ScalarField::parse("sin(2*pi*x2)"), ScalarField::parse("x1*x2")});
  CHECK(max_abs(lie_bracket(t2, X, X, Point{0.3, 0.1})) == 0.0);

  const auto h = ChartedManifold::heisenberg();
  const auto f = h.invariant_frame();
  std::mt19937_64 rng(9);
  for (int s = 0; s < 20; ++s) {
    const Point p = random_point(rng, h);
    const Tangent xy = lie_bracket(h, f[0], f[1], p);
    CHECK(xy[0] == 0.0);
    CHECK(xy[1] == 0.0);
    CHECK(xy[2] == 1.0);
    const Tangent fd = lie_bracket(h, opaque(f[0]), opaque(f[1]), p);
    CHECK(fd[2] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(max_abs(lie_bracket(h, f[0], f[2], p)) == 0.0);
    CHECK(max_abs(lie_bracket(h, f[1], f[2], p)) == 0.0);
  }
}

TEST_CASE("midpoint quadrature") {
  const auto t1 = ChartedManifold::unit_torus(1);
  const auto t2 = ChartedManifold::unit_torus(2);
  CHECK(quadrature(t2, ScalarField::constant(1.0), 64) == doctest::Approx(1.0).epsilon(1e-15));
  for (int n : {2, 3, 7, 64}) CHECK(std::abs(quadrature(t2, ScalarField::parse("sin(2*pi*x1)"), n)) < 1e-15);
  CHECK(quadrature(t1, ScalarField::parse("sin(2*pi*x1)*sin(2*pi*x1)"), 16) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(quadrature(ChartedManifold::torus({2.0, 3.0}), ScalarField::constant(1.0), 5) == doctest::Approx(6.0));
  CHECK_THROWS_AS(midpoint_grid(t1, 1), ConfigurationError);
  CHECK(midpoint_grid(ChartedManifold::heisenberg(), 4).nodes.size() == 64);
}

TEST_CASE("property: quadrature is linear and exact below Nyquist") {
  const auto t2 = ChartedManifold::unit_torus(2);
  std::mt19937_64 rng(4);
  const int n = 16;
  for (int trial = 0; trial < 30; ++trial) {
    // Random trig polynomial with frequencies < n/2 and a known mean.
    const double mean = std::uniform_real_distribution<double>(-1, 1)(rng);
    expr::Expr e = expr::Expr::constant(mean);
    for (int term = 0; term < 5; ++term) {
      const int k1 = std::uniform_int_distribution<int>(-7, 7)(rng);
      const int k2 = std::uniform_int_distribution<int>(-7, 7)(rng);
      if (k1 == 0 && k2 == 0) continue;
      const double a = std::uniform_real_distribution<double>(-1, 1)(rng);
      const auto arg = expr::Expr::constant(kTwoPi * k1) * expr::Expr::variable(0) +
                       expr::Expr::constant(kTwoPi * k2) * expr::Expr::variable(1);
      e = e + expr::Expr::constant(a) * (term % 2 ? sin(arg) : cos(arg));
    }
    const ScalarField f(e);
    CHECK(std::abs(quadrature(t2, f, n) - mean) <= 1e-12);

    const ScalarField g = ScalarField::parse("exp(sin(2*pi*x1))*cos(2*pi*x2)");
    const double a = 1.7, b = -0.3;
    const ScalarField combo(expr::Expr::constant(a) * e + expr::Expr::constant(b) * g.expression());
    CHECK(std::abs(quadrature(t2, combo, n) - (a * quadrature(t2, f, n) + b * quadrature(t2, g, n))) <= 1e-14);
  }
}

TEST_CASE("test basis enumeration") {
  const auto b1 = make_test_basis(ChartedManifold::unit_torus(1), 1);
  REQUIRE(b1.size() == 3);
  CHECK(b1[0].label == "1");
  CHECK(b1[1].label == "cos(2*pi*x1)");
  CHECK(b1[2].label == "sin(2*pi*x1)");
  CHECK(b1[2].f(Point{0.25}) == doctest::Approx(1.0));
  CHECK(make_test_basis(ChartedManifold::unit_torus(2), 1).size() == 9);
  CHECK(make_test_basis(ChartedManifold::unit_torus(2), 3).size() == 49);
  CHECK_THROWS_AS(make_test_basis(ChartedManifold::unit_torus(1), 0), ConfigurationError);

  const auto h = ChartedManifold::heisenberg();
  const auto bh = make_test_basis(h, 1);
  CHECK(bh.size() == 9);
  for (const auto& b : bh) {
    CHECK(b.f.expression().derivative(2).is_constant());
    CHECK(invariance_defect(h, b.f) < 1e-12);
  }
  for (const auto& b : make_test_basis(ChartedManifold::torus({2.0, 0.5}), 2))
    CHECK(invariance_defect(ChartedManifold::torus({2.0, 0.5}), b.f) < 1e-12);
  CHECK(make_test_basis(ChartedManifold::unit_torus(2), 2)[0].f(Point{0.3, 0.2}) == 1.0);
}

TEST_CASE("identification compatibility of fields") {
  const auto h = ChartedManifold::heisenberg();
  for (const auto& v : h.invariant_frame()) CHECK(compatibility_defect(h, v) < 1e-12);
  // d/dy + y d/dz is not left-invariant and does not descend.
  const auto bad = VectorField({ScalarField::constant(0), ScalarField::constant(1), ScalarField::parse("x2")});
  CHECK(compatibility_defect(h, bad) > 0.1);
  CHECK_THROWS_AS(require_compatible(h, bad, "diffusion 1"), ConfigurationError);

  const auto t = ChartedManifold::torus({2.0});
  CHECK_THROWS_AS(require_compatible(t, VectorField({ScalarField::parse("sin(x1)")}), "drift"), ConfigurationError);
  CHECK_NOTHROW(require_compatible(t, VectorField({ScalarField::parse("sin(pi*x1)")}), "drift"));
  CHECK_THROWS_AS(require_compatible(t, VectorField::zero(2), "drift"), ConfigurationError);
}
