#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stochflow/currents.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/systems.hpp"

using namespace stochflow;

namespace {

constexpr double kPi = std::numbers::pi;

VectorField field(std::initializer_list<std::string> comps) {
  std::vector<std::string> v(comps);
  return VectorField::parse(v);
}

StratonovichSystem circle_system(const std::string& drift, std::vector<std::string> diffusions) {
  std::vector<VectorField> d;
  for (const auto& s : diffusions) d.push_back(field({s}));
  return StratonovichSystem(ChartedManifold::unit_torus(1), field({drift}), d);
}

} // namespace

TEST_CASE("eval on density and empirical currents") {
  const auto t1 = ChartedManifold::unit_torus(1);
  CHECK(eval(Current::volume(ChartedManifold::unit_torus(2), 8), ScalarField::constant(1)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eval(Current::dirac(t1, {0.25}, 2.0), ScalarField::parse("sin(2*pi*x1)")) == doctest::Approx(2.0).epsilon(1e-15));
  const auto T = Current::density(t1, ScalarField::parse("1 + sin(2*pi*x1)/2"), 16);
  CHECK(eval(T, ScalarField::parse("sin(2*pi*x1)")) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(T.total_mass() == doctest::Approx(1.0).epsilon(1e-14));

  const auto Tn = Current::density(ChartedManifold::torus({2.0}), ScalarField::constant(3.0), 10, true);
  CHECK(Tn.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(Tn.total_mass() - 1.0) < 1e-10);

  // Atoms are canonicalized.
  const auto E = Current::empirical(t1, {{1.25}, {-0.5}}, {1.0, 1.0});
  CHECK(E.nodes()[0][0] == doctest::Approx(0.25));
  CHECK(E.nodes()[1][0] == doctest::Approx(0.5));
}

TEST_CASE("current validation") {
  const auto t1 = ChartedManifold::unit_torus(1);
  CHECK_THROWS_AS(Current::density(t1, ScalarField::parse("sin(2*pi*x1)"), 8), DegenerateDensityError);
  CHECK_THROWS_AS(Current::density(t1, ScalarField::parse("2 + sin(x1)"), 8), ConfigurationError);
  CHECK_THROWS_AS(Current::density(t1, ScalarField::constant(1), 1), ConfigurationError);
  CHECK_THROWS_AS(Current::empirical(t1, {{0.1}}, {1.0, 2.0}), ConfigurationError);
  CHECK_THROWS_AS(Current::empirical(t1, {{0.1}}, {NAN}), ConfigurationError);
  CHECK_THROWS_AS(Current::empirical(t1, {{NAN}}, {1.0}), InvalidPointError);
}

TEST_CASE("eval is linear in weights and in f") {
  const auto m = ChartedManifold::unit_torus(2);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto basis = make_test_basis(m, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> pts;
    std::vector<double> w1, w2, wsum;
    for (int j = 0; j < 7; ++j) {
      pts.push_back({0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng)});
      w1.push_back(u(rng));
      w2.push_back(u(rng));
      wsum.push_back(w1.back() + w2.back());
    }
    const auto& f = basis[trial % basis.size()].f;
    const auto& g = basis[(3 * trial + 1) % basis.size()].f;
    const double a = u(rng), b = u(rng);
    const auto T1 = Current::empirical(m, pts, w1);
    const auto T2 = Current::empirical(m, pts, w2);
    const auto T12 = Current::empirical(m, pts, wsum);
    CHECK(eval(T12, f) == doctest::Approx(eval(T1, f) + eval(T2, f)).epsilon(1e-13));
    const ScalarField comb([&](const Point& p) { return a * f(p) + b * g(p); });
    CHECK(eval(T1, comb) == doctest::Approx(a * eval(T1, f) + b * eval(T1, g)).epsilon(1e-13));
  }
}

TEST_CASE("pathwise pullback") {
  const auto t1 = ChartedManifold::unit_torus(1);
  const auto f = ScalarField::parse("sin(2*pi*x1)");

  SUBCASE("identity flow") {
    const StratonovichSystem zero(t1, VectorField::zero(1), {VectorField::zero(1)});
    const auto T = Current::density(t1, ScalarField::parse("1 + sin(2*pi*x1)/2"), 16);
    CHECK(pullback_eval(T, f, zero, 0.1, 1e-2, generate_noise(1, 0, 1, 1e-2, 10)) == eval(T, f));
  }
  SUBCASE("translations preserve Lebesgue") {
    const auto sys = systems::additive_circle();
    const auto T = Current::volume(t1, 16);
    for (int p = 0; p < 5; ++p)
      CHECK(std::abs(pullback_eval(T, f, sys, 1.0, 1e-2, generate_noise(3, p, 1, 1e-2, 100))) < 1e-13);
  }
  SUBCASE("deterministic rotation of T^2") {
    const auto m = ChartedManifold::unit_torus(2);
    const StratonovichSystem rot(m, field({"1", "0.5"}), {});
    const auto T = Current::volume(m, 12);
    const auto noise = generate_noise(1, 0, 0, 1e-2, 37);
    for (const auto& b : make_test_basis(m, 3))
      CHECK(std::abs(pullback_eval(T, b.f, rot, 0.37, 1e-2, noise) - eval(T, b.f)) < 1e-8);
  }
  SUBCASE("noise must match t and dt") {
    const auto sys = systems::additive_circle();
    const auto T = Current::volume(t1, 4);
    CHECK_THROWS_AS(pullback_eval(T, f, sys, 1.0, 1e-2, generate_noise(3, 0, 1, 1e-2, 50)), ConfigurationError);
    CHECK_THROWS_AS(pullback_eval(T, f, sys, 0.5, 1e-2, generate_noise(3, 0, 2, 1e-2, 50)), ConfigurationError);
  }
}

TEST_CASE("shifted grids") {
  // Averaging the N-point rule over the shifts (i + 1/2)/k reproduces the
  // midpoint rule on N k points.
  const auto t1 = ChartedManifold::unit_torus(1);
  const auto T = Current::density(t1, ScalarField::parse("1 + sin(2*pi*x1)/2"), 4);
  const auto f = ScalarField::parse("exp(sin(2*pi*x1))");
  const int k = 5;
  double avg = 0.0;
  for (int i = 0; i < k; ++i) {
    const double u = (i + 0.5) / k;
    avg += eval(T.shifted(std::span<const double>(&u, 1)), f) / k;
  }
  const auto fine = Current::density(t1, ScalarField::parse("1 + sin(2*pi*x1)/2"), 4 * k);
  CHECK(avg == doctest::Approx(eval(fine, f)).epsilon(1e-13));

  // The central shift is the unshifted grid.
  const auto m = ChartedManifold::unit_torus(2);
  const auto T2 = Current::density(m, ScalarField::parse("2 + cos(2*pi*x2)"), 6, true);
  const std::vector<double> half{0.5, 0.5};
  const auto same = T2.shifted(half);
  for (std::size_t j = 0; j < T2.nodes().size(); ++j) {
    CHECK(same.nodes()[j] == T2.nodes()[j]);
    CHECK(same.weights()[j] == doctest::Approx(T2.weights()[j]).epsilon(1e-15));
  }
  const auto E = Current::dirac(t1, {0.3});
  const double u = 0.9;
  CHECK(E.shifted(std::span<const double>(&u, 1)).nodes()[0][0] == 0.3);

  const auto s1 = quadrature_shift(3, 7, 3);
  CHECK(s1 == quadrature_shift(3, 7, 3));
  CHECK(s1 != quadrature_shift(3, 8, 3));
  for (double v : s1) CHECK((v > 0.0 && v < 1.0));
}

TEST_CASE("step counts") {
  CHECK(step_count(1.0, 1e-3) == 1000);
  CHECK(step_count(0.25, 1e-3) == 250);
  CHECK_THROWS_AS(step_count(1.0, 0.3), ConfigurationError);
  CHECK_THROWS_AS(step_count(1.0, 0.0), ConfigurationError);
}

TEST_CASE("mean action") {
  const auto t1 = ChartedManifold::unit_torus(1);
  const auto f = ScalarField::parse("sin(2*pi*x1)");

  SUBCASE("identity flow is exact") {
    const StratonovichSystem zero(t1, VectorField::zero(1), {VectorField::zero(1)});
    const auto T = Current::density(t1, ScalarField::parse("1 + sin(2*pi*x1)/2"), 16);
    const auto est = mean_action(T, f, zero, 0.1, 1e-2, 5, 10);
    CHECK(est.value == eval(T, f));
    CHECK(est.std_error == 0.0);
    CHECK(est.n_paths == 10);
  }
  SUBCASE("characteristic flow of a Dirac mass") {
    const StratonovichSystem shift(t1, field({"1"}), {});
    const auto est = mean_action(Current::dirac(t1, {0.0}), f, shift, 0.25, 1e-3, 1, 2);
    CHECK(est.value == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("Lebesgue under Brownian translations") {
    const auto est = mean_action(Current::volume(t1, 16), f, systems::additive_circle(), 1.0, 1e-2, 9, 50);
    CHECK(std::abs(est.value) <= 3 * est.std_error + 1e-12);
  }
  SUBCASE("heat kernel of a Dirac mass") {
    // E cos(2 pi (x0 + B_t)) = cos(2 pi x0) exp(-2 pi^2 t).
    const auto g = ScalarField::parse("cos(2*pi*x1)");
    const auto est = mean_action(Current::dirac(t1, {0.1}), g, systems::additive_circle(), 0.05, 1e-2, 4, 4000);
    const double exact = std::cos(2 * kPi * 0.1) * std::exp(-2 * kPi * kPi * 0.05);
    CHECK(std::abs(est.value - exact) < 4 * est.std_error);
    CHECK(est.std_error > 0.0);
  }
  SUBCASE("results do not depend on the worker count") {
    const auto T = Current::volume(t1, 8);
    const auto sys = systems::multiplicative_circle();
    const auto a = mean_action(T, f, sys, 0.1, 1e-2, 2, 16, 1);
    const auto b = mean_action(T, f, sys, 0.1, 1e-2, 2, 16, 4);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
  }
  CHECK_THROWS_AS(mean_action(Current::volume(t1, 4), f, systems::additive_circle(), 0.1, 1e-2, 1, 1), ConfigurationError);
}

TEST_CASE("derivative currents") {
  const auto t1 = ChartedManifold::unit_torus(1);
  const auto dx = field({"1"});
  const auto leb = Current::volume(t1, 16);
  CHECK(derivative_current_eval(dx, leb, ScalarField::constant(2.0)) == 0.0);
  for (const auto& b : make_test_basis(t1, 3)) CHECK(std::abs(derivative_current_eval(dx, leb, b.f)) < 1e-10);

  // -T(Xf) = int 2 pi sin(2 pi x) (1 + sin(2 pi x)/2) dx = pi/2.
  const auto T = Current::density(t1, ScalarField::parse("1 + sin(2*pi*x1)/2"), 16);
  CHECK(derivative_current_eval(dx, T, ScalarField::parse("cos(2*pi*x1)")) == doctest::Approx(kPi / 2).epsilon(1e-12));

  // Callable test functions fall back to finite differences.
  const ScalarField opaque([](const Point& p) { return std::cos(2 * kPi * p[0]); });
  CHECK(derivative_current_eval(dx, T, opaque) == doctest::Approx(kPi / 2).epsilon(1e-8));
}

TEST_CASE("strict and generator residuals") {
  const auto t1 = ChartedManifold::unit_torus(1);
  const auto leb1 = Current::volume(t1, 16);

  SUBCASE("zero system") {
    const StratonovichSystem zero(t1, VectorField::zero(1), {VectorField::zero(1)});
    for (double r : generator_residuals(leb1, zero, make_test_basis(t1, 3))) CHECK(r == 0.0);
    for (const auto& row : strict_residuals(leb1, zero, make_test_basis(t1, 3)))
      for (double s : row) CHECK(s == 0.0);
  }
  SUBCASE("Brownian motion on T^2") {
    const auto m = ChartedManifold::unit_torus(2);
    const auto basis = make_test_basis(m, 3);
    const auto res = generator_residuals(Current::volume(m, 16), systems::translation_bm_torus(), basis);
    CHECK(res.size() == basis.size());
    for (double r : res) CHECK(std::abs(r) < 1e-8);
  }
  SUBCASE("sink field") {
    const TestBasis basis(1, {{"cos(2*pi*x1)", ScalarField::parse("cos(2*pi*x1)")}});
    const auto sys = systems::sink_circle();
    CHECK(generator_residuals(leb1, sys, basis)[0] == doctest::Approx(-kPi).epsilon(1e-12));
    const auto s = strict_residuals(leb1, sys, basis);
    REQUIRE(s.size() == 1);
    CHECK(s[0][0] == doctest::Approx(kPi).epsilon(1e-12));
  }
  SUBCASE("diffusion term has the sign of the generator") {
    // For f = cos(2 pi x), (1/2) f'' = -2 pi^2 f: the residual of a Dirac mass
    // at x0 is the initial slope of E f(x0 + B_t).
    const TestBasis basis(1, {{"cos(2*pi*x1)", ScalarField::parse("cos(2*pi*x1)")}});
    const double r = generator_residuals(Current::dirac(t1, {0.1}), systems::additive_circle(), basis)[0];
    CHECK(r == doctest::Approx(-2 * kPi * kPi * std::cos(2 * kPi * 0.1)).epsilon(1e-12));
  }
  SUBCASE("divergence-free fields pass both checks") {
    const auto m = ChartedManifold::unit_torus(2);
    const auto basis = make_test_basis(m, 3);
    const auto leb = Current::volume(m, 16);
    const auto sys = systems::hamiltonian_torus();
    for (const auto& row : strict_residuals(leb, sys, basis))
      for (double s : row) CHECK(std::abs(s) < 1e-8);
    for (double r : generator_residuals(leb, sys, basis)) CHECK(std::abs(r) < 1e-8);
  }
}

TEST_CASE("quadrature commutes with Riemann-Stieltjes sums along a path") {
  const auto m = ChartedManifold::unit_torus(2);
  const auto sys = systems::hamiltonian_torus();
  const auto T = Current::density(m, ScalarField::parse("1 + cos(2*pi*x1)*sin(2*pi*x2)/3"), 6);
  const auto g = ScalarField::parse("sin(2*pi*x1) + cos(4*pi*x2)");
  const double dt = 0.02;
  const int steps = 25;
  for (int path = 0; path < 3; ++path) {
    const auto noise = generate_noise(17, path, sys.m(), dt, steps);
    // Trajectories of every node, shared by both sides.
    std::vector<FlowResult> flows;
    for (const auto& x : T.nodes()) flows.push_back(flow(sys, x, steps * dt, dt, noise));
    for (int i = 1; i <= sys.m(); ++i) {
      double rhs = 0.0;
      for (int k = 0; k < steps; ++k) {
        std::vector<double> gk(T.nodes().size());
        for (std::size_t j = 0; j < gk.size(); ++j) gk[j] = g(flows[j].trajectory[k]);
        double tk = 0.0;
        for (std::size_t j = 0; j < gk.size(); ++j) tk += T.weights()[j] * gk[j];
        rhs += tk * noise.increment(k, i - 1);
      }
      double lhs = 0.0;
      for (std::size_t j = 0; j < T.nodes().size(); ++j) {
        double sum = 0.0;
        for (int k = 0; k < steps; ++k) sum += g(flows[j].trajectory[k]) * noise.increment(k, i - 1);
        lhs += T.weights()[j] * sum;
      }
      CHECK(std::abs(lhs - rhs) < 1e-14);
    }
  }
}
