// Acceptance suite: one line per criterion with the measured quantity, its
// bound, the runtime and the runtime budget. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "stochflow/invariance.hpp"
#include "stochflow/presets.hpp"
#include "stochflow/runner.hpp"
#include "stochflow/systems.hpp"

using namespace stochflow;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool ok;
  std::string detail;
};

int failures = 0;

void criterion(int n, const char* title, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v{false, ""};
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = v.ok && in_time;
  if (!pass) ++failures;
  std::printf("criterion %d %s  %s: %s  [%.3g s, budget %.3g s]\n", n, pass ? "PASS" : "FAIL", title,
              v.detail.c_str(), secs, budget_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// x' = sin(2 pi x), (log J)' = 2 pi cos(2 pi x) by classical RK4.
std::pair<double, double> rk4_sink(double x, double T, int steps) {
  const double h = T / steps;
  double l = 0.0;
  auto fx = [](double y) { return std::sin(2 * kPi * y); };
  auto fl = [](double y) { return 2 * kPi * std::cos(2 * kPi * y); };
  for (int s = 0; s < steps; ++s) {
    const double k1 = fx(x), j1 = fl(x);
    const double k2 = fx(x + 0.5 * h * k1), j2 = fl(x + 0.5 * h * k1);
    const double k3 = fx(x + 0.5 * h * k2), j3 = fl(x + 0.5 * h * k2);
    const double k4 = fx(x + h * k3), j4 = fl(x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    l += h / 6 * (j1 + 2 * j2 + 2 * j3 + j4);
  }
  return {x, l};
}

} // namespace

int main() {
  std::printf("stochflow acceptance suite\n");

  criterion(1, "sl(2,R) trace criterion on h = {X, Y}", 1e-3, [] {
    const auto g = liealg::LieAlgebra::sl2();
    const liealg::Subalgebra h(g, {0, 1});
    const double tx = liealg::tr_ad_restricted(g, h, 0);
    const double ty = liealg::tr_ad_restricted(g, h, 1);
    const auto v = liealg::invariance_verdict(g, h);
    return Verdict{tx == 2.0 && ty == 0.0 && !v.totally_invariant,
                   fmt("Tr_h ad(X) = %g, Tr_h ad(Y) = %g, totally invariant = %s", tx, ty,
                       v.totally_invariant ? "true" : "false")};
  });

  criterion(2, "Heisenberg algebra is nilpotent; every closed coordinate subalgebra is totally invariant", 1e-3, [] {
    const auto g = liealg::LieAlgebra::heisenberg();
    const bool nil = liealg::is_nilpotent(g);
    const auto subs = liealg::coordinate_subalgebras(g);
    bool all = true;
    double max_drift = 0.0;
    for (const auto& h : subs) {
      all = all && liealg::invariance_verdict(g, h).totally_invariant;
      for (double d : liealg::foliated_drift(g, h)) max_drift = std::max(max_drift, std::abs(d));
    }
    return Verdict{nil && all && max_drift == 0.0,
                   fmt("nilpotent = %s, %zu subalgebras all invariant = %s, max |drift| = %g", nil ? "true" : "false",
                       subs.size(), all ? "true" : "false", max_drift)};
  });

  criterion(3, "Hamiltonian flow on T^2 preserves volume (dt 1e-3, T 1, 100 paths)", 120.0, [] {
    const auto sys = systems::hamiltonian_torus();
    const Point x0{0.3, 0.6};
    double max_dev = 0.0, max_fd = 0.0, max_gap = 0.0;
    for (int p = 0; p < 100; ++p) {
      const auto noise = generate_noise(2024, p, sys.m(), 1e-3, 1000);
      const auto fr = flow_with_jacobian(sys, x0, 1.0, 1e-3, noise);
      for (double l : fr.log_jacobian) max_dev = std::max(max_dev, std::abs(std::exp(l) - 1.0));
      const double j = std::exp(fr.log_jacobian.back());
      const double jfd = fd_jacobian(sys, x0, 1.0, 1e-3, noise);
      max_fd = std::max(max_fd, std::abs(jfd - 1.0));
      max_gap = std::max(max_gap, std::abs(jfd - j) / j);
    }
    return Verdict{max_dev < 1e-2 && max_fd < 1e-2 && max_gap < 1e-2,
                   fmt("max_t |J-1| = %.3g, max |J_fd-1| = %.3g, max |J_fd-J|/J = %.3g (bounds 1e-2)", max_dev, max_fd,
                       max_gap)};
  });

  criterion(4, "Jacobian oracles on sin(2 pi x) d/dx over T^1", 30.0, [] {
    const auto sys = systems::sink_circle();
    const double dt = 1e-3;
    const int steps = 1000;
    double worst_ref = 0.0, worst_fd = 0.0;
    for (double x0 : {0.05, 0.1, 0.3, 0.45, 0.6, 0.85}) {
      const auto noise = generate_noise(1, 0, 0, dt, steps);
      const auto fr = flow_with_jacobian(sys, {x0}, 1.0, dt, noise);
      const double j = std::exp(fr.log_jacobian.back());
      const double jref = std::exp(rk4_sink(x0, 1.0, steps * 100).second);
      const double jfd = fd_jacobian(sys, {x0}, 1.0, dt, noise);
      worst_ref = std::max(worst_ref, std::abs(j - jref) / jref);
      worst_fd = std::max(worst_fd, std::abs(jfd - j) / j);
    }
    return Verdict{worst_ref < 1e-3 && worst_fd < 1e-2,
                   fmt("vs RK4 at dt/100: %.3g (bound 1e-3), vs fd_jacobian: %.3g (bound 1e-2)", worst_ref, worst_fd)};
  });

  criterion(5, "strict and generator residuals, K = 3", 30.0, [] {
    const auto sys = systems::hamiltonian_torus();
    const auto m = sys.manifold();
    const auto T = Current::volume(m, 16);
    const auto basis = make_test_basis(m, 3);
    const auto strict = check_strict_residual(T, sys, basis, 1e-8);
    const auto gen = check_mean_residual(T, sys, basis, 1e-8);
    const auto t1 = ChartedManifold::unit_torus(1);
    const TestBasis cosine(1, {{"cos(2*pi*x1)", ScalarField::parse("cos(2*pi*x1)")}});
    const double neg = strict_residuals(Current::volume(t1, 16), systems::sink_circle(), cosine)[0][0];
    const double rel = std::abs(neg - kPi) / kPi;
    return Verdict{strict.residual < 1e-8 && gen.residual < 1e-8 && rel < 0.02,
                   fmt("divergence-free: strict %.3g, generator %.3g (bound 1e-8); sink: %.10g vs pi, rel %.2g "
                       "(bound 0.02)",
                       strict.residual, gen.residual, neg, rel)};
  });

  criterion(6, "mean invariance by simulation (1000 paths, dt 1e-3, t 1)", 300.0, [] {
    const auto sys = systems::hamiltonian_torus();
    const auto m = sys.manifold();
    SimulationParams p;
    p.dt = 1e-3;
    p.t = 1.0;
    p.n_paths = 1000;
    p.seed = 1;
    p.bias_constant = 0.25;  // dt-halving calibration of this system
    const auto r = empirical_check(Current::volume(m, 16), sys, make_test_basis(m, 3), p, EmpiricalMode::mean);
    double max_dev = 0.0, max_se = 0.0;
    for (const auto& e : r.per_basis) {
      max_dev = std::max(max_dev, std::abs(e.value - *e.reference));
      max_se = std::max(max_se, *e.std_error);
    }
    return Verdict{r.verdict, fmt("max_k (|mean - eval| - 3 se) = %.3g <= C dt = %.3g; max |mean - eval| = %.3g, "
                                  "max se = %.3g, %zu basis functions",
                                  r.residual, r.tolerance, max_dev, max_se, r.per_basis.size())};
  });

  criterion(7, "harmonic measure on the Heisenberg nilmanifold, h = {X, Z}", 300.0, [] {
    const auto g = liealg::LieAlgebra::heisenberg();
    FoliationOptions opt;
    opt.grid = 8;
    opt.basis_k = 2;
    opt.simulation.dt = 1e-3;
    opt.simulation.t = 1.0;
    opt.simulation.n_paths = 1000;
    const auto res = foliation_pipeline(g, liealg::Subalgebra(g, {0, 2}), builtin_realization(g), opt);
    if (res.checks.size() != 4) return Verdict{false, "pipeline did not run every check"};
    return Verdict{res.all_true(),
                   fmt("verdict %s; generator %.3g (bound 1e-6); Lemma-2 %.3g (bound 1e-8); mean excess %.3g "
                       "(bound %.3g); pathwise %.3g (bound %.3g)",
                       res.verdict.verdict ? "true" : "false", res.checks[0].residual, res.checks[1].residual,
                       res.checks[2].residual, res.checks[2].tolerance, res.checks[3].residual,
                       res.checks[3].tolerance)};
  });

  criterion(8, "strong convergence on the multiplicative-noise circle", 120.0, [] {
    // RMS endpoint gap between the dt and dt/2 solutions on one Brownian path.
    const auto sys = systems::multiplicative_circle();
    const double x0 = 0.2, T = 1.0;
    const int n_paths = 200;
    constexpr int kLevels = 5;
    constexpr int kFinest = 6400;
    const int steps[kLevels] = {400, 800, 1600, 3200, 6400};
    double sq[kLevels - 1] = {};
    for (int p = 0; p < n_paths; ++p) {
      const auto fine = generate_noise(77, p, 1, T / kFinest, kFinest);
      double x[kLevels];
      for (int l = 0; l < kLevels; ++l) x[l] = flow_endpoint_lifted(sys, {x0}, fine.coarsened(kFinest / steps[l]))[0];
      for (int l = 0; l + 1 < kLevels; ++l) sq[l] += (x[l] - x[l + 1]) * (x[l] - x[l + 1]);
    }
    double gap[kLevels - 1], worst = 1e9;
    for (int l = 0; l + 1 < kLevels; ++l) gap[l] = std::sqrt(sq[l] / n_paths);
    for (int l = 0; l + 2 < kLevels; ++l) worst = std::min(worst, gap[l] / gap[l + 1]);
    return Verdict{worst >= 1.7, fmt("RMS gaps %.3g %.3g %.3g %.3g for dt = 1/400..1/3200 vs dt/2; min ratio %.3f "
                                     "(bound 1.7), %d paths",
                                     gap[0], gap[1], gap[2], gap[3], worst, n_paths)};
  });

  criterion(9, "determinism: every preset twice with the same seed", 600.0, [] {
    std::string detail;
    bool ok = true;
    for (const auto& p : presets::all()) {
      const auto cfg = presets::load(p.name);
      const auto a = runner::execute(cfg);
      const auto b = runner::execute(cfg);
      ok = ok && a.payload_hash == b.payload_hash;
      detail += std::string(p.name) + " " + a.payload_hash + (a.payload_hash == b.payload_hash ? " = " : " != ") +
                b.payload_hash + "; ";
    }
    return Verdict{ok, detail};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
