#include "stochflow/invariance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <random>

#include <json.hpp>

#include "stochflow/errors.hpp"
#include "stochflow/parallel.hpp"

namespace stochflow {

namespace {

constexpr std::array<std::pair<CheckKind, std::string_view>, 9> kKindNames{{
    {CheckKind::strict_nform, "strict_nform"},
    {CheckKind::mean_nform, "mean_nform"},
    {CheckKind::strict_residual, "strict_residual"},
    {CheckKind::mean_residual, "mean_residual"},
    {CheckKind::empirical_pathwise, "empirical_pathwise"},
    {CheckKind::empirical_mean, "empirical_mean"},
    {CheckKind::foliation_verdict, "foliation_verdict"},
    {CheckKind::volume_preservation, "volume_preservation"},
    {CheckKind::jacobian_consistency, "jacobian_consistency"},
}};

// Absolute slack in the mean-mode bound for summation roundoff.
constexpr double kRoundoffFloor = 1e-12;

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

int grid_of(const Current& T) {
  if (const auto* d = std::get_if<Current::Density>(&T.spec())) return d->grid;
  return 0;
}

void require_positive(const QuadratureGrid& g, const ScalarField& density) {
  for (const auto& p : g.nodes)
    if (!(density(p) > 0.0)) throw DegenerateDensityError("density is not positive on the quadrature grid");
}

} // namespace

std::string_view to_string(CheckKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<CheckKind> check_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  return std::nullopt;
}

InvarianceReport InvarianceReport::make(CheckKind kind, double residual, double tolerance, ReportMetadata meta) {
  InvarianceReport r;
  r.kind = kind;
  r.residual = residual;
  r.tolerance = tolerance;
  r.verdict = residual <= tolerance;
  r.meta = meta;
  return r;
}

std::string report_json(const InvarianceReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(r.kind);
  j["residual"] = number(r.residual);
  j["tolerance"] = number(r.tolerance);
  j["verdict"] = r.verdict;
  j["dt"] = r.meta.dt;
  j["T"] = r.meta.T;
  j["n_paths"] = r.meta.n_paths;
  j["grid"] = r.meta.grid;
  j["basisK"] = r.meta.basis_k;
  j["seed"] = r.meta.seed;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : r.per_basis) {
    nlohmann::ordered_json row;
    row["basis_index"] = e.basis_index;
    row["field_index"] = e.field_index;
    row["label"] = e.label;
    row["value"] = number(e.value);
    if (e.reference) row["reference"] = number(*e.reference);
    if (e.std_error) row["std_error"] = number(*e.std_error);
    rows.push_back(std::move(row));
  }
  j["per_basis"] = std::move(rows);
  if (r.kind == CheckKind::foliation_verdict) {
    auto off = nlohmann::ordered_json::array();
    for (const auto& [label, trace] : r.offending) off.push_back({label, trace});
    j["offending"] = std::move(off);
    j["drift"] = r.drift;
  }
  return j.dump();
}

void write_residual_csv(std::ostream& out, const InvarianceReport& r) {
  out << "check,basis_index,field_index,value\n";
  char buf[32];
  for (const auto& e : r.per_basis) {
    std::snprintf(buf, sizeof buf, "%.17g", e.value);
    out << to_string(r.kind) << ',';
    if (e.basis_index >= 0) out << e.basis_index;
    out << ',';
    if (e.field_index >= 0) out << e.field_index;
    out << ',' << buf << '\n';
  }
}

InvarianceReport check_strict_nform(const ChartedManifold& m, const ScalarField& density,
                                    std::span<const VectorField> fields, int grid, double tolerance) {
  const auto g = midpoint_grid(m, grid);
  require_positive(g, density);
  double worst = 0.0;
  std::vector<ReportEntry> rows;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const ScalarField div = divergence_field(m, scaled(density, fields[i]));
    double mx = 0.0;
    for (const auto& p : g.nodes) mx = std::max(mx, std::abs(div(p)));
    rows.push_back({-1, static_cast<int>(i), "max |div(f X_" + std::to_string(i) + ")|", mx, {}, {}});
    worst = std::max(worst, mx);
  }
  auto r = InvarianceReport::make(CheckKind::strict_nform, worst, tolerance, {.grid = grid});
  r.per_basis = std::move(rows);
  return r;
}

InvarianceReport check_mean_nform(const ChartedManifold& m, const ScalarField& density, const VectorField& drift,
                                  std::span<const VectorField> diffusions, int grid, double tolerance) {
  const auto g = midpoint_grid(m, grid);
  require_positive(g, density);
  const ScalarField div0 = divergence_field(m, scaled(density, drift));
  struct Term {
    ScalarField inner, outer, div;
  };
  std::vector<Term> terms;
  for (const auto& X : diffusions) {
    ScalarField inner = divergence_field(m, scaled(density, X));
    ScalarField outer = directional_derivative(m, X, inner);
    terms.push_back({std::move(inner), std::move(outer), divergence_field(m, X)});
  }
  double worst = 0.0;
  for (const auto& p : g.nodes) {
    double v = -div0(p);
    for (const auto& t : terms) v += 0.5 * (t.outer(p) + t.div(p) * t.inner(p));
    worst = std::max(worst, std::abs(v));
  }
  return InvarianceReport::make(CheckKind::mean_nform, worst, tolerance, {.grid = grid});
}

InvarianceReport check_strict_residual(const Current& T, const StratonovichSystem& sys, const TestBasis& basis,
                                       double tolerance) {
  const auto s = strict_residuals(T, sys, basis);
  double worst = 0.0;
  std::vector<ReportEntry> rows;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t k = 0; k < s[i].size(); ++k) {
      rows.push_back({static_cast<int>(k), static_cast<int>(i), basis[k].label, s[i][k], {}, {}});
      worst = std::max(worst, std::abs(s[i][k]));
    }
  auto r = InvarianceReport::make(CheckKind::strict_residual, worst, tolerance,
                                  {.grid = grid_of(T), .basis_k = basis.cutoff()});
  r.per_basis = std::move(rows);
  return r;
}

InvarianceReport check_mean_residual(const Current& T, const StratonovichSystem& sys, const TestBasis& basis,
                                     double tolerance) {
  const auto res = generator_residuals(T, sys, basis);
  double worst = 0.0;
  std::vector<ReportEntry> rows;
  for (std::size_t k = 0; k < res.size(); ++k) {
    rows.push_back({static_cast<int>(k), -1, basis[k].label, res[k], {}, {}});
    worst = std::max(worst, std::abs(res[k]));
  }
  auto r = InvarianceReport::make(CheckKind::mean_residual, worst, tolerance,
                                  {.grid = grid_of(T), .basis_k = basis.cutoff()});
  r.per_basis = std::move(rows);
  return r;
}

namespace {

std::vector<ScalarField> functions_of(const TestBasis& basis) {
  std::vector<ScalarField> fs;
  fs.reserve(basis.size());
  for (const auto& b : basis) fs.push_back(b.f);
  return fs;
}

std::vector<double> evals(const Current& T, std::span<const ScalarField> fs) {
  std::vector<double> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(eval(T, f));
  return out;
}

} // namespace

InvarianceReport empirical_check(const Current& T, const StratonovichSystem& sys, const TestBasis& basis,
                                 const SimulationParams& params, EmpiricalMode mode) {
  const auto fs = functions_of(basis);
  const auto ref = evals(T, fs);
  const int steps = step_count(params.t, params.dt);
  ReportMetadata meta{params.dt, params.t, 0, grid_of(T), basis.cutoff(), params.seed};
  std::vector<ReportEntry> rows;

  if (mode == EmpiricalMode::pathwise) {
    const int probes = params.probe_paths;
    if (probes < 1) throw ConfigurationError("pathwise check needs at least one probe path");
    std::vector<std::vector<double>> pulled(probes);
    parallel_for(static_cast<std::size_t>(probes), params.threads, [&](std::size_t p) {
      pulled[p] = pullback_eval(T, fs, sys, params.t, params.dt,
                                generate_noise(params.seed, p, sys.m(), params.dt, steps));
    });
    double worst = 0.0;
    for (std::size_t k = 0; k < fs.size(); ++k) {
      double mx = 0.0;
      for (int p = 0; p < probes; ++p) mx = std::max(mx, std::abs(pulled[p][k] - ref[k]));
      rows.push_back({static_cast<int>(k), -1, basis[k].label, mx, ref[k], {}});
      worst = std::max(worst, mx);
    }
    meta.n_paths = probes;
    auto r = InvarianceReport::make(CheckKind::empirical_pathwise, worst, params.tolerance, meta);
    r.per_basis = std::move(rows);
    return r;
  }

  const auto est =
      mean_action(T, fs, sys, params.t, params.dt, params.seed, params.n_paths, params.threads, Quadrature::shifted);
  double worst = -INFINITY;
  for (std::size_t k = 0; k < fs.size(); ++k) {
    worst = std::max(worst, std::abs(est[k].value - ref[k]) - 3.0 * est[k].std_error);
    rows.push_back({static_cast<int>(k), -1, basis[k].label, est[k].value, ref[k], est[k].std_error});
  }
  meta.n_paths = params.n_paths;
  auto r = InvarianceReport::make(CheckKind::empirical_mean, worst, params.bias_constant * params.dt + kRoundoffFloor, meta);
  r.per_basis = std::move(rows);
  return r;
}

double calibrate_bias_constant(const Current& T, const StratonovichSystem& sys, const TestBasis& basis,
                               const SimulationParams& params) {
  const auto fs = functions_of(basis);
  const int steps = step_count(params.t, params.dt);
  if (params.n_paths < 1) throw ConfigurationError("calibration needs at least one path");
  std::vector<std::vector<double>> diff(params.n_paths);
  parallel_for(static_cast<std::size_t>(params.n_paths), params.threads, [&](std::size_t p) {
    const auto fine = generate_noise(params.seed, p, sys.m(), params.dt / 2, 2 * steps);
    const auto Tp = T.shifted(quadrature_shift(params.seed, p, sys.dim()));
    const auto a = pullback_eval(Tp, fs, sys, params.t, params.dt, fine.coarsened(2));
    const auto b = pullback_eval(Tp, fs, sys, params.t, params.dt / 2, fine);
    diff[p].resize(fs.size());
    for (std::size_t k = 0; k < fs.size(); ++k) diff[p][k] = a[k] - b[k];
  });
  double worst = 0.0;
  for (std::size_t k = 0; k < fs.size(); ++k) {
    double s = 0.0;
    for (int p = 0; p < params.n_paths; ++p) s += diff[p][k];
    worst = std::max(worst, std::abs(s / params.n_paths));
  }
  return 2.0 * worst / params.dt;
}

namespace {

struct JacobianSample {
  double max_dev;  // max_t |J_t - 1|
  double j_end;    // co-evolved J(T)
  double j_fd;     // finite-difference J(T)
};

std::vector<JacobianSample> jacobian_samples(const StratonovichSystem& sys, const Point& x0,
                                             const SimulationParams& params) {
  const int steps = step_count(params.t, params.dt);
  if (params.n_paths < 1) throw ConfigurationError("Jacobian check needs at least one path");
  std::vector<JacobianSample> out(params.n_paths);
  parallel_for(static_cast<std::size_t>(params.n_paths), params.threads, [&](std::size_t p) {
    const auto noise = generate_noise(params.seed, p, sys.m(), params.dt, steps);
    const auto fr = flow_with_jacobian(sys, x0, params.t, params.dt, noise);
    double dev = 0.0;
    for (double l : fr.log_jacobian) dev = std::max(dev, std::abs(std::exp(l) - 1.0));
    out[p] = {dev, std::exp(fr.log_jacobian.back()), fd_jacobian(sys, x0, params.t, params.dt, noise)};
  });
  return out;
}

} // namespace

InvarianceReport check_volume_preservation(const StratonovichSystem& sys, const Point& x0,
                                           const SimulationParams& params) {
  const auto samples = jacobian_samples(sys, x0, params);
  double worst = 0.0;
  std::vector<ReportEntry> rows;
  for (std::size_t p = 0; p < samples.size(); ++p) {
    const double v = std::max(samples[p].max_dev, std::abs(samples[p].j_fd - 1.0));
    rows.push_back({static_cast<int>(p), -1, "path " + std::to_string(p), v, {}, {}});
    worst = std::max(worst, v);
  }
  auto r = InvarianceReport::make(CheckKind::volume_preservation, worst, params.tolerance,
                                  {params.dt, params.t, params.n_paths, 0, 0, params.seed});
  r.per_basis = std::move(rows);
  return r;
}

InvarianceReport check_jacobian_consistency(const StratonovichSystem& sys, const Point& x0,
                                            const SimulationParams& params) {
  const auto samples = jacobian_samples(sys, x0, params);
  double worst = 0.0;
  std::vector<ReportEntry> rows;
  for (std::size_t p = 0; p < samples.size(); ++p) {
    const double v = std::abs(samples[p].j_fd - samples[p].j_end) / samples[p].j_end;
    rows.push_back({static_cast<int>(p), -1, "path " + std::to_string(p), v, samples[p].j_end, {}});
    worst = std::max(worst, v);
  }
  auto r = InvarianceReport::make(CheckKind::jacobian_consistency, worst, params.tolerance,
                                  {params.dt, params.t, params.n_paths, 0, 0, params.seed});
  r.per_basis = std::move(rows);
  return r;
}

void verify_realization(const liealg::LieAlgebra& g, const FrameRealization& r, double tolerance) {
  const int n = g.dim();
  if (static_cast<int>(r.frame.size()) != n)
    throw RealizationError("frame has " + std::to_string(r.frame.size()) + " fields for an algebra of dimension " +
                           std::to_string(n));
  for (const auto& V : r.frame)
    if (V.dim() != r.manifold.dim()) throw RealizationError("frame field dimension does not match the manifold");
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < 16; ++s) {
    Point p(r.manifold.dim());
    for (int a = 0; a < p.dim(); ++a) p[a] = u(rng) * r.manifold.box_length(a);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Tangent diff = lie_bracket(r.manifold, r.frame[i], r.frame[j], p);
        for (int k = 0; k < n; ++k)
          if (g.c(i, j, k) != 0.0) diff.axpy(-g.c(i, j, k), r.frame[k](p));
        if (max_abs(diff) > tolerance)
          throw RealizationError("[" + g.label(i) + ", " + g.label(j) +
                                 "] of the frame fields does not match the structure constants");
      }
  }
}

std::optional<FrameRealization> builtin_realization(const liealg::LieAlgebra& g) {
  auto same = [&](const liealg::LieAlgebra& other) {
    if (other.dim() != g.dim()) return false;
    for (int i = 0; i < g.dim(); ++i)
      for (int j = 0; j < g.dim(); ++j)
        for (int k = 0; k < g.dim(); ++k)
          if (std::abs(g.c(i, j, k) - other.c(i, j, k)) > liealg::kTolerance) return false;
    return true;
  };
  if (same(liealg::LieAlgebra::heisenberg())) {
    auto m = ChartedManifold::heisenberg();
    return FrameRealization{m, m.invariant_frame()};
  }
  if (g.dim() <= kMaxDim && same(liealg::LieAlgebra::abelian(g.dim()))) {
    auto m = ChartedManifold::unit_torus(g.dim());
    return FrameRealization{m, m.invariant_frame()};
  }
  return std::nullopt;
}

StratonovichSystem foliated_system(const liealg::LieAlgebra& g, const liealg::Subalgebra& h,
                                   const FrameRealization& r) {
  const auto d = liealg::foliated_drift(g, h);
  const int dim = r.manifold.dim();
  std::vector<ScalarField> comps;
  for (int a = 0; a < dim; ++a) {
    bool analytic = true;
    for (int k : h.indices()) analytic = analytic && r.frame[k].component(a).analytic();
    if (analytic) {
      expr::Expr sum = expr::Expr::constant(0.0);
      for (std::size_t q = 0; q < d.size(); ++q)
        if (d[q] != 0.0)
          sum = sum + expr::Expr::constant(d[q]) * r.frame[h.indices()[q]].component(a).expression();
      comps.emplace_back(sum);
    } else {
      std::vector<ScalarField> parts;
      for (int k : h.indices()) parts.push_back(r.frame[k].component(a));
      comps.emplace_back([d, parts](const Point& p) {
        double s = 0.0;
        for (std::size_t q = 0; q < d.size(); ++q) s += d[q] * parts[q](p);
        return s;
      });
    }
  }
  std::vector<VectorField> diffusions;
  for (int k : h.indices()) diffusions.push_back(r.frame[k]);
  return StratonovichSystem(r.manifold, VectorField(std::move(comps)), std::move(diffusions));
}

bool FoliationResult::all_true() const {
  return verdict.verdict && std::all_of(checks.begin(), checks.end(), [](const auto& r) { return r.verdict; });
}

FoliationResult foliation_pipeline(const liealg::LieAlgebra& g, const liealg::Subalgebra& h,
                                   const std::optional<FrameRealization>& realization,
                                   const FoliationOptions& options) {
  FoliationResult out;
  const auto v = liealg::invariance_verdict(g, h);
  double worst = 0.0;
  for (const auto& [i, trace] : v.offending) worst = std::max(worst, std::abs(trace));
  out.verdict = InvarianceReport::make(CheckKind::foliation_verdict, worst, liealg::kTolerance);
  for (const auto& [i, trace] : v.offending) out.verdict.offending.emplace_back(g.label(i), trace);
  out.drift = liealg::foliated_drift(g, h);
  out.verdict.drift = out.drift;
  for (int i : h.indices())
    out.verdict.per_basis.push_back({-1, i, g.label(i), liealg::tr_ad_restricted(g, h, i), {}, {}});
  if (!realization) return out;

  verify_realization(g, *realization);
  out.system.emplace(foliated_system(g, h, *realization));
  const auto& sys = *out.system;
  const auto T = Current::volume(realization->manifold, options.grid);
  const auto basis = make_test_basis(realization->manifold, options.basis_k);

  out.checks.push_back(check_mean_residual(T, sys, basis, options.generator_tolerance));

  // Every frame field, inside h or not, annihilates the volume current.
  double worst_frame = 0.0;
  std::vector<ReportEntry> rows;
  for (int i = 0; i < g.dim(); ++i)
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const double s = derivative_current_eval(realization->frame[i], T, basis[k].f);
      rows.push_back({static_cast<int>(k), i, basis[k].label, s, {}, {}});
      worst_frame = std::max(worst_frame, std::abs(s));
    }
  auto frame_report = InvarianceReport::make(CheckKind::strict_residual, worst_frame, options.frame_tolerance,
                                             {.grid = options.grid, .basis_k = options.basis_k});
  frame_report.per_basis = std::move(rows);
  out.checks.push_back(std::move(frame_report));

  out.checks.push_back(empirical_check(T, sys, basis, options.simulation, EmpiricalMode::mean));
  if (out.verdict.verdict)
    out.checks.push_back(empirical_check(T, sys, basis, options.simulation, EmpiricalMode::pathwise));
  return out;
}

} // namespace stochflow
