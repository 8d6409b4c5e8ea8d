#include "stochflow/runner.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

namespace stochflow::runner {

namespace {

bool simulates(CheckKind k) {
  return k == CheckKind::empirical_pathwise || k == CheckKind::empirical_mean || k == CheckKind::volume_preservation ||
         k == CheckKind::jacobian_consistency;
}

SimulationParams params_of(const config::CheckSpec& c, int threads) {
  SimulationParams p;
  p.t = c.T;
  p.dt = c.dt;
  p.seed = c.seed;
  p.n_paths = c.n_paths;
  p.tolerance = c.tolerance;
  p.bias_constant = c.bias_constant;
  p.probe_paths = c.probes;
  p.threads = threads;
  return p;
}

SimulationParams params_of(const config::LiealgExperiment& l, int threads) {
  SimulationParams p;
  p.t = l.T;
  p.dt = l.dt;
  p.seed = l.seed;
  p.n_paths = l.n_paths;
  p.tolerance = l.tolerance;
  p.bias_constant = l.bias_constant;
  p.probe_paths = l.probes;
  p.threads = threads;
  return p;
}

Point start_point(const config::CheckSpec& c, const ChartedManifold& m) {
  if (!c.x0.empty()) return Point(std::span<const double>(c.x0));
  Point p(m.dim());
  for (int a = 0; a < m.dim(); ++a) p[a] = 0.5 * m.box_length(a);
  return p;
}

liealg::LieAlgebra algebra_of(const config::LiealgExperiment& l, const std::string& base_dir) {
  if (!l.algebra.empty()) return liealg::LieAlgebra::builtin(l.algebra);
  const std::filesystem::path p = std::filesystem::path(l.constants).is_absolute()
                                      ? std::filesystem::path(l.constants)
                                      : std::filesystem::path(base_dir) / l.constants;
  std::ifstream in(p);
  if (!in) throw ConfigurationError("cannot read " + p.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return liealg::LieAlgebra::from_json(text);
}

liealg::Subalgebra subalgebra_of(const liealg::LieAlgebra& g, const config::LiealgExperiment& l) {
  std::vector<int> idx;
  for (int i : l.subalgebra) idx.push_back(i - 1);
  return liealg::Subalgebra(g, idx);
}

std::optional<FrameRealization> realization_of(const liealg::LieAlgebra& g, const config::LiealgExperiment& l) {
  if (l.realization == "none") return std::nullopt;
  auto r = builtin_realization(g);
  if (!r) throw RealizationError("no built-in realization for this algebra; use realization = none");
  return r;
}

FoliationOptions foliation_options(const config::LiealgExperiment& l, int threads) {
  FoliationOptions o;
  o.simulation = params_of(l, threads);
  o.grid = l.grid;
  o.basis_k = l.basis_k;
  return o;
}

std::vector<InvarianceReport> run_flow(const config::FlowExperiment& f, int threads) {
  const auto sys = config::build_system(f);
  const auto& m = sys.manifold();
  const auto density = ScalarField::parse(f.density);
  const std::vector<VectorField> diffusions(sys.fields().begin() + 1, sys.fields().end());
  std::vector<InvarianceReport> out;
  for (const auto& c : f.checks) {
    switch (c.kind) {
    case CheckKind::strict_nform:
      out.push_back(check_strict_nform(m, density, sys.fields(), c.grid, c.tolerance));
      break;
    case CheckKind::mean_nform:
      out.push_back(check_mean_nform(m, density, sys.drift(), diffusions, c.grid, c.tolerance));
      break;
    case CheckKind::strict_residual:
      out.push_back(check_strict_residual(config::build_current(f, m, c.grid), sys, make_test_basis(m, c.basis_k),
                                          c.tolerance));
      break;
    case CheckKind::mean_residual:
      out.push_back(check_mean_residual(config::build_current(f, m, c.grid), sys, make_test_basis(m, c.basis_k),
                                        c.tolerance));
      break;
    case CheckKind::empirical_pathwise:
    case CheckKind::empirical_mean:
      out.push_back(empirical_check(config::build_current(f, m, c.grid), sys, make_test_basis(m, c.basis_k),
                                    params_of(c, threads),
                                    c.kind == CheckKind::empirical_mean ? EmpiricalMode::mean : EmpiricalMode::pathwise));
      break;
    case CheckKind::volume_preservation:
      out.push_back(check_volume_preservation(sys, start_point(c, m), params_of(c, threads)));
      break;
    case CheckKind::jacobian_consistency:
      out.push_back(check_jacobian_consistency(sys, start_point(c, m), params_of(c, threads)));
      break;
    case CheckKind::foliation_verdict:
      throw ConfigurationError("foliation_verdict belongs to a liealg experiment");
    }
  }
  return out;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace

config::ExperimentConfig apply(config::ExperimentConfig cfg, const Overrides& o) {
  if (cfg.flow) {
    for (auto& c : cfg.flow->checks) {
      if (!simulates(c.kind)) continue;
      if (o.seed) c.seed = *o.seed;
      if (o.dt) c.dt = *o.dt;
      if (o.n_paths && c.kind != CheckKind::empirical_pathwise) c.n_paths = *o.n_paths;
    }
    if (cfg.flow->simulate) {
      if (o.seed) cfg.flow->simulate->seed = *o.seed;
      if (o.dt) cfg.flow->simulate->dt = *o.dt;
    }
  }
  if (cfg.liealg) {
    if (o.seed) cfg.liealg->seed = *o.seed;
    if (o.dt) cfg.liealg->dt = *o.dt;
    if (o.n_paths) cfg.liealg->n_paths = *o.n_paths;
  }
  return cfg;
}

bool Outcome::all_true() const {
  for (const auto& r : reports)
    if (!r.verdict) return false;
  return true;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Outcome execute(const config::ExperimentConfig& cfg, int threads) {
  Outcome out;
  if (cfg.flow) {
    out.reports = run_flow(*cfg.flow, threads);
  } else if (cfg.liealg) {
    const auto& l = *cfg.liealg;
    const auto g = algebra_of(l, cfg.base_dir);
    const auto h = subalgebra_of(g, l);
    auto res = foliation_pipeline(g, h, realization_of(g, l), foliation_options(l, threads));
    out.reports.push_back(std::move(res.verdict));
    for (auto& r : res.checks) out.reports.push_back(std::move(r));
  } else {
    throw ConfigurationError("config holds no experiment");
  }

  nlohmann::ordered_json payload;
  payload["name"] = cfg.name;
  payload["config"] = config::serialize(cfg);
  auto checks = nlohmann::ordered_json::array();
  for (const auto& r : out.reports) checks.push_back(nlohmann::ordered_json::parse(report_json(r)));
  payload["checks"] = std::move(checks);
  payload["all_verdicts"] = out.all_true();
  out.payload = payload.dump();
  out.payload_hash = fnv1a_hex(out.payload);
  return out;
}

int run(const config::ExperimentConfig& cfg0, const std::string& out_dir, const Overrides& o, std::ostream& log) {
  try {
    const auto cfg = apply(cfg0, o);
    const auto outcome = execute(cfg, o.threads);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    nlohmann::ordered_json doc;
    doc["payload"] = nlohmann::ordered_json::parse(outcome.payload);
    doc["payload_hash"] = outcome.payload_hash;
    doc["timestamp"] = timestamp();
    {
      std::ofstream f(dir / "report.json");
      f << doc.dump(2) << '\n';
      if (!f) throw Error("cannot write " + (dir / "report.json").string());
    }
    for (std::size_t i = 0; i < outcome.reports.size(); ++i) {
      const auto& r = outcome.reports[i];
      const auto path = dir / ("check_" + std::to_string(i + 1) + "_" + std::string(to_string(r.kind)) + ".csv");
      std::ofstream f(path);
      write_residual_csv(f, r);
      if (!f) throw Error("cannot write " + path.string());
      char line[160];
      std::snprintf(line, sizeof line, "%-22s residual %-12.4g tolerance %-12.4g %s", std::string(to_string(r.kind)).c_str(),
                    r.residual, r.tolerance, r.verdict ? "pass" : "FAIL");
      log << line << '\n';
      for (const auto& [label, trace] : r.offending) log << "  offending: Tr_h ad(" << label << ") = " << trace << '\n';
    }
    log << "payload hash " << outcome.payload_hash << '\n';
    return outcome.exit_code();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

std::vector<double> calibrate(const config::ExperimentConfig& cfg, int threads) {
  std::vector<double> out;
  if (cfg.flow) {
    const auto sys = config::build_system(*cfg.flow);
    for (const auto& c : cfg.flow->checks)
      if (c.kind == CheckKind::empirical_mean)
        out.push_back(calibrate_bias_constant(config::build_current(*cfg.flow, sys.manifold(), c.grid), sys,
                                              make_test_basis(sys.manifold(), c.basis_k), params_of(c, threads)));
  }
  if (cfg.liealg) {
    const auto& l = *cfg.liealg;
    const auto g = algebra_of(l, cfg.base_dir);
    const auto h = subalgebra_of(g, l);
    if (const auto r = realization_of(g, l)) {
      const auto sys = foliated_system(g, h, *r);
      out.push_back(calibrate_bias_constant(Current::volume(r->manifold, l.grid), sys,
                                            make_test_basis(r->manifold, l.basis_k), params_of(l, threads)));
    }
  }
  return out;
}

} // namespace stochflow::runner
