// stochflow: command-line front end.
//
//   stochflow check <config|preset> [--out DIR] [--seed S] [--dt D] [--paths N]
//   stochflow liealg <constants.json|builtin> --subalgebra i,j,...
//   stochflow simulate <config|preset> --trajectory out.csv
//   stochflow calibrate <config|preset>
//   stochflow presets list | show NAME
//
// Exit codes: 0 every verdict holds, 2 some verdict fails, 1 error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stochflow/presets.hpp"
#include "stochflow/runner.hpp"

using namespace stochflow;

namespace {

config::ExperimentConfig load_any(const std::string& what) {
  if (std::filesystem::exists(what)) return config::load_config(what);
  if (presets::find(what)) return presets::load(what);
  throw ConfigurationError("'" + what + "' is neither a file nor a preset (see 'stochflow presets list')");
}

liealg::LieAlgebra algebra_from(const std::string& what) {
  if (std::filesystem::exists(what)) {
    std::ifstream in(what);
    std::stringstream buf;
    buf << in.rdbuf();
    return liealg::LieAlgebra::from_json(buf.str());
  }
  return liealg::LieAlgebra::builtin(what);
}

int cmd_liealg(const std::string& source, const std::vector<int>& sub) {
  const auto g = algebra_from(source);
  std::vector<int> idx;
  for (int i : sub) {
    if (i < 1 || i > g.dim()) throw ConfigurationError("subalgebra index " + std::to_string(i) + " out of range");
    idx.push_back(i - 1);
  }
  const liealg::Subalgebra h(g, idx);
  const auto verdict = liealg::invariance_verdict(g, h);
  nlohmann::ordered_json out;
  out["dim"] = g.dim();
  out["labels"] = g.labels();
  out["subalgebra"] = sub;
  out["nilpotent"] = liealg::is_nilpotent(g);
  out["semisimple"] = liealg::is_semisimple(g);
  auto traces = nlohmann::ordered_json::array();
  for (int i : h.indices()) traces.push_back({g.label(i), liealg::tr_ad_restricted(g, h, i)});
  out["traces"] = traces;
  out["foliated_drift"] = liealg::foliated_drift(g, h);
  out["totally_invariant"] = verdict.totally_invariant;
  auto off = nlohmann::ordered_json::array();
  for (const auto& [i, t] : verdict.offending) off.push_back({g.label(i), t});
  out["offending"] = off;
  std::cout << out.dump(2) << '\n';
  return verdict.totally_invariant ? 0 : 2;
}

int cmd_simulate(const std::string& what, const std::string& csv, const runner::Overrides& o,
                 std::optional<std::uint64_t> path) {
  const auto cfg = runner::apply(load_any(what), o);
  if (!cfg.flow) throw ConfigurationError("simulate needs a flow experiment");
  const auto sys = config::build_system(*cfg.flow);
  const auto sim = cfg.flow->simulate.value_or(config::SimulateSpec{});
  Point x0(sys.dim());
  if (sim.x0.empty())
    for (int a = 0; a < sys.dim(); ++a) x0[a] = 0.5 * sys.manifold().box_length(a);
  else
    x0 = Point(std::span<const double>(sim.x0));
  const int steps = step_count(sim.T, sim.dt);
  const auto noise = generate_noise(sim.seed, path.value_or(sim.path), sys.m(), sim.dt, steps);
  const auto result = flow_with_jacobian(sys, x0, sim.T, sim.dt, noise);
  std::ofstream out(csv);
  write_trajectory_csv(out, result);
  if (!out) throw Error("cannot write " + csv);
  std::cout << "wrote " << result.trajectory.size() << " rows to " << csv << '\n';
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic flows of Stratonovich SDEs and invariance of currents"};
  app.require_subcommand(1);

  runner::Overrides o;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<int> paths;

  auto* check = app.add_subcommand("check", "run the checks of a config file or preset");
  std::string target;
  std::string out_dir = "stochflow_out";
  check->add_option("config", target, "config file or preset name")->required();
  check->add_option("--out", out_dir, "output directory");
  check->add_option("--seed", seed, "override every seed");
  check->add_option("--dt", dt, "override every time step");
  check->add_option("--paths", paths, "override every path count");
  check->add_option("--threads", o.threads, "worker threads (0 = all cores)");

  auto* lie = app.add_subcommand("liealg", "trace criterion for a subalgebra");
  std::string algebra;
  std::vector<int> sub;
  lie->add_option("constants", algebra, "structure-constant JSON file or builtin (sl2, so3, heisenberg, abelian:n)")
      ->required();
  lie->add_option("--subalgebra", sub, "1-based basis indices")->delimiter(',')->required();

  auto* sim = app.add_subcommand("simulate", "write one trajectory with its log-Jacobian");
  std::string sim_target, csv;
  std::optional<std::uint64_t> path;
  sim->add_option("config", sim_target, "config file or preset name")->required();
  sim->add_option("--trajectory", csv, "output CSV")->required();
  sim->add_option("--seed", seed, "override the seed");
  sim->add_option("--dt", dt, "override the time step");
  sim->add_option("--path", path, "path index");

  auto* cal = app.add_subcommand("calibrate", "weak-error constant C of each mean check by dt halving");
  std::string cal_target;
  cal->add_option("config", cal_target, "config file or preset name")->required();
  cal->add_option("--seed", seed, "override every seed");
  cal->add_option("--paths", paths, "override every path count");

  auto* pre = app.add_subcommand("presets", "list or print the shipped presets");
  pre->require_subcommand(1);
  pre->add_subcommand("list", "preset names");
  auto* show = pre->add_subcommand("show", "print a preset");
  std::string preset_name;
  show->add_option("name", preset_name)->required();

  CLI11_PARSE(app, argc, argv);
  o.seed = seed;
  o.dt = dt;
  o.n_paths = paths;

  try {
    if (check->parsed()) return runner::run(load_any(target), out_dir, o, std::cout);
    if (lie->parsed()) return cmd_liealg(algebra, sub);
    if (sim->parsed()) return cmd_simulate(sim_target, csv, o, path);
    if (cal->parsed()) {
      const auto cfg = runner::apply(load_any(cal_target), o);
      for (double c : runner::calibrate(cfg, o.threads)) std::printf("C = %.6g\n", c);
      return 0;
    }
    if (pre->parsed()) {
      if (pre->got_subcommand("list")) {
        for (const auto& p : presets::all()) std::cout << p.name << '\n';
        return 0;
      }
      const auto text = presets::find(preset_name);
      if (!text) throw ConfigurationError("unknown preset '" + preset_name + "'");
      std::cout << *text;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
