#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stochflow/presets.hpp"
#include "stochflow/runner.hpp"

using namespace stochflow;
using namespace stochflow::config;

namespace {

std::vector<Diagnostic> diagnostics_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigParseError& e) {
    return e.diagnostics();
  }
  return {};
}

const char* kSmallFlow = R"(
[experiment]
name = small

[manifold]
type = torus
lengths = 1

[fields]
diffusion = sin(2*pi*x1)/4

[current]
type = density

[check strict_residual]
grid = 8
K = 2

[check empirical_mean]
grid = 8
K = 1
dt = 0.05
T = 0.5
paths = 8
seed = 3
)";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

} // namespace

TEST_CASE("shipped presets parse") {
  for (const auto& p : presets::all()) {
    CAPTURE(p.name);
    const auto cfg = presets::load(p.name);
    CHECK(cfg.name == p.name);
    CHECK(cfg.flow.has_value() != cfg.liealg.has_value());
  }
  const auto ham = presets::load("hamiltonian_torus");
  REQUIRE(ham.flow);
  CHECK(ham.flow->diffusions.size() == 2);
  CHECK(ham.flow->density == "1");
  CHECK(ham.flow->manifold.lengths == std::vector<double>{1, 1});
  CHECK_THROWS_AS(presets::load("nope"), ConfigurationError);
}

TEST_CASE("preset files match the embedded copies") {
  const std::filesystem::path dir = STOCHFLOW_PRESET_DIR;
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    ++files;
    const auto text = presets::find(entry.path().stem().string());
    REQUIRE(text);
    CHECK(*text == read_file(entry.path()));
    CHECK(load_config(entry.path().string()) == presets::load(entry.path().stem().string()));
  }
  CHECK(files == static_cast<int>(presets::all().size()));
}

TEST_CASE("parse -> serialize -> parse is the identity") {
  for (const auto& p : presets::all()) {
    CAPTURE(p.name);
    const auto a = presets::load(p.name);
    const auto text = serialize(a);
    const auto b = parse_config(text);
    CHECK(a == b);
    CHECK(serialize(b) == text);
  }
  const auto small = parse_config(kSmallFlow);
  CHECK(parse_config(serialize(small)) == small);
}

TEST_CASE("JSON input") {
  const char* json = R"({
    "experiment": {"name": "small"},
    "manifold": {"type": "torus", "lengths": [1]},
    "fields": {"diffusions": [["sin(2*pi*x1)/4"]]},
    "current": {"type": "density"},
    "checks": [
      {"kind": "strict_residual", "grid": 8, "K": 2},
      {"kind": "empirical_mean", "grid": 8, "K": 1, "dt": 0.05, "T": 0.5, "paths": 8, "seed": 3}
    ]
  })";
  CHECK(parse_config(json) == parse_config(kSmallFlow));

  const auto atoms = parse_config(R"({"manifold": {"lengths": [1, 1]}, "fields": {"diffusions": [["1", "0"]]},
    "current": {"type": "empirical", "atoms": [{"weight": 2, "point": [0.25, 0.5]}]}})");
  REQUIRE(atoms.flow);
  REQUIRE(atoms.flow->current.atoms.size() == 1);
  CHECK(atoms.flow->current.atoms[0].weight == 2.0);
  CHECK(atoms.flow->current.atoms[0].point == std::vector<double>{0.25, 0.5});

  const auto d = diagnostics_of(R"({"manifold": {"lengths": [1]}, "fields": {"diffusions": [["x2"]]},
    "checks": [{"grid": 3}]})");
  REQUIRE(d.size() == 2);
  CHECK(d[0].path == "checks[0]");
  CHECK(d[1].path == "fields.diffusions[0]");
  CHECK(d[1].message.find("x2") != std::string::npos);
  CHECK(diagnostics_of("{\"manifold\": ").size() == 1);
}

TEST_CASE("semantic errors name the field") {
  const auto d = diagnostics_of(R"(
[manifold]
type = torus
lengths = 1, 1

[fields]
diffusion = 1, 0
diffusion = 0, sin(2*pi*x3)
)");
  REQUIRE(d.size() == 1);
  CHECK(d[0].path == "fields.diffusion[2]");
  CHECK(d[0].line == 8);
  CHECK(d[0].column == 16);
  CHECK(d[0].message.find("x3") != std::string::npos);
  CHECK(d[0].message.find("dimension 2") != std::string::npos);
}

TEST_CASE("syntax errors point at the unclosed parenthesis") {
  const auto d = diagnostics_of("[manifold]\nlengths = 1\n[fields]\ndrift = sin(2*pi*x1\n");
  REQUIRE(d.size() == 1);
  CHECK(d[0].line == 4);
  // "drift = " puts the expression at column 9; '(' is 3 characters in.
  CHECK(d[0].column == 12);
  CHECK(d[0].message.find("unclosed") != std::string::npos);
}

TEST_CASE("every error is reported") {
  const auto d = diagnostics_of(R"(
[manifold]
type = klein
colour = red

[fields]
diffusion = 1

[check nonsense]

[check empirical_mean]
dt = 0.3
paths = 1

[liealg]
algebra = sl2
subalgebra = 1, 2
stray line
)");
  std::vector<std::string> messages;
  for (const auto& e : d) messages.push_back(e.to_string());
  CAPTURE(messages);
  CHECK(d.size() >= 7);
  auto has = [&](std::string_view s) {
    return std::any_of(messages.begin(), messages.end(), [&](const auto& m) { return m.find(s) != std::string::npos; });
  };
  CHECK(has("manifold type must be torus or heisenberg"));
  CHECK(has("unknown key 'colour'"));
  CHECK(has("unknown check kind 'nonsense'"));
  CHECK(has("not a positive multiple"));
  CHECK(has("paths must be at least 2"));
  CHECK(has("either a flow experiment or a liealg experiment"));
  CHECK(has("expected 'key = value'"));
}

TEST_CASE("liealg experiment validation") {
  CHECK(diagnostics_of("[liealg]\nalgebra = sl2\nsubalgebra = 2, 3\n").size() == 1);   // [Y, Z] = X
  CHECK(diagnostics_of("[liealg]\nalgebra = sl2\nsubalgebra = 4\n").size() == 1);      // out of range
  CHECK(diagnostics_of("[liealg]\nalgebra = e8\nsubalgebra = 1\n").size() == 1);       // unknown builtin
  CHECK(diagnostics_of("[liealg]\nsubalgebra = 1\n").size() >= 1);                    // no algebra
  CHECK(diagnostics_of("[liealg]\nalgebra = heisenberg\nsubalgebra = 1, 3\n").empty());
}

TEST_CASE("field compatibility is validated") {
  const auto d = diagnostics_of("[manifold]\nlengths = 1\n[fields]\ndiffusion = sin(x1)\n");
  REQUIRE(d.size() == 1);
  CHECK(d[0].path == "fields");
}

TEST_CASE("fnv1a") {
  CHECK(runner::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(runner::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(runner::fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("runs are deterministic and write their reports") {
  const auto cfg = parse_config(kSmallFlow);
  const auto a = runner::execute(cfg, 1);
  const auto b = runner::execute(cfg, 3);
  CHECK(a.payload == b.payload);
  CHECK(a.payload_hash == b.payload_hash);
  CHECK(a.reports.size() == 2);

  runner::Overrides o;
  o.seed = 4;
  CHECK(runner::execute(runner::apply(cfg, o)).payload_hash != a.payload_hash);

  const auto dir = std::filesystem::temp_directory_path() / "stochflow_test_run";
  std::filesystem::remove_all(dir);
  std::ostringstream log;
  const int code = runner::run(cfg, dir.string(), {}, log);
  CHECK(code == a.exit_code());
  const auto doc = nlohmann::ordered_json::parse(read_file(dir / "report.json"));
  CHECK(doc["payload_hash"] == a.payload_hash);
  CHECK(doc["payload"].dump() == a.payload);
  CHECK(doc.contains("timestamp"));
  CHECK(std::filesystem::exists(dir / "check_1_strict_residual.csv"));
  CHECK(read_file(dir / "check_2_empirical_mean.csv").rfind("check,basis_index,field_index,value\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("exit codes") {
  std::ostringstream log;
  const auto dir = (std::filesystem::temp_directory_path() / "stochflow_test_exit").string();
  CHECK(runner::run(presets::load("sl2_foliation"), dir, {}, log) == 2);
  CHECK(log.str().find("Tr_h ad(X) = 2") != std::string::npos);

  runner::Overrides fast;
  fast.n_paths = 10;
  CHECK(runner::run(presets::load("heisenberg_foliation"), dir, fast, log) == 0);

  auto bad = presets::load("sl2_foliation");
  bad.liealg->realization = "builtin";
  CHECK(runner::run(bad, dir, {}, log) == 1);
  std::filesystem::remove_all(dir);
}
