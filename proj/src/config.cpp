#include "stochflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stochflow/systems.hpp"

namespace stochflow::config {

std::string Diagnostic::to_string() const {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ", column " + std::to_string(column) + ": ";
  if (!path.empty()) out += path + ": ";
  return out + message;
}

namespace {

std::string join_messages(const std::vector<Diagnostic>& ds) {
  std::string out = "invalid configuration";
  for (const auto& d : ds) out += "\n  " + d.to_string();
  return out;
}

} // namespace

ConfigParseError::ConfigParseError(std::vector<Diagnostic> diagnostics)
    : ConfigurationError(join_messages(diagnostics)), diagnostics_(std::move(diagnostics)) {}

CheckSpec default_check(CheckKind kind) {
  CheckSpec c;
  c.kind = kind;
  switch (kind) {
  case CheckKind::mean_nform:
    c.tolerance = 1e-6;
    break;
  case CheckKind::empirical_pathwise:
    c.grid = 48;
    c.tolerance = 1e-2;
    break;
  case CheckKind::empirical_mean:
    c.n_paths = 1000;
    c.tolerance = 0.0;
    break;
  case CheckKind::volume_preservation:
  case CheckKind::jacobian_consistency:
    c.tolerance = 1e-2;
    break;
  default:
    break;
  }
  return c;
}

namespace {

// One `key = value` item, from either input syntax.
struct Entry {
  std::string key;
  std::string value;
  int line = 0;
  int column = 0;  // column of the first value character
  std::string path;
};

struct Section {
  std::string name;
  std::string arg;
  int line = 0;
  int column = 0;
  std::string path;
  std::vector<Entry> entries;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Items of a comma-separated list with their offsets inside the value.
std::vector<std::pair<std::string, int>> split_list(std::string_view value) {
  std::vector<std::pair<std::string, int>> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    const auto item = value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto lead = item.find_first_not_of(" \t");
    out.emplace_back(trim(item), static_cast<int>(start + (lead == std::string_view::npos ? 0 : lead)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.size() == 1 && out.front().first.empty()) out.clear();
  return out;
}

std::vector<Section> lex_text(std::string_view text, std::vector<Diagnostic>& diags) {
  std::vector<Section> sections;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    const int col = static_cast<int>(first) + 1;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string_view::npos) {
        diags.push_back({line_no, col, "", "section header is missing ']'"});
        continue;
      }
      if (!trim(line.substr(close + 1)).empty())
        diags.push_back({line_no, static_cast<int>(close) + 2, "", "unexpected text after section header"});
      std::istringstream words(std::string(line.substr(first + 1, close - first - 1)));
      Section s;
      words >> s.name >> s.arg;
      std::string extra;
      if (words >> extra) diags.push_back({line_no, col, "", "section header has too many words"});
      if (s.name.empty()) diags.push_back({line_no, col, "", "empty section name"});
      s.line = line_no;
      s.column = col;
      s.path = s.name;
      sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      diags.push_back({line_no, col, "", "expected 'key = value'"});
      continue;
    }
    if (sections.empty()) {
      diags.push_back({line_no, col, "", "key outside of any section"});
      continue;
    }
    Entry e;
    e.key = trim(line.substr(0, eq));
    const auto rest = line.substr(eq + 1);
    const auto vstart = rest.find_first_not_of(" \t");
    e.value = trim(rest);
    e.line = line_no;
    e.column = static_cast<int>(eq + 1 + (vstart == std::string_view::npos ? 0 : vstart)) + 1;
    if (e.key.empty()) diags.push_back({line_no, col, "", "missing key"});
    e.path = sections.back().path + "." + e.key;
    sections.back().entries.push_back(std::move(e));
  }
  return sections;
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return fmt(v.get<double>());
  throw ConfigurationError("expected a scalar");
}

std::string json_value(const nlohmann::json& v) {
  if (!v.is_array()) return json_scalar(v);
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + json_scalar(v[i]);
  return out;
}

std::vector<Section> lex_json(std::string_view text, std::vector<Diagnostic>& diags) {
  std::vector<Section> sections;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    diags.push_back({0, 0, "", std::string("malformed JSON: ") + e.what()});
    return sections;
  }
  if (!doc.is_object()) {
    diags.push_back({0, 0, "", "top level must be an object"});
    return sections;
  }
  auto add = [&](Section& s, const std::string& key, const nlohmann::json& v, const std::string& path) {
    try {
      s.entries.push_back({key, json_value(v), 0, 0, path});
    } catch (const ConfigurationError&) {
      diags.push_back({0, 0, path, "expected a scalar or an array of scalars"});
    }
  };
  auto object_section = [&](const std::string& name, const std::string& arg, const nlohmann::json& obj,
                            const std::string& path) {
    Section s{name, arg, 0, 0, path, {}};
    if (!obj.is_object()) {
      diags.push_back({0, 0, path, "expected an object"});
      return s;
    }
    for (const auto& [key, v] : obj.items()) {
      if (name == "current" && key == "atoms" && v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          const auto p = path + ".atoms[" + std::to_string(i) + "]";
          if (!v[i].is_object() || !v[i].contains("point")) {
            diags.push_back({0, 0, p, "expected {\"weight\": w, \"point\": [...]}"});
            continue;
          }
          const auto w = v[i].value("weight", nlohmann::json(1.0));
          try {
            s.entries.push_back({"atom", json_scalar(w) + " @ " + json_value(v[i]["point"]), 0, 0, p});
          } catch (const ConfigurationError&) {
            diags.push_back({0, 0, p, "malformed atom"});
          }
        }
        continue;
      }
      if (name == "fields" && key == "diffusions" && v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i)
          add(s, "diffusion", v[i], path + ".diffusions[" + std::to_string(i) + "]");
        continue;
      }
      if (name == "check" && key == "kind") continue;
      add(s, key, v, path + "." + key);
    }
    return s;
  };
  for (const auto& [key, v] : doc.items()) {
    if (key == "checks") {
      if (!v.is_array()) {
        diags.push_back({0, 0, "checks", "expected an array"});
        continue;
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto path = "checks[" + std::to_string(i) + "]";
        if (!v[i].is_object() || !v[i].contains("kind") || !v[i]["kind"].is_string()) {
          diags.push_back({0, 0, path, "a check needs a string \"kind\""});
          continue;
        }
        sections.push_back(object_section("check", v[i]["kind"].get<std::string>(), v[i], path));
      }
      continue;
    }
    sections.push_back(object_section(key, "", v, key));
  }
  return sections;
}

// Converts sections into a config, recording every problem.
class Builder {
public:
  explicit Builder(std::vector<Diagnostic>& diags) : diags_(diags) {}

  ExperimentConfig build(const std::vector<Section>& sections, std::string base_dir) {
    ExperimentConfig cfg;
    cfg.base_dir = std::move(base_dir);
    std::set<std::string> seen;
    bool any_flow = false, any_lie = false;
    FlowExperiment flow;
    LiealgExperiment lie;
    for (const auto& s : sections) {
      if (s.name != "check" && !seen.insert(s.name).second) {
        error(s, "duplicate section [" + s.name + "]");
        continue;
      }
      if (s.name != "check" && !s.arg.empty()) error(s, "section [" + s.name + "] takes no argument");
      if (s.name == "experiment") {
        for (const auto& e : s.entries) {
          if (e.key == "name") cfg.name = e.value;
          else unknown(e);
        }
      } else if (s.name == "manifold") {
        any_flow = true;
        manifold_section(s, flow.manifold);
        manifold_line_ = s;
      } else if (s.name == "fields") {
        any_flow = true;
        fields_section(s, flow);
      } else if (s.name == "density") {
        any_flow = true;
        for (const auto& e : s.entries) {
          if (e.key == "f") {
            flow.density = e.value;
            density_entry_ = e;
          } else if (e.key == "normalize") flow.normalize = to_bool(e);
          else unknown(e);
        }
      } else if (s.name == "current") {
        any_flow = true;
        current_section(s, flow.current);
      } else if (s.name == "check") {
        any_flow = true;
        check_section(s, flow);
      } else if (s.name == "simulate") {
        any_flow = true;
        flow.simulate = simulate_section(s);
      } else if (s.name == "liealg") {
        any_lie = true;
        liealg_section(s, lie);
      } else {
        error(s, "unknown section [" + s.name + "]");
      }
    }
    if (any_flow && any_lie) diags_.push_back({0, 0, "", "a config is either a flow experiment or a liealg experiment"});
    if (!any_flow && !any_lie) diags_.push_back({0, 0, "", "no experiment: expected [manifold]/[fields] or [liealg]"});
    if (any_flow) {
      validate_flow(flow, seen);
      cfg.flow = std::move(flow);
    }
    if (any_lie) {
      validate_liealg(lie, cfg.base_dir);
      cfg.liealg = std::move(lie);
    }
    return cfg;
  }

private:
  std::vector<Diagnostic>& diags_;
  std::optional<Section> manifold_line_;
  std::optional<Entry> density_entry_;
  std::vector<Entry> drift_entry_;
  std::vector<Entry> diffusion_entries_;
  std::vector<Section> check_sections_;
  std::optional<Section> simulate_section_;
  std::optional<Section> liealg_section_;

  void error(const Entry& e, std::string msg, int offset = 0) {
    diags_.push_back({e.line, e.line ? e.column + offset : 0, e.path, std::move(msg)});
  }
  void error(const Section& s, std::string msg) { diags_.push_back({s.line, s.column, s.path, std::move(msg)}); }
  void unknown(const Entry& e) { error(e, "unknown key '" + e.key + "'"); }

  double to_double(const Entry& e, const std::string& text, int offset = 0) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) {
      error(e, "expected a number, got '" + text + "'", offset);
      return 0.0;
    }
    return v;
  }
  double to_double(const Entry& e) { return to_double(e, e.value); }

  template <class Int>
  Int to_int(const Entry& e, const std::string& text, int offset = 0) {
    Int v{};
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) error(e, "expected an integer, got '" + text + "'", offset);
    return v;
  }
  int to_int(const Entry& e) { return to_int<int>(e, e.value); }
  std::uint64_t to_u64(const Entry& e) { return to_int<std::uint64_t>(e, e.value); }

  bool to_bool(const Entry& e) {
    if (e.value == "true") return true;
    if (e.value != "false") error(e, "expected true or false");
    return false;
  }

  std::vector<double> to_doubles(const Entry& e, std::string_view text, int base = 0) {
    std::vector<double> out;
    for (const auto& [item, off] : split_list(text)) out.push_back(to_double(e, item, base + off));
    return out;
  }

  void manifold_section(const Section& s, ManifoldSpec& m) {
    for (const auto& e : s.entries) {
      if (e.key == "type") {
        m.type = e.value;
        if (m.type != "torus" && m.type != "heisenberg") error(e, "manifold type must be torus or heisenberg");
      } else if (e.key == "lengths") {
        m.lengths = to_doubles(e, e.value);
        for (double l : m.lengths)
          if (!(l > 0.0)) error(e, "lengths must be positive");
      } else {
        unknown(e);
      }
    }
  }

  void fields_section(const Section& s, FlowExperiment& flow) {
    for (const auto& e : s.entries) {
      std::vector<std::string> comps;
      for (const auto& item : split_list(e.value)) comps.push_back(item.first);
      if (e.key == "drift") {
        if (!drift_entry_.empty()) error(e, "drift given twice");
        flow.drift = std::move(comps);
        drift_entry_ = {e};
      } else if (e.key == "diffusion") {
        Entry named = e;
        if (e.line) named.path = "fields.diffusion[" + std::to_string(diffusion_entries_.size() + 1) + "]";
        flow.diffusions.push_back(std::move(comps));
        diffusion_entries_.push_back(std::move(named));
      } else {
        unknown(e);
      }
    }
  }

  void current_section(const Section& s, CurrentSpec& c) {
    for (const auto& e : s.entries) {
      if (e.key == "type") {
        c.type = e.value;
        if (c.type != "density" && c.type != "empirical") error(e, "current type must be density or empirical");
      } else if (e.key == "atom") {
        const auto at = e.value.find('@');
        if (at == std::string::npos) {
          error(e, "expected '<weight> @ <coordinates>'");
          continue;
        }
        Atom a;
        a.weight = to_double(e, trim(e.value.substr(0, at)));
        a.point = to_doubles(e, std::string_view(e.value).substr(at + 1), static_cast<int>(at) + 1);
        c.atoms.push_back(std::move(a));
      } else {
        unknown(e);
      }
    }
  }

  void check_section(const Section& s, FlowExperiment& flow) {
    const auto kind = check_kind_from_string(s.arg);
    if (!kind) {
      error(s, s.arg.empty() ? "check section needs a kind, e.g. [check strict_nform]" : "unknown check kind '" + s.arg + "'");
      return;
    }
    if (*kind == CheckKind::foliation_verdict) {
      error(s, "foliation_verdict belongs to a [liealg] experiment");
      return;
    }
    Section named = s;
    if (s.line == 0) named.path = s.path;
    else named.path = "check[" + std::to_string(check_sections_.size() + 1) + "]";
    CheckSpec c = default_check(*kind);
    for (const auto& e0 : s.entries) {
      Entry e = e0;
      if (s.line) e.path = named.path + "." + e.key;
      if (e.key == "grid") c.grid = to_int(e);
      else if (e.key == "K") c.basis_k = to_int(e);
      else if (e.key == "dt") c.dt = to_double(e);
      else if (e.key == "T") c.T = to_double(e);
      else if (e.key == "paths") c.n_paths = to_int(e);
      else if (e.key == "probes") c.probes = to_int(e);
      else if (e.key == "seed") c.seed = to_u64(e);
      else if (e.key == "tolerance") c.tolerance = to_double(e);
      else if (e.key == "bias_constant") c.bias_constant = to_double(e);
      else if (e.key == "x0") c.x0 = to_doubles(e, e.value);
      else unknown(e);
    }
    flow.checks.push_back(std::move(c));
    check_sections_.push_back(std::move(named));
  }

  SimulateSpec simulate_section(const Section& s) {
    SimulateSpec sim;
    for (const auto& e : s.entries) {
      if (e.key == "x0") sim.x0 = to_doubles(e, e.value);
      else if (e.key == "dt") sim.dt = to_double(e);
      else if (e.key == "T") sim.T = to_double(e);
      else if (e.key == "seed") sim.seed = to_u64(e);
      else if (e.key == "path") sim.path = to_u64(e);
      else unknown(e);
    }
    simulate_section_ = s;
    return sim;
  }

  void liealg_section(const Section& s, LiealgExperiment& l) {
    for (const auto& e : s.entries) {
      if (e.key == "algebra") l.algebra = e.value;
      else if (e.key == "constants") l.constants = e.value;
      else if (e.key == "subalgebra") {
        for (const auto& [item, off] : split_list(e.value)) l.subalgebra.push_back(to_int<int>(e, item, off));
      } else if (e.key == "realization") {
        l.realization = e.value;
        if (l.realization != "builtin" && l.realization != "none") error(e, "realization must be builtin or none");
      } else if (e.key == "grid") l.grid = to_int(e);
      else if (e.key == "K") l.basis_k = to_int(e);
      else if (e.key == "dt") l.dt = to_double(e);
      else if (e.key == "T") l.T = to_double(e);
      else if (e.key == "paths") l.n_paths = to_int(e);
      else if (e.key == "probes") l.probes = to_int(e);
      else if (e.key == "seed") l.seed = to_u64(e);
      else if (e.key == "tolerance") l.tolerance = to_double(e);
      else if (e.key == "bias_constant") l.bias_constant = to_double(e);
      else unknown(e);
    }
    liealg_section_ = s;
  }

  // Parses every component, reporting syntax errors at their column and
  // coordinates beyond the dimension by name.
  bool check_expressions(const Entry& e, const std::vector<std::string>& comps, int dim, const std::string& what) {
    bool ok = true;
    const auto items = split_list(e.value);
    if (static_cast<int>(comps.size()) != dim) {
      error(e, what + " has " + std::to_string(comps.size()) + " components, expected " + std::to_string(dim));
      ok = false;
    }
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const int offset = i < items.size() ? items[i].second : 0;
      const std::string label = comps.size() > 1 ? what + " component " + std::to_string(i + 1) : what;
      ok = check_expression(e, comps[i], dim, label, offset) && ok;
    }
    return ok;
  }

  bool check_expression(const Entry& e, const std::string& text, int dim, const std::string& label, int offset) {
    try {
      const auto ex = expr::Expr::parse(text);
      if (ex.max_variable() > dim) {
        error(e, label + " uses x" + std::to_string(ex.max_variable()) + " but the manifold has dimension " +
                     std::to_string(dim), offset);
        return false;
      }
    } catch (const ParseError& p) {
      error(e, label + ": " + p.detail(), offset + static_cast<int>(p.position()));
      return false;
    }
    return true;
  }

  void check_steps(const Entry& where, double T, double dt) {
    try {
      step_count(T, dt);
    } catch (const ConfigurationError& ex) {
      error(where, ex.what());
    }
  }

  void validate_check(const Section& s, const CheckSpec& c, int dim) {
    const Entry where{"", "", s.line, s.column, s.path};
    if (c.grid < 2) error(where, "grid must be at least 2");
    if (c.basis_k < 0) error(where, "K must be nonnegative");
    if (!(c.tolerance >= 0.0)) error(where, "tolerance must be nonnegative");
    if (!(c.bias_constant >= 0.0)) error(where, "bias_constant must be nonnegative");
    switch (c.kind) {
    case CheckKind::empirical_pathwise:
    case CheckKind::empirical_mean:
    case CheckKind::volume_preservation:
    case CheckKind::jacobian_consistency:
      check_steps(where, c.T, c.dt);
      if (c.kind == CheckKind::empirical_mean && c.n_paths < 2) error(where, "paths must be at least 2");
      if (c.n_paths < 1) error(where, "paths must be positive");
      if (c.probes < 1) error(where, "probes must be positive");
      break;
    default:
      break;
    }
    if (dim >= 0 && !c.x0.empty() && static_cast<int>(c.x0.size()) != dim)
      error(where, "x0 has " + std::to_string(c.x0.size()) + " coordinates, expected " + std::to_string(dim));
  }

  void validate_flow(const FlowExperiment& flow, const std::set<std::string>& seen) {
    int dim = 0;
    const Entry mwhere = manifold_line_ ? Entry{"", "", manifold_line_->line, manifold_line_->column, "manifold"}
                                        : Entry{"", "", 0, 0, "manifold"};
    if (!seen.count("manifold")) {
      error(mwhere, "missing [manifold] section");
      return;
    }
    if (flow.manifold.type == "heisenberg") {
      if (!flow.manifold.lengths.empty()) error(mwhere, "the heisenberg manifold has a fixed unit box; drop 'lengths'");
      dim = 3;
    } else if (flow.manifold.type == "torus") {
      dim = static_cast<int>(flow.manifold.lengths.size());
      if (dim < 1 || dim > kMaxDim) {
        error(mwhere, "torus needs between 1 and " + std::to_string(kMaxDim) + " lengths");
        dim = 0;
      }
    }
    if (dim == 0) {
      // Dimension-free checks still run so that every problem is reported.
      for (std::size_t i = 0; i < flow.checks.size(); ++i) validate_check(check_sections_[i], flow.checks[i], -1);
      return;
    }

    bool fields_ok = true;
    if (flow.drift.empty() && flow.diffusions.empty()) {
      error(mwhere.line ? mwhere : Entry{"", "", 0, 0, "fields"}, "no vector fields given");
      fields_ok = false;
    }
    for (const auto& e : drift_entry_) fields_ok = check_expressions(e, flow.drift, dim, e.path) && fields_ok;
    for (std::size_t i = 0; i < diffusion_entries_.size(); ++i)
      fields_ok = check_expressions(diffusion_entries_[i], flow.diffusions[i], dim, diffusion_entries_[i].path) && fields_ok;

    bool density_ok = true;
    if (density_entry_) density_ok = check_expression(*density_entry_, flow.density, dim, "density", 0);

    if (flow.current.type == "empirical") {
      if (flow.current.atoms.empty()) error(Entry{"", "", 0, 0, "current"}, "empirical current needs at least one atom");
      for (std::size_t i = 0; i < flow.current.atoms.size(); ++i)
        if (static_cast<int>(flow.current.atoms[i].point.size()) != dim)
          error(Entry{"", "", 0, 0, "current.atom[" + std::to_string(i + 1) + "]"},
                "atom has " + std::to_string(flow.current.atoms[i].point.size()) + " coordinates, expected " +
                    std::to_string(dim));
    } else if (!flow.current.atoms.empty()) {
      error(Entry{"", "", 0, 0, "current"}, "atoms require type = empirical");
    }

    for (std::size_t i = 0; i < flow.checks.size(); ++i) validate_check(check_sections_[i], flow.checks[i], dim);

    if (flow.simulate) {
      const Entry where{"", "", simulate_section_->line, simulate_section_->column, "simulate"};
      check_steps(where, flow.simulate->T, flow.simulate->dt);
      if (!flow.simulate->x0.empty() && static_cast<int>(flow.simulate->x0.size()) != dim)
        error(where, "x0 has " + std::to_string(flow.simulate->x0.size()) + " coordinates, expected " +
                         std::to_string(dim));
    }

    if (fields_ok && diags_.empty()) {
      try {
        build_system(flow);
      } catch (const Error& ex) {
        error(Entry{"", "", 0, 0, "fields"}, ex.what());
      }
    }
    if (density_ok && diags_.empty()) {
      try {
        build_current(flow, build_manifold(flow.manifold), 4);
      } catch (const Error& ex) {
        error(Entry{"", "", 0, 0, flow.current.type == "density" ? "density" : "current"}, ex.what());
      }
    }
  }

  void validate_liealg(const LiealgExperiment& l, const std::string& base_dir) {
    const Entry where = liealg_section_ ? Entry{"", "", liealg_section_->line, liealg_section_->column, "liealg"}
                                        : Entry{"", "", 0, 0, "liealg"};
    if (l.algebra.empty() == l.constants.empty()) {
      error(where, "give exactly one of 'algebra' (builtin) or 'constants' (JSON file)");
      return;
    }
    std::optional<liealg::LieAlgebra> g;
    try {
      g = l.algebra.empty() ? load_algebra(l.constants, base_dir) : liealg::LieAlgebra::builtin(l.algebra);
    } catch (const Error& ex) {
      error(where, ex.what());
    }
    if (l.subalgebra.empty()) error(where, "subalgebra needs at least one index");
    if (l.grid < 2) error(where, "grid must be at least 2");
    if (l.basis_k < 0) error(where, "K must be nonnegative");
    if (l.n_paths < 2) error(where, "paths must be at least 2");
    if (l.probes < 1) error(where, "probes must be positive");
    check_steps(where, l.T, l.dt);
    if (!g) return;
    std::vector<int> idx;
    for (int i : l.subalgebra) {
      if (i < 1 || i > g->dim()) error(where, "subalgebra index " + std::to_string(i) + " is outside 1.." + std::to_string(g->dim()));
      else idx.push_back(i - 1);
    }
    if (idx.size() != l.subalgebra.size() || idx.empty()) return;
    try {
      liealg::Subalgebra h(*g, idx);
    } catch (const Error& ex) {
      error(where, ex.what());
    }
  }

public:
  static liealg::LieAlgebra load_algebra(const std::string& file, const std::string& base_dir) {
    const std::filesystem::path p = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file)
                                                                              : std::filesystem::path(base_dir) / file;
    std::ifstream in(p);
    if (!in) throw ConfigurationError("cannot read " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return liealg::LieAlgebra::from_json(buf.str());
  }
};

void write_list(std::ostream& out, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << fmt(v[i]);
}

void write_strings(std::ostream& out, const std::vector<std::string>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
}

} // namespace

ExperimentConfig parse_config(std::string_view text, std::string base_dir) {
  std::vector<Diagnostic> diags;
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool is_json = first != std::string_view::npos && text[first] == '{';
  const auto sections = is_json ? lex_json(text, diags) : lex_text(text, diags);
  if (is_json && sections.empty() && !diags.empty()) throw ConfigParseError(std::move(diags));
  Builder b(diags);
  auto cfg = b.build(sections, std::move(base_dir));
  if (!diags.empty()) throw ConfigParseError(std::move(diags));
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(buf.str(), dir.empty() ? "." : dir);
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[experiment]\nname = " << c.name << "\n";
  if (c.flow) {
    const auto& f = *c.flow;
    out << "\n[manifold]\ntype = " << f.manifold.type << "\n";
    if (!f.manifold.lengths.empty()) {
      out << "lengths = ";
      write_list(out, f.manifold.lengths);
      out << "\n";
    }
    out << "\n[fields]\n";
    if (!f.drift.empty()) {
      out << "drift = ";
      write_strings(out, f.drift);
      out << "\n";
    }
    for (const auto& d : f.diffusions) {
      out << "diffusion = ";
      write_strings(out, d);
      out << "\n";
    }
    out << "\n[density]\nf = " << f.density << "\nnormalize = " << (f.normalize ? "true" : "false") << "\n";
    out << "\n[current]\ntype = " << f.current.type << "\n";
    for (const auto& a : f.current.atoms) {
      out << "atom = " << fmt(a.weight) << " @ ";
      write_list(out, a.point);
      out << "\n";
    }
    for (const auto& k : f.checks) {
      out << "\n[check " << to_string(k.kind) << "]\n";
      out << "grid = " << k.grid << "\nK = " << k.basis_k << "\ndt = " << fmt(k.dt) << "\nT = " << fmt(k.T)
          << "\npaths = " << k.n_paths << "\nprobes = " << k.probes << "\nseed = " << k.seed
          << "\ntolerance = " << fmt(k.tolerance) << "\nbias_constant = " << fmt(k.bias_constant) << "\n";
      if (!k.x0.empty()) {
        out << "x0 = ";
        write_list(out, k.x0);
        out << "\n";
      }
    }
    if (f.simulate) {
      out << "\n[simulate]\n";
      if (!f.simulate->x0.empty()) {
        out << "x0 = ";
        write_list(out, f.simulate->x0);
        out << "\n";
      }
      out << "dt = " << fmt(f.simulate->dt) << "\nT = " << fmt(f.simulate->T) << "\nseed = " << f.simulate->seed
          << "\npath = " << f.simulate->path << "\n";
    }
  }
  if (c.liealg) {
    const auto& l = *c.liealg;
    out << "\n[liealg]\n";
    if (!l.algebra.empty()) out << "algebra = " << l.algebra << "\n";
    if (!l.constants.empty()) out << "constants = " << l.constants << "\n";
    out << "subalgebra = ";
    for (std::size_t i = 0; i < l.subalgebra.size(); ++i) out << (i ? ", " : "") << l.subalgebra[i];
    out << "\nrealization = " << l.realization << "\ngrid = " << l.grid << "\nK = " << l.basis_k
        << "\ndt = " << fmt(l.dt) << "\nT = " << fmt(l.T) << "\npaths = " << l.n_paths << "\nprobes = " << l.probes
        << "\nseed = " << l.seed << "\ntolerance = " << fmt(l.tolerance) << "\nbias_constant = " << fmt(l.bias_constant)
        << "\n";
  }
  return out.str();
}

ChartedManifold build_manifold(const ManifoldSpec& spec) {
  if (spec.type == "heisenberg") return ChartedManifold::heisenberg();
  if (spec.type == "torus") return ChartedManifold::torus(spec.lengths);
  throw ConfigurationError("unknown manifold type '" + spec.type + "'");
}

StratonovichSystem build_system(const FlowExperiment& flow) {
  const auto m = build_manifold(flow.manifold);
  systems::FieldStrings fs{flow.drift, flow.diffusions};
  if (fs.drift.empty()) fs.drift.assign(m.dim(), "0");
  return systems::from_strings(m, fs);
}

Current build_current(const FlowExperiment& flow, const ChartedManifold& m, int grid) {
  if (flow.current.type == "empirical") {
    std::vector<Point> pts;
    std::vector<double> w;
    for (const auto& a : flow.current.atoms) {
      pts.emplace_back(std::span<const double>(a.point));
      w.push_back(a.weight);
    }
    return Current::empirical(m, std::move(pts), std::move(w));
  }
  return Current::density(m, ScalarField::parse(flow.density), grid, flow.normalize);
}

} // namespace stochflow::config
