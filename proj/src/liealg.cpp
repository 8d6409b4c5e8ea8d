#include "stochflow/liealg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "stochflow/errors.hpp"

namespace stochflow::liealg {

namespace {

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("v" + std::to_string(i + 1));
  return out;
}

void check_index(const LieAlgebra& g, int i) {
  if (i < 0 || i >= g.dim())
    throw std::out_of_range("basis index " + std::to_string(i) + " outside 0.." + std::to_string(g.dim() - 1));
}

// Orthonormal basis (columns) of the column span of m.
Eigen::MatrixXd span_basis(const Eigen::MatrixXd& m, double tolerance) {
  if (m.cols() == 0) return Eigen::MatrixXd(m.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tolerance) ++rank;
  return svd.matrixU().leftCols(rank);
}

} // namespace

LieAlgebra::LieAlgebra(int n, std::vector<double> constants, std::vector<std::string> labels)
    : n_(n), c_(std::move(constants)), labels_(labels.empty() ? default_labels(n) : std::move(labels)) {
  if (n < 1) throw InvalidAlgebraError("Lie algebra dimension must be positive");
  if (c_.size() != static_cast<std::size_t>(n) * n * n)
    throw InvalidAlgebraError("expected " + std::to_string(n * n * n) + " structure constants");
  if (static_cast<int>(labels_.size()) != n) throw InvalidAlgebraError("label count does not match dimension");
  for (double v : c_)
    if (!std::isfinite(v)) throw InvalidAlgebraError("non-finite structure constant");
  if (const double d = antisymmetry_defect(); d > kTolerance)
    throw InvalidAlgebraError("structure constants are not antisymmetric (defect " + std::to_string(d) + ")");
  if (const double d = jacobi_defect(); d > kTolerance)
    throw InvalidAlgebraError("structure constants violate the Jacobi identity (defect " + std::to_string(d) + ")");
}

LieAlgebra LieAlgebra::from_brackets(int n, std::span<const Bracket> brackets, std::vector<std::string> labels) {
  if (n < 1) throw InvalidAlgebraError("Lie algebra dimension must be positive");
  std::vector<double> c(static_cast<std::size_t>(n) * n * n, 0.0);
  std::vector<bool> seen(static_cast<std::size_t>(n) * n, false);
  auto at = [&](int i, int j, int k) -> double& { return c[(static_cast<std::size_t>(i) * n + j) * n + k]; };
  for (const auto& b : brackets) {
    if (b.i < 0 || b.i >= n || b.j < 0 || b.j >= n)
      throw InvalidAlgebraError("bracket index out of range (" + std::to_string(b.i + 1) + ", " + std::to_string(b.j + 1) + ")");
    if (static_cast<int>(b.coeffs.size()) != n)
      throw InvalidAlgebraError("bracket [" + std::to_string(b.i + 1) + "," + std::to_string(b.j + 1) + "] needs " +
                                std::to_string(n) + " coefficients");
    if (b.i == b.j) {
      if (std::any_of(b.coeffs.begin(), b.coeffs.end(), [](double v) { return v != 0.0; }))
        throw InvalidAlgebraError("[v,v] must vanish");
      continue;
    }
    const auto key = static_cast<std::size_t>(b.i) * n + b.j;
    const auto rkey = static_cast<std::size_t>(b.j) * n + b.i;
    for (int k = 0; k < n; ++k) {
      if ((seen[key] || seen[rkey]) && std::abs(at(b.i, b.j, k) - b.coeffs[k]) > kTolerance)
        throw InvalidAlgebraError("conflicting entries for bracket [" + std::to_string(b.i + 1) + "," + std::to_string(b.j + 1) + "]");
      at(b.i, b.j, k) = b.coeffs[k];
      at(b.j, b.i, k) = -b.coeffs[k];
    }
    seen[key] = seen[rkey] = true;
  }
  return LieAlgebra(n, std::move(c), std::move(labels));
}

LieAlgebra LieAlgebra::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidAlgebraError(std::string("malformed structure-constant JSON: ") + e.what());
  }
  try {
    const int n = doc.at("dim").get<int>();
    std::vector<Bracket> brackets;
    for (const auto& b : doc.value("brackets", nlohmann::json::array()))
      brackets.push_back({b.at("i").get<int>() - 1, b.at("j").get<int>() - 1, b.at("coeffs").get<std::vector<double>>()});
    std::vector<std::string> labels;
    if (doc.contains("labels")) labels = doc.at("labels").get<std::vector<std::string>>();
    return from_brackets(n, brackets, std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidAlgebraError(std::string("invalid structure-constant JSON: ") + e.what());
  }
}

std::string LieAlgebra::to_json() const {
  nlohmann::json doc;
  doc["dim"] = n_;
  doc["labels"] = labels_;
  auto brackets = nlohmann::json::array();
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      std::vector<double> coeffs(n_);
      bool nonzero = false;
      for (int k = 0; k < n_; ++k) {
        coeffs[k] = c(i, j, k);
        nonzero = nonzero || coeffs[k] != 0.0;
      }
      if (nonzero) brackets.push_back({{"i", i + 1}, {"j", j + 1}, {"coeffs", coeffs}});
    }
  }
  doc["brackets"] = brackets;
  return doc.dump(2);
}

LieAlgebra LieAlgebra::abelian(int n) {
  return LieAlgebra(n, std::vector<double>(static_cast<std::size_t>(n) * n * n, 0.0));
}

LieAlgebra LieAlgebra::heisenberg() {
  const std::vector<Bracket> b{{0, 1, {0, 0, 1}}};
  return from_brackets(3, b, {"X", "Y", "Z"});
}

LieAlgebra LieAlgebra::sl2() {
  const std::vector<Bracket> b{{0, 1, {0, 2, 0}}, {0, 2, {0, 0, -2}}, {1, 2, {1, 0, 0}}};
  return from_brackets(3, b, {"X", "Y", "Z"});
}

LieAlgebra LieAlgebra::so3() {
  const std::vector<Bracket> b{{0, 1, {0, 0, 1}}, {1, 2, {1, 0, 0}}, {2, 0, {0, 1, 0}}};
  return from_brackets(3, b, {"e1", "e2", "e3"});
}

LieAlgebra LieAlgebra::builtin(std::string_view name) {
  if (name == "heisenberg") return heisenberg();
  if (name == "sl2") return sl2();
  if (name == "so3") return so3();
  if (name.starts_with("abelian:")) {
    const std::string digits(name.substr(8));
    try {
      std::size_t used = 0;
      const int n = std::stoi(digits, &used);
      if (used == digits.size()) return abelian(n);
    } catch (const std::exception&) {
    }
  }
  throw InvalidAlgebraError("unknown built-in algebra '" + std::string(name) + "'");
}

Eigen::VectorXd LieAlgebra::bracket(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    if (a(i) == 0.0) continue;
    for (int j = 0; j < n_; ++j) {
      if (b(j) == 0.0) continue;
      for (int k = 0; k < n_; ++k) out(k) += a(i) * b(j) * c(i, j, k);
    }
  }
  return out;
}

double LieAlgebra::antisymmetry_defect() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) worst = std::max(worst, std::abs(c(i, j, k) + c(j, i, k)));
  return worst;
}

double LieAlgebra::jacobi_defect() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        for (int l = 0; l < n_; ++l) {
          double s = 0.0;
          for (int m = 0; m < n_; ++m)
            s += c(i, j, m) * c(m, k, l) + c(j, k, m) * c(m, i, l) + c(k, i, m) * c(m, j, l);
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

// ---------------------------------------------------------------------------

Subalgebra::Subalgebra(const LieAlgebra& g, std::vector<int> indices) : indices_(std::move(indices)) {
  if (indices_.empty()) throw NotSubalgebraError("subalgebra needs at least one basis vector");
  std::vector<int> sorted = indices_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw NotSubalgebraError("duplicate basis index in subalgebra");
  for (int i : indices_)
    if (i < 0 || i >= g.dim()) throw NotSubalgebraError("subalgebra index " + std::to_string(i + 1) + " out of range");
  for (int i : indices_)
    for (int j : indices_)
      for (int k = 0; k < g.dim(); ++k)
        if (!contains(k) && std::abs(g.c(i, j, k)) > kTolerance)
          throw NotSubalgebraError("span is not closed: [" + g.label(i) + "," + g.label(j) + "] has a " + g.label(k) +
                                   " component");
}

bool Subalgebra::contains(int i) const { return std::find(indices_.begin(), indices_.end(), i) != indices_.end(); }

int Subalgebra::position(int i) const {
  const auto it = std::find(indices_.begin(), indices_.end(), i);
  if (it == indices_.end()) throw std::out_of_range("basis index " + std::to_string(i) + " is not in the subalgebra");
  return static_cast<int>(it - indices_.begin());
}

std::vector<Subalgebra> coordinate_subalgebras(const LieAlgebra& g) {
  std::vector<Subalgebra> out;
  const int n = g.dim();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    try {
      out.emplace_back(g, std::move(idx));
    } catch (const NotSubalgebraError&) {
    }
  }
  return out;
}

Eigen::MatrixXd ad_matrix(const LieAlgebra& g, int i) {
  check_index(g, i);
  const int n = g.dim();
  Eigen::MatrixXd m(n, n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) m(a, b) = g.c(i, b, a);
  return m;
}

Eigen::MatrixXd ad_matrix(const LieAlgebra& g, int i, const Subalgebra& h) {
  check_index(g, i);
  h.position(i);
  const auto& idx = h.indices();
  const int r = h.size();
  Eigen::MatrixXd m(r, r);
  for (int b = 0; b < r; ++b)
    for (int a = 0; a < r; ++a) m(a, b) = g.c(i, idx[b], idx[a]);
  return m;
}

double tr_ad_restricted(const LieAlgebra& g, const Subalgebra& h, int i) {
  check_index(g, i);
  h.position(i);
  double tr = 0.0;
  for (int j : h.indices()) tr += g.c(i, j, j);
  return tr;
}

Eigen::MatrixXd killing_form(const LieAlgebra& g) {
  const int n = g.dim();
  std::vector<Eigen::MatrixXd> ad;
  for (int i = 0; i < n; ++i) ad.push_back(ad_matrix(g, i));
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k(i, j) = (ad[i] * ad[j]).trace();
  return k;
}

bool is_semisimple(const LieAlgebra& g, double tolerance) { return std::abs(killing_form(g).determinant()) > tolerance; }

bool is_nilpotent(const LieAlgebra& g, double tolerance) {
  const int n = g.dim();
  Eigen::MatrixXd current = Eigen::MatrixXd::Identity(n, n);
  for (int step = 0; step <= n; ++step) {
    if (current.cols() == 0) return true;
    Eigen::MatrixXd images(n, n * current.cols());
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd vi = Eigen::VectorXd::Unit(n, i);
      for (Eigen::Index w = 0; w < current.cols(); ++w) images.col(i * current.cols() + w) = g.bracket(vi, current.col(w));
    }
    Eigen::MatrixXd next = span_basis(images, tolerance);
    if (next.cols() == current.cols()) return false;
    current = std::move(next);
  }
  return current.cols() == 0;
}

std::vector<double> leaf_connection(const LieAlgebra& g, const Subalgebra& h, int i, int j) {
  h.position(i);
  h.position(j);
  std::vector<double> out;
  for (int k : h.indices()) out.push_back(0.5 * (g.c(i, j, k) - g.c(j, k, i) - g.c(i, k, j)));
  return out;
}

std::vector<double> leaf_connection_diagonal(const LieAlgebra& g, const Subalgebra& h, int i) {
  h.position(i);
  std::vector<double> out;
  for (int k : h.indices()) out.push_back(-g.c(i, k, i));
  return out;
}

std::vector<double> foliated_drift(const LieAlgebra& g, const Subalgebra& h) {
  std::vector<double> out;
  for (int k : h.indices()) {
    double s = 0.0;
    for (int i : h.indices()) s += g.c(i, k, i);
    out.push_back(0.5 * s);
  }
  return out;
}

InvarianceVerdict invariance_verdict(const LieAlgebra& g, const Subalgebra& h, double tolerance) {
  InvarianceVerdict v;
  for (int i : h.indices()) {
    const double tr = tr_ad_restricted(g, h, i);
    if (std::abs(tr) > tolerance) v.offending.emplace_back(i, tr);
  }
  v.totally_invariant = v.offending.empty();
  return v;
}

} // namespace stochflow::liealg
