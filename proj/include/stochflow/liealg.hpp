#pragma once

// Structure-constant computations on a Lie algebra with an orthonormal basis
// v_1..v_n: [v_i, v_j] = sum_k c_ij^k v_k. Indices are 0-based in the API and
// 1-based in the JSON interchange format.

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace stochflow::liealg {

inline constexpr double kTolerance = 1e-10;

class LieAlgebra {
public:
  struct Bracket {
    int i;
    int j;
    std::vector<double> coeffs;
  };

  /// `constants` is n*n*n, laid out as c[(i*n + j)*n + k]. Throws
  /// InvalidAlgebraError if antisymmetry or the Jacobi identity fails.
  LieAlgebra(int n, std::vector<double> constants, std::vector<std::string> labels = {});

  /// Builds the constants from the listed brackets, completing antisymmetrically;
  /// unlisted brackets are zero.
  static LieAlgebra from_brackets(int n, std::span<const Bracket> brackets, std::vector<std::string> labels = {});

  /// `{ "dim": n, "brackets": [ {"i":1,"j":2,"coeffs":[...]} ], "labels": [...] }`
  static LieAlgebra from_json(std::string_view text);
  std::string to_json() const;

  static LieAlgebra abelian(int n);
  /// [X,Y] = Z.
  static LieAlgebra heisenberg();
  /// [X,Y] = 2Y, [X,Z] = -2Z, [Y,Z] = X.
  static LieAlgebra sl2();
  /// [e1,e2] = e3 and cyclic.
  static LieAlgebra so3();
  /// Looks up one of the names above ("abelian:n" for the abelian algebra).
  static LieAlgebra builtin(std::string_view name);

  int dim() const noexcept { return n_; }
  double c(int i, int j, int k) const { return c_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k]; }
  const std::string& label(int i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Bracket of two algebra elements in basis coordinates.
  Eigen::VectorXd bracket(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

  double antisymmetry_defect() const;
  double jacobi_defect() const;

private:
  int n_;
  std::vector<double> c_;
  std::vector<std::string> labels_;
};

/// Subalgebra spanned by a subset of basis vectors; construction checks
/// closure under the bracket.
class Subalgebra {
public:
  /// Throws NotSubalgebraError if the span is not closed or indices are
  /// invalid.
  Subalgebra(const LieAlgebra& g, std::vector<int> indices);

  const std::vector<int>& indices() const noexcept { return indices_; }
  int size() const noexcept { return static_cast<int>(indices_.size()); }
  bool contains(int i) const;
  /// Position of basis index i inside indices(); throws std::out_of_range.
  int position(int i) const;

private:
  std::vector<int> indices_;
};

/// Every nonempty closed span of basis vectors.
std::vector<Subalgebra> coordinate_subalgebras(const LieAlgebra& g);

/// Matrix of ad(v_i); column b holds the image of v_b.
Eigen::MatrixXd ad_matrix(const LieAlgebra& g, int i);
/// ad(v_i) restricted to h, in the basis h.indices(). i must lie in h.
Eigen::MatrixXd ad_matrix(const LieAlgebra& g, int i, const Subalgebra& h);

/// Tr_h ad(v_i) = sum_{j in h} c_ij^j.
double tr_ad_restricted(const LieAlgebra& g, const Subalgebra& h, int i);

/// K_ij = Tr(ad(v_i) ad(v_j)).
Eigen::MatrixXd killing_form(const LieAlgebra& g);
bool is_semisimple(const LieAlgebra& g, double tolerance = 1e-8);

/// Lower central series reaches {0} within dim steps.
bool is_nilpotent(const LieAlgebra& g, double tolerance = kTolerance);

/// <nabla^E_{V_i} V_j, V_k> = (c_ij^k - c_jk^i - c_ik^j) / 2 for k in h,
/// ordered as h.indices().
std::vector<double> leaf_connection(const LieAlgebra& g, const Subalgebra& h, int i, int j);
/// Closed form of the diagonal case: nabla^E_{V_i} V_i = -sum_k c_ik^i V_k.
std::vector<double> leaf_connection_diagonal(const LieAlgebra& g, const Subalgebra& h, int i);

/// Drift of foliated Brownian motion in the frame {V_k}_{k in h}:
/// d_k = (1/2) sum_{i in h} c_ik^i.
std::vector<double> foliated_drift(const LieAlgebra& g, const Subalgebra& h);

struct InvarianceVerdict {
  bool totally_invariant = true;
  /// (basis index, Tr_h ad) for every trace that does not vanish.
  std::vector<std::pair<int, double>> offending;
};

InvarianceVerdict invariance_verdict(const LieAlgebra& g, const Subalgebra& h, double tolerance = kTolerance);

} // namespace stochflow::liealg
