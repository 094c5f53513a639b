#pragma once

// Decision-variable registry and affine symmetric matrix expressions with
// exact rational coefficients, plus the nested fuzzy summation data model.

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plmi/combinat.hpp"
#include "plmi/rational.hpp"

namespace plmi {

/// Dense rows x cols rational matrix, row-major.
class RatMatrix {
 public:
  RatMatrix() = default;
  RatMatrix(int rows, int cols);

  static RatMatrix from_rows(const std::vector<std::vector<Rational>>& rows);
  static RatMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const Rational& operator()(int i, int j) const { return data_[index(i, j)]; }
  Rational& operator()(int i, int j) { return data_[index(i, j)]; }

  RatMatrix transposed() const;
  bool is_zero() const;

  friend RatMatrix operator*(const RatMatrix& a, const RatMatrix& b);
  friend RatMatrix operator+(const RatMatrix& a, const RatMatrix& b);
  bool operator==(const RatMatrix&) const = default;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * cols_ + j); }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<Rational> data_;
};

/// Symmetric n x n rational matrix stored as its packed upper triangle.
class RatSym {
 public:
  RatSym() = default;
  explicit RatSym(int n);

  /// Throws DimensionError unless m is square and exactly symmetric.
  static RatSym from_matrix(const RatMatrix& m);
  /// m + m^T for any square m.
  static RatSym symmetric_part_twice(const RatMatrix& m);
  static RatSym identity(int n);

  int dim() const { return n_; }
  const Rational& at(int i, int j) const { return packed_[slot(i, j)]; }
  void set(int i, int j, const Rational& v) { packed_[slot(i, j)] = v; }
  const std::vector<Rational>& packed() const { return packed_; }

  bool is_zero() const;
  RatSym& operator+=(const RatSym& other);
  RatSym& operator*=(const Rational& c);
  RatMatrix to_matrix() const;
  Eigen::MatrixXd to_dense() const;
  std::size_t hash() const;

  bool operator==(const RatSym&) const = default;

 private:
  std::size_t slot(int i, int j) const;

  int n_ = 0;
  std::vector<Rational> packed_;
};

enum class VarKind { Scalar, SymmetricEntry, MatrixEntry };

struct Variable {
  std::string name;   // e.g. "x", "Q[1,2]", "F1[1,2]"
  VarKind kind;
  std::string group;  // owning matrix variable (== name for scalars)
  int row = 0;        // 1-based within the group
  int col = 0;
};

struct VarGroup {
  std::string name;
  VarKind kind;
  int rows = 1;
  int cols = 1;
  int first_id = 0;
  int count = 0;
};

/// Append-only list of scalar decision variables. A variable's id is its
/// position. Freeze (share as const) before concurrent use.
class VarRegistry {
 public:
  int add_scalar(const std::string& name);
  /// n(n+1)/2 upper-triangle scalars, row-major; returns the first id.
  int add_symmetric(const std::string& name, int n);
  /// rows*cols scalars, row-major; returns the first id.
  int add_matrix(const std::string& name, int rows, int cols);

  int size() const { return static_cast<int>(vars_.size()); }
  const Variable& var(int id) const { return vars_.at(static_cast<std::size_t>(id)); }
  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<VarGroup>& groups() const { return groups_; }

  std::optional<int> find(std::string_view name) const;
  const VarGroup* group(std::string_view name) const;

  /// Id of entry (i, j) (1-based) of a symmetric group; order-insensitive.
  int symmetric_entry(const VarGroup& g, int i, int j) const;
  int matrix_entry(const VarGroup& g, int i, int j) const;

 private:
  void add_group(VarGroup g);

  std::vector<Variable> vars_;
  std::vector<VarGroup> groups_;
};

using RegistryPtr = std::shared_ptr<const VarRegistry>;

/// constant + sum_v x_v coeff_v with every matrix symmetric by construction and
/// no zero coefficient stored. Terms are kept sorted by variable id.
class AffineSymMatrix {
 public:
  AffineSymMatrix() = default;
  AffineSymMatrix(RegistryPtr registry, int dim);
  AffineSymMatrix(RegistryPtr registry, RatSym constant);

  int dim() const { return constant_.dim(); }
  const RegistryPtr& registry() const { return registry_; }
  const RatSym& constant() const { return constant_; }
  const std::vector<std::pair<int, RatSym>>& terms() const { return terms_; }

  /// Adds coeff to the coefficient of `var`, dropping it if it cancels.
  void add_term(int var, const RatSym& coeff);
  void add_constant(const RatSym& c);

  AffineSymMatrix& operator+=(const AffineSymMatrix& other);
  AffineSymMatrix& operator-=(const AffineSymMatrix& other);
  AffineSymMatrix& operator*=(const Rational& c);

  bool is_zero() const { return terms_.empty() && constant_.is_zero(); }
  std::size_t hash() const;

  /// Total order on the rational data (dimension, constant, then terms).
  std::strong_ordering compare(const AffineSymMatrix& other) const;
  bool operator==(const AffineSymMatrix& other) const;

 private:
  void check_compatible(const AffineSymMatrix& other) const;

  RegistryPtr registry_;
  RatSym constant_;
  std::vector<std::pair<int, RatSym>> terms_;
};

AffineSymMatrix expr_add(const AffineSymMatrix& a, const AffineSymMatrix& b);
AffineSymMatrix expr_scale(const AffineSymMatrix& e, const Rational& c);

/// constant + sum x_v coeff_v in floating point; exactly symmetric.
Eigen::MatrixXd eval_expr(const AffineSymMatrix& e, std::span<const double> x);

/// General (not necessarily symmetric) affine matrix expression; used to build
/// products such as A Q + B F before symmetrizing.
class AffineMatrix {
 public:
  AffineMatrix(RegistryPtr registry, int rows, int cols);

  /// The matrix variable of a registry group as an expression.
  static AffineMatrix of_group(RegistryPtr registry, const VarGroup& group);

  int rows() const { return constant_.rows(); }
  int cols() const { return constant_.cols(); }

  AffineMatrix left_multiplied(const RatMatrix& m) const;
  AffineMatrix& operator+=(const AffineMatrix& other);
  /// M + M^T.
  AffineSymMatrix symmetrized_twice() const;

 private:
  RegistryPtr registry_;
  RatMatrix constant_;
  std::vector<std::pair<int, RatMatrix>> terms_;
};

/// A point on the (r-1)-simplex standing in for the memberships h_i(z).
class MembershipVector {
 public:
  /// Throws ConfigError unless weights are nonnegative and sum to 1 within 1e-12.
  explicit MembershipVector(std::vector<double> weights);

  /// The k-th vertex, k in 1..r.
  static MembershipVector vertex(int r, int k);
  static MembershipVector uniform(int r);

  int size() const { return static_cast<int>(weights_.size()); }
  double operator[](int i) const { return weights_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// Data of the q-fold nested fuzzy summation: the vertex map i -> Phi_i over
/// a shared registry. A spec may be lifted: vertex(i) then depends only on the
/// first `base_fold` indices and only r^base_fold expressions are stored.
class PlmiSpec {
 public:
  /// `vertices` lists Phi_i for every i in N_r^base_fold in lexicographic order.
  PlmiSpec(int q, int r, RegistryPtr registry, int base_fold, std::vector<AffineSymMatrix> vertices);

  int q() const { return q_; }
  int r() const { return r_; }
  int dim() const { return dim_; }
  int base_fold() const { return base_fold_; }
  const RegistryPtr& registry() const { return registry_; }

  const AffineSymMatrix& vertex(const IndexTuple& i) const;

  /// Same base data lifted to a different fold count (>= base_fold).
  PlmiSpec with_fold(int q) const;

  /// Name of the symmetric variable acting as the Lyapunov matrix, if any.
  const std::optional<std::string>& lyapunov_variable() const { return lyapunov_; }
  void set_lyapunov_variable(std::string name);

 private:
  std::size_t base_index(const IndexTuple& i) const;

  int q_ = 0;
  int r_ = 0;
  int dim_ = 0;
  int base_fold_ = 0;
  RegistryPtr registry_;
  std::shared_ptr<const std::vector<AffineSymMatrix>> vertices_;
  std::optional<std::string> lyapunov_;
};

/// The three-rule benchmark system with parameters (a, b):
/// Phi_{i1 i2} = (A_{i1} Q + B_{i1} F_{i2})^T + A_{i1} Q + B_{i1} F_{i2},
/// lifted to fold q by ignoring trailing indices. Variables: Q (symmetric 2x2)
/// and F1, F2, F3 (1x2). Q is the designated Lyapunov variable.
PlmiSpec make_example_spec(const Rational& a, const Rational& b, int q);
PlmiSpec make_example_spec(double a, double b, int q);

/// Every stored vertex of a spec evaluated at x, for repeated combination.
class VertexValues {
 public:
  VertexValues(const PlmiSpec& spec, std::span<const double> x);

  /// sum over N_r^q of prod h * Phi_i(x); zero-weight indices are skipped.
  Eigen::MatrixXd combine(const MembershipVector& h) const;

 private:
  int q_;
  int r_;
  int base_fold_;
  int dim_;
  std::vector<Eigen::MatrixXd> values_;
};

Eigen::MatrixXd eval_plmi(const PlmiSpec& spec, const MembershipVector& h, std::span<const double> x);

/// Phi at the tuple obtained from i by exchanging the values a and b.
AffineSymMatrix subst_indices(const PlmiSpec& spec, const IndexTuple& i, int a, int b);

}  // namespace plmi
