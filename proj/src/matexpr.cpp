#include "plmi/matexpr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plmi/errors.hpp"

namespace plmi {
namespace {

std::strong_ordering compare_rational(const Rational& a, const Rational& b) {
  const std::int64_t an = a.numerator();
  const std::int64_t bn = b.numerator();
  if (auto c = an <=> bn; c != 0) return c;
  return static_cast<std::int64_t>(a.denominator()) <=> static_cast<std::int64_t>(b.denominator());
}

std::strong_ordering compare_sym(const RatSym& a, const RatSym& b) {
  if (auto c = a.dim() <=> b.dim(); c != 0) return c;
  const auto& pa = a.packed();
  const auto& pb = b.packed();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (auto c = compare_rational(pa[i], pb[i]); c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::size_t mix(std::size_t seed, std::size_t value) {
  return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace

// ---------------------------------------------------------------- RatMatrix

RatMatrix::RatMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), Rational(0)) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix size");
}

RatMatrix RatMatrix::from_rows(const std::vector<std::vector<Rational>>& rows) {
  const int n = static_cast<int>(rows.size());
  const int m = n ? static_cast<int>(rows.front().size()) : 0;
  RatMatrix out(n, m);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != m) {
      throw DimensionError("ragged matrix rows");
    }
    for (int j = 0; j < m; ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

RatMatrix RatMatrix::identity(int n) {
  RatMatrix out(n, n);
  for (int i = 0; i < n; ++i) out(i, i) = Rational(1);
  return out;
}

RatMatrix RatMatrix::transposed() const {
  RatMatrix out(cols_, rows_);
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  }
  return out;
}

bool RatMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](const Rational& v) { return plmi::is_zero(v); });
}

RatMatrix operator*(const RatMatrix& a, const RatMatrix& b) {
  if (a.cols_ != b.rows_) throw DimensionError("matrix product size mismatch");
  RatMatrix out(a.rows_, b.cols_);
  for (int i = 0; i < a.rows_; ++i) {
    for (int l = 0; l < a.cols_; ++l) {
      const Rational& ail = a(i, l);
      if (plmi::is_zero(ail)) continue;
      for (int j = 0; j < b.cols_; ++j) out(i, j) += ail * b(l, j);
    }
  }
  return out;
}

RatMatrix operator+(const RatMatrix& a, const RatMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimensionError("matrix sum size mismatch");
  RatMatrix out = a;
  for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] += b.data_[i];
  return out;
}

// ------------------------------------------------------------------- RatSym

RatSym::RatSym(int n) : n_(n), packed_(static_cast<std::size_t>(n * (n + 1) / 2), Rational(0)) {
  if (n < 0) throw DimensionError("negative matrix size");
}

std::size_t RatSym::slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle: rows before i hold n + (n-1) + ... entries.
  return static_cast<std::size_t>(i * n_ - i * (i - 1) / 2 + (j - i));
}

RatSym RatSym::from_matrix(const RatMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("symmetric matrix must be square");
  RatSym out(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = i; j < m.cols(); ++j) {
      if (m(i, j) != m(j, i)) throw DimensionError("matrix is not exactly symmetric");
      out.set(i, j, m(i, j));
    }
  }
  return out;
}

RatSym RatSym::symmetric_part_twice(const RatMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("symmetric part needs a square matrix");
  RatSym out(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = i; j < m.cols(); ++j) out.set(i, j, m(i, j) + m(j, i));
  }
  return out;
}

RatSym RatSym::identity(int n) {
  RatSym out(n);
  for (int i = 0; i < n; ++i) out.set(i, i, Rational(1));
  return out;
}

bool RatSym::is_zero() const {
  return std::all_of(packed_.begin(), packed_.end(), [](const Rational& v) { return plmi::is_zero(v); });
}

RatSym& RatSym::operator+=(const RatSym& other) {
  if (other.n_ != n_) throw DimensionError("symmetric matrix size mismatch");
  for (std::size_t i = 0; i < packed_.size(); ++i) {
    if (!plmi::is_zero(other.packed_[i])) packed_[i] += other.packed_[i];
  }
  return *this;
}

RatSym& RatSym::operator*=(const Rational& c) {
  for (Rational& v : packed_) {
    if (!plmi::is_zero(v)) v *= c;
  }
  return *this;
}

RatMatrix RatSym::to_matrix() const {
  RatMatrix out(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) out(i, j) = at(i, j);
  }
  return out;
}

Eigen::MatrixXd RatSym::to_dense() const {
  Eigen::MatrixXd out(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = i; j < n_; ++j) {
      const double v = to_double(at(i, j));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

std::size_t RatSym::hash() const {
  std::size_t seed = static_cast<std::size_t>(n_);
  for (const Rational& v : packed_) seed = mix(seed, hash_value(v));
  return seed;
}

// -------------------------------------------------------------- VarRegistry

void VarRegistry::add_group(VarGroup g) {
  if (group(g.name) != nullptr || find(g.name)) {
    throw ConfigError("duplicate variable name '" + g.name + "'");
  }
  groups_.push_back(std::move(g));
}

int VarRegistry::add_scalar(const std::string& name) {
  const int id = size();
  add_group({name, VarKind::Scalar, 1, 1, id, 1});
  vars_.push_back({name, VarKind::Scalar, name, 1, 1});
  return id;
}

int VarRegistry::add_symmetric(const std::string& name, int n) {
  if (n < 1) throw DimensionError("symmetric variable needs n >= 1");
  const int id = size();
  add_group({name, VarKind::SymmetricEntry, n, n, id, n * (n + 1) / 2});
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j) {
      vars_.push_back({name + "[" + std::to_string(i) + "," + std::to_string(j) + "]", VarKind::SymmetricEntry,
                       name, i, j});
    }
  }
  return id;
}

int VarRegistry::add_matrix(const std::string& name, int rows, int cols) {
  if (rows < 1 || cols < 1) throw DimensionError("matrix variable needs positive size");
  const int id = size();
  add_group({name, VarKind::MatrixEntry, rows, cols, id, rows * cols});
  for (int i = 1; i <= rows; ++i) {
    for (int j = 1; j <= cols; ++j) {
      vars_.push_back({name + "[" + std::to_string(i) + "," + std::to_string(j) + "]", VarKind::MatrixEntry, name,
                       i, j});
    }
  }
  return id;
}

std::optional<int> VarRegistry::find(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

const VarGroup* VarRegistry::group(std::string_view name) const {
  for (const VarGroup& g : groups_) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

int VarRegistry::symmetric_entry(const VarGroup& g, int i, int j) const {
  if (g.kind != VarKind::SymmetricEntry) throw ConfigError("'" + g.name + "' is not a symmetric variable");
  if (i > j) std::swap(i, j);
  if (i < 1 || j > g.rows) throw DimensionError("symmetric entry out of range");
  const int n = g.rows;
  const int i0 = i - 1;
  return g.first_id + i0 * n - i0 * (i0 - 1) / 2 + (j - i);
}

int VarRegistry::matrix_entry(const VarGroup& g, int i, int j) const {
  if (g.kind != VarKind::MatrixEntry) throw ConfigError("'" + g.name + "' is not a matrix variable");
  if (i < 1 || i > g.rows || j < 1 || j > g.cols) throw DimensionError("matrix entry out of range");
  return g.first_id + (i - 1) * g.cols + (j - 1);
}

// ---------------------------------------------------------- AffineSymMatrix

AffineSymMatrix::AffineSymMatrix(RegistryPtr registry, int dim)
    : registry_(std::move(registry)), constant_(dim) {}

AffineSymMatrix::AffineSymMatrix(RegistryPtr registry, RatSym constant)
    : registry_(std::move(registry)), constant_(std::move(constant)) {}

void AffineSymMatrix::check_compatible(const AffineSymMatrix& other) const {
  if (registry_ != other.registry_) throw RegistryError("expressions use different variable registries");
  if (dim() != other.dim()) throw DimensionError("expression sizes differ");
}

void AffineSymMatrix::add_term(int var, const RatSym& coeff) {
  if (coeff.dim() != dim()) throw DimensionError("coefficient size differs from expression size");
  if (registry_ && (var < 0 || var >= registry_->size())) throw RegistryError("unknown variable id");
  auto it = std::lower_bound(terms_.begin(), terms_.end(), var,
                             [](const auto& term, int id) { return term.first < id; });
  if (it != terms_.end() && it->first == var) {
    it->second += coeff;
    if (it->second.is_zero()) terms_.erase(it);
  } else if (!coeff.is_zero()) {
    terms_.insert(it, {var, coeff});
  }
}

void AffineSymMatrix::add_constant(const RatSym& c) {
  constant_ += c;
}

AffineSymMatrix& AffineSymMatrix::operator+=(const AffineSymMatrix& other) {
  check_compatible(other);
  constant_ += other.constant_;
  // Sorted merge.
  std::vector<std::pair<int, RatSym>> merged;
  merged.reserve(terms_.size() + other.terms_.size());
  auto a = terms_.begin();
  auto b = other.terms_.begin();
  while (a != terms_.end() || b != other.terms_.end()) {
    if (b == other.terms_.end() || (a != terms_.end() && a->first < b->first)) {
      merged.push_back(std::move(*a++));
    } else if (a == terms_.end() || b->first < a->first) {
      merged.push_back(*b++);
    } else {
      a->second += b->second;
      if (!a->second.is_zero()) merged.push_back(std::move(*a));
      ++a;
      ++b;
    }
  }
  terms_ = std::move(merged);
  return *this;
}

AffineSymMatrix& AffineSymMatrix::operator-=(const AffineSymMatrix& other) {
  AffineSymMatrix neg = other;
  neg *= Rational(-1);
  return *this += neg;
}

AffineSymMatrix& AffineSymMatrix::operator*=(const Rational& c) {
  if (plmi::is_zero(c)) {
    constant_ = RatSym(dim());
    terms_.clear();
    return *this;
  }
  constant_ *= c;
  for (auto& term : terms_) term.second *= c;
  return *this;
}

std::size_t AffineSymMatrix::hash() const {
  std::size_t seed = constant_.hash();
  for (const auto& [id, coeff] : terms_) seed = mix(mix(seed, static_cast<std::size_t>(id)), coeff.hash());
  return seed;
}

std::strong_ordering AffineSymMatrix::compare(const AffineSymMatrix& other) const {
  if (auto c = compare_sym(constant_, other.constant_); c != 0) return c;
  const std::size_t n = std::min(terms_.size(), other.terms_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = terms_[i].first <=> other.terms_[i].first; c != 0) return c;
    if (auto c = compare_sym(terms_[i].second, other.terms_[i].second); c != 0) return c;
  }
  return terms_.size() <=> other.terms_.size();
}

bool AffineSymMatrix::operator==(const AffineSymMatrix& other) const {
  return compare(other) == std::strong_ordering::equal;
}

AffineSymMatrix expr_add(const AffineSymMatrix& a, const AffineSymMatrix& b) {
  AffineSymMatrix out = a;
  out += b;
  return out;
}

AffineSymMatrix expr_scale(const AffineSymMatrix& e, const Rational& c) {
  AffineSymMatrix out = e;
  out *= c;
  return out;
}

Eigen::MatrixXd eval_expr(const AffineSymMatrix& e, std::span<const double> x) {
  const int reg_size = e.registry() ? e.registry()->size() : 0;
  if (static_cast<int>(x.size()) != reg_size) {
    throw DimensionError("variable vector has length " + std::to_string(x.size()) + ", registry has " +
                         std::to_string(reg_size));
  }
  const int n = e.dim();
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v = to_double(e.constant().at(i, j));
      for (const auto& [id, coeff] : e.terms()) {
        const Rational& c = coeff.at(i, j);
        if (!plmi::is_zero(c)) v += x[static_cast<std::size_t>(id)] * to_double(c);
      }
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

// ------------------------------------------------------------- AffineMatrix

AffineMatrix::AffineMatrix(RegistryPtr registry, int rows, int cols)
    : registry_(std::move(registry)), constant_(rows, cols) {}

AffineMatrix AffineMatrix::of_group(RegistryPtr registry, const VarGroup& group) {
  AffineMatrix out(registry, group.rows, group.cols);
  for (int i = 1; i <= group.rows; ++i) {
    for (int j = 1; j <= group.cols; ++j) {
      int id = 0;
      switch (group.kind) {
        case VarKind::SymmetricEntry:
          if (j < i) continue;
          id = registry->symmetric_entry(group, i, j);
          break;
        case VarKind::MatrixEntry:
          id = registry->matrix_entry(group, i, j);
          break;
        case VarKind::Scalar:
          id = group.first_id;
          break;
      }
      RatMatrix basis(group.rows, group.cols);
      basis(i - 1, j - 1) = Rational(1);
      if (group.kind == VarKind::SymmetricEntry) basis(j - 1, i - 1) = Rational(1);
      out.terms_.push_back({id, basis});
    }
  }
  return out;
}

AffineMatrix AffineMatrix::left_multiplied(const RatMatrix& m) const {
  AffineMatrix out(registry_, m.rows(), cols());
  out.constant_ = m * constant_;
  for (const auto& [id, coeff] : terms_) {
    RatMatrix product = m * coeff;
    if (!product.is_zero()) out.terms_.push_back({id, std::move(product)});
  }
  return out;
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& other) {
  if (registry_ != other.registry_) throw RegistryError("expressions use different variable registries");
  constant_ = constant_ + other.constant_;
  for (const auto& [id, coeff] : other.terms_) {
    auto it = std::find_if(terms_.begin(), terms_.end(), [id = id](const auto& t) { return t.first == id; });
    if (it == terms_.end()) {
      terms_.push_back({id, coeff});
    } else {
      it->second = it->second + coeff;
    }
  }
  return *this;
}

AffineSymMatrix AffineMatrix::symmetrized_twice() const {
  AffineSymMatrix out(registry_, RatSym::symmetric_part_twice(constant_));
  for (const auto& [id, coeff] : terms_) out.add_term(id, RatSym::symmetric_part_twice(coeff));
  return out;
}

// --------------------------------------------------------- MembershipVector

MembershipVector::MembershipVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ConfigError("membership vector must be nonempty");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ConfigError("membership weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("membership weights must sum to 1");
}

MembershipVector MembershipVector::vertex(int r, int k) {
  std::vector<double> w(static_cast<std::size_t>(r), 0.0);
  w.at(static_cast<std::size_t>(k - 1)) = 1.0;
  return MembershipVector(std::move(w));
}

MembershipVector MembershipVector::uniform(int r) {
  std::vector<double> w(static_cast<std::size_t>(r), 1.0 / r);
  double sum = 0.0;
  for (double v : w) sum += v;
  w.back() += 1.0 - sum;
  return MembershipVector(std::move(w));
}

// ----------------------------------------------------------------- PlmiSpec

PlmiSpec::PlmiSpec(int q, int r, RegistryPtr registry, int base_fold, std::vector<AffineSymMatrix> vertices)
    : q_(q), r_(r), base_fold_(base_fold), registry_(std::move(registry)) {
  if (q < 1 || r < 1) throw ConfigError("fold count and rule count must be positive");
  if (base_fold < 1 || base_fold > q) throw ConfigError("base fold must lie in 1..q");
  std::size_t expected = 1;
  for (int i = 0; i < base_fold; ++i) expected *= static_cast<std::size_t>(r);
  if (vertices.size() != expected) {
    throw DimensionError("vertex table has " + std::to_string(vertices.size()) + " entries, expected " +
                         std::to_string(expected));
  }
  dim_ = vertices.front().dim();
  for (const AffineSymMatrix& v : vertices) {
    if (v.dim() != dim_) throw DimensionError("vertex expressions differ in size");
    if (v.registry() != registry_) throw RegistryError("vertex expression uses a foreign registry");
  }
  vertices_ = std::make_shared<const std::vector<AffineSymMatrix>>(std::move(vertices));
}

std::size_t PlmiSpec::base_index(const IndexTuple& i) const {
  if (i.size() != q_ || !i.valid_for(r_)) {
    throw DimensionError("index tuple " + i.to_string() + " is not in N_" + std::to_string(r_) + "^" +
                         std::to_string(q_));
  }
  std::size_t idx = 0;
  for (int pos = 0; pos < base_fold_; ++pos) idx = idx * static_cast<std::size_t>(r_) + static_cast<std::size_t>(i[pos] - 1);
  return idx;
}

const AffineSymMatrix& PlmiSpec::vertex(const IndexTuple& i) const {
  return (*vertices_)[base_index(i)];
}

PlmiSpec PlmiSpec::with_fold(int q) const {
  if (q < base_fold_) throw ConfigError("cannot lower the fold below the stored base fold");
  PlmiSpec out = *this;
  out.q_ = q;
  return out;
}

void PlmiSpec::set_lyapunov_variable(std::string name) {
  const VarGroup* g = registry_->group(name);
  if (g == nullptr || g->kind != VarKind::SymmetricEntry || g->rows != dim_) {
    throw ConfigError("Lyapunov variable '" + name + "' must be a symmetric " + std::to_string(dim_) + "x" +
                      std::to_string(dim_) + " variable");
  }
  lyapunov_ = std::move(name);
}

// ------------------------------------------------------------ example spec

PlmiSpec make_example_spec(const Rational& a, const Rational& b, int q) {
  if (q < 2) throw ConfigError("the example system is a double sum; q must be >= 2");
  auto registry = std::make_shared<VarRegistry>();
  registry->add_symmetric("Q", 2);
  for (int i = 1; i <= 3; ++i) registry->add_matrix("F" + std::to_string(i), 1, 2);
  RegistryPtr reg = registry;

  auto r = [](const char* s) { return parse_rational(s); };
  const std::vector<RatMatrix> A = {
      RatMatrix::from_rows({{r("1.59"), r("-7.29")}, {r("0.01"), r("0")}}),
      RatMatrix::from_rows({{r("0.02"), r("-4.64")}, {r("0.35"), r("0.21")}}),
      RatMatrix::from_rows({{-a, r("-4.33")}, {r("0"), r("0")}}),
  };
  const std::vector<RatMatrix> B = {
      RatMatrix::from_rows({{r("1")}, {r("0")}}),
      RatMatrix::from_rows({{r("8")}, {r("0")}}),
      RatMatrix::from_rows({{-b + Rational(6)}, {r("-1")}}),
  };

  const AffineMatrix Q = AffineMatrix::of_group(reg, *reg->group("Q"));
  std::vector<AffineMatrix> F;
  for (int i = 1; i <= 3; ++i) F.push_back(AffineMatrix::of_group(reg, *reg->group("F" + std::to_string(i))));

  std::vector<AffineSymMatrix> vertices;
  for (int i1 = 0; i1 < 3; ++i1) {
    for (int i2 = 0; i2 < 3; ++i2) {
      AffineMatrix m = Q.left_multiplied(A[static_cast<std::size_t>(i1)]);
      m += F[static_cast<std::size_t>(i2)].left_multiplied(B[static_cast<std::size_t>(i1)]);
      vertices.push_back(m.symmetrized_twice());
    }
  }
  PlmiSpec spec(q, 3, reg, 2, std::move(vertices));
  spec.set_lyapunov_variable("Q");
  return spec;
}

PlmiSpec make_example_spec(double a, double b, int q) {
  return make_example_spec(rational_from_double(a), rational_from_double(b), q);
}

// ------------------------------------------------------------- evaluation

VertexValues::VertexValues(const PlmiSpec& spec, std::span<const double> x)
    : q_(spec.q()), r_(spec.r()), base_fold_(spec.base_fold()), dim_(spec.dim()) {
  for (const IndexTuple& t : enumerate_all_tuples(r_, base_fold_)) {
    std::vector<int> full = t.entries();
    full.resize(static_cast<std::size_t>(q_), 1);
    values_.push_back(eval_expr(spec.vertex(IndexTuple(std::move(full))), x));
  }
}

Eigen::MatrixXd VertexValues::combine(const MembershipVector& h) const {
  if (h.size() != r_) throw DimensionError("membership vector length differs from rule count");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim_, dim_);
  // Odometer over N_r^q; a lifted spec reads its value from the leading indices.
  std::vector<int> idx(static_cast<std::size_t>(q_), 0);
  while (true) {
    double weight = 1.0;
    std::size_t base = 0;
    for (int pos = 0; pos < q_; ++pos) {
      weight *= h[idx[static_cast<std::size_t>(pos)]];
      if (pos < base_fold_) base = base * static_cast<std::size_t>(r_) + static_cast<std::size_t>(idx[static_cast<std::size_t>(pos)]);
    }
    if (weight != 0.0) out += weight * values_[base];
    int pos = q_ - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == r_ - 1) idx[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
  }
  return out;
}

Eigen::MatrixXd eval_plmi(const PlmiSpec& spec, const MembershipVector& h, std::span<const double> x) {
  if (h.size() != spec.r()) throw DimensionError("membership vector length differs from rule count");
  return VertexValues(spec, x).combine(h);
}

AffineSymMatrix subst_indices(const PlmiSpec& spec, const IndexTuple& i, int a, int b) {
  return spec.vertex(i.swap_values(a, b));
}

}  // namespace plmi
