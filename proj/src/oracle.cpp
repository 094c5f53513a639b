#include "plmi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "plmi/errors.hpp"

namespace plmi {
namespace {

constexpr int kMaxDecomposeFold = 6;
constexpr int kMaxDecomposeRules = 5;

template <typename T>
void add_scaled(std::vector<T>& out, const std::vector<T>& m, const T& w) {
  for (std::size_t e = 0; e < out.size(); ++e) out[e] += w * m[e];
}

template <typename T>
T power(const T& base, int exponent) {
  T out(1);
  for (int e = 0; e < exponent; ++e) out *= base;
  return out;
}

template <typename T>
T inverse(std::uint64_t n) {
  return T(1) / T(static_cast<std::int64_t>(n));
}

template <>
double inverse<double>(std::uint64_t n) {
  return 1.0 / static_cast<double>(n);
}

template <typename T>
const T& weight(const std::vector<T>& h, int index) {
  return h[static_cast<std::size_t>(index - 1)];
}

/// Sum of Phi over the distinct reorderings of i.
template <typename T>
std::vector<T> perm_sum(const Tensor<T>& t, const IndexTuple& i) {
  std::vector<T> out(static_cast<std::size_t>(t.dim() * t.dim()), T(0));
  for (const IndexTuple& p : distinct_permutations(i).tuples) add_scaled(out, t.at(p), T(1));
  return out;
}

template <typename T>
void check_decompose_input(const Tensor<T>& t, const std::vector<T>& h) {
  if (t.q() > kMaxDecomposeFold || t.r() > kMaxDecomposeRules) {
    throw CapExceeded("decompose_eval supports q <= 6 and r <= 5, got q=" + std::to_string(t.q()) +
                      ", r=" + std::to_string(t.r()));
  }
  if (static_cast<int>(h.size()) != t.r()) throw DimensionError("membership vector length differs from rule count");
}

template <typename T>
std::vector<T> decompose_general(const Tensor<T>& t, const std::vector<T>& h, int bias) {
  const int q = t.q();
  const int r = t.r();
  std::vector<T> out(static_cast<std::size_t>(t.dim() * t.dim()), T(0));
  for (const auto& [k, lambdas] : enumerate_partitions(q)) {
    for (const Partition& lambda : lambdas) {
      const T coef = inverse<T>(multiplicity_factorial(lambda) + static_cast<std::uint64_t>(bias));
      for (int head = 1; head <= r; ++head) {
        for (const IndexTuple& tail : enumerate_distinct_tails(r, k, head)) {
          T w = coef;
          for (int j = 0; j < k; ++j) w *= power(weight(h, tail[j]), lambda.parts[static_cast<std::size_t>(j)]);
          add_scaled(out, perm_sum(t, expand_partition(lambda, tail)), w);
        }
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> decompose_triple(const Tensor<T>& t, const std::vector<T>& h) {
  if (t.q() != 3) throw WrongFold("the triple decomposition needs q=3");
  const int r = t.r();
  std::vector<T> out(static_cast<std::size_t>(t.dim() * t.dim()), T(0));
  const T sixth = inverse<T>(6);
  for (int i1 = 1; i1 <= r; ++i1) {
    const T& h1 = weight(h, i1);
    add_scaled(out, t.at({i1, i1, i1}), h1 * h1 * h1);
    for (int i2 = 1; i2 <= r; ++i2) {
      if (i2 == i1) continue;
      const T& h2 = weight(h, i2);
      add_scaled(out, perm_sum(t, {i1, i1, i2}), h1 * h1 * h2);
      for (int i3 = 1; i3 <= r; ++i3) {
        if (i3 == i1 || i3 == i2) continue;
        add_scaled(out, perm_sum(t, {i1, i2, i3}), h1 * h2 * weight(h, i3) * sixth);
      }
    }
  }
  return out;
}

template <typename T>
std::vector<T> decompose_quadruple(const Tensor<T>& t, const std::vector<T>& h) {
  if (t.q() != 4) throw WrongFold("the quadruple decomposition needs q=4");
  const int r = t.r();
  std::vector<T> out(static_cast<std::size_t>(t.dim() * t.dim()), T(0));
  const T half = inverse<T>(2);
  const T inv24 = inverse<T>(24);
  for (int i1 = 1; i1 <= r; ++i1) {
    const T& h1 = weight(h, i1);
    add_scaled(out, t.at({i1, i1, i1, i1}), h1 * h1 * h1 * h1);
    for (int i2 = 1; i2 <= r; ++i2) {
      if (i2 == i1) continue;
      const T& h2 = weight(h, i2);
      add_scaled(out, perm_sum(t, {i1, i1, i1, i2}), h1 * h1 * h1 * h2);
      add_scaled(out, perm_sum(t, {i1, i1, i2, i2}), h1 * h1 * h2 * h2 * half);
      for (int i3 = 1; i3 <= r; ++i3) {
        if (i3 == i1 || i3 == i2) continue;
        const T& h3 = weight(h, i3);
        add_scaled(out, perm_sum(t, {i1, i1, i2, i3}), h1 * h1 * h2 * h3 * half);
        for (int i4 = 1; i4 <= r; ++i4) {
          if (i4 == i1 || i4 == i2 || i4 == i3) continue;
          add_scaled(out, perm_sum(t, {i1, i2, i3, i4}), h1 * h2 * h3 * weight(h, i4) * inv24);
        }
      }
    }
  }
  return out;
}

nlohmann::json tensor_json(const NumericTensor& t) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& m : t.values()) values.push_back(m);
  return {{"q", t.q()}, {"r", t.r()}, {"dim", t.dim()}, {"values", values}};
}

nlohmann::json tensor_json(const ExactTensor& t) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& m : t.values()) {
    nlohmann::json row = nlohmann::json::array();
    for (const Rational& x : m) row.push_back(to_string(x));
    values.push_back(row);
  }
  return {{"q", t.q()}, {"r", t.r()}, {"dim", t.dim()}, {"values", values}};
}

}  // namespace

// ----------------------------------------------------------------- sampling

MembershipVector sample_simplex(int r, Rng& rng) {
  if (r < 1) throw ConfigError("simplex dimension must be positive");
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> w(static_cast<std::size_t>(r));
  double total = 0.0;
  do {
    total = 0.0;
    for (double& x : w) {
      x = exp1(rng);
      total += x;
    }
  } while (!(total > 0.0));
  for (double& x : w) x /= total;
  return MembershipVector(std::move(w));
}

AmGmCheck check_amgm(const std::vector<double>& c, const std::vector<double>& weights) {
  if (c.size() != weights.size() || c.empty()) throw ConfigError("AM-GM needs matching nonempty value and weight lists");
  double total = 0.0;
  double am = 0.0;
  double log_gm = 0.0;
  bool zero = false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] < 0.0) throw ConfigError("AM-GM values must be nonnegative");
    if (!(weights[i] > 0.0)) throw ConfigError("AM-GM weights must be positive");
    total += weights[i];
    am += weights[i] * c[i];
    if (c[i] == 0.0) {
      zero = true;
    } else {
      log_gm += weights[i] * std::log(c[i]);
    }
  }
  am /= total;
  const double gm = zero ? 0.0 : std::exp(log_gm / total);
  return {gm <= am + 1e-12, am - gm};
}

double amgm_monomial_gap(const MembershipVector& h, const Partition& lambda, const IndexTuple& tail) {
  const int q = lambda.fold();
  double monomial = 1.0;
  double bound = 0.0;
  for (int j = 0; j < lambda.k; ++j) {
    const double hj = h[tail[j] - 1];
    const int part = lambda.parts[static_cast<std::size_t>(j)];
    monomial *= std::pow(hj, part);
    bound += part * std::pow(hj, q);
  }
  return bound / q - monomial;
}

// ------------------------------------------------------------------ tensors

template <typename T>
Tensor<T>::Tensor(int q, int r, int dim) : q_(q), r_(r), dim_(dim) {
  if (q < 1 || r < 1 || dim < 1) throw ConfigError("tensor needs positive q, r and dim");
  std::size_t count = 1;
  for (int i = 0; i < q; ++i) {
    count *= static_cast<std::size_t>(r);
    if (count > (std::size_t{1} << 22)) throw CapExceeded("tensor has too many entries");
  }
  values_.assign(count, Matrix(static_cast<std::size_t>(dim * dim), T(0)));
}

template <typename T>
std::size_t Tensor<T>::offset(const IndexTuple& i) const {
  if (i.size() != q_ || !i.valid_for(r_)) throw DimensionError("index " + i.to_string() + " outside the tensor");
  std::size_t pos = 0;
  for (int v : i.entries()) pos = pos * static_cast<std::size_t>(r_) + static_cast<std::size_t>(v - 1);
  return pos;
}

template class Tensor<double>;
template class Tensor<Rational>;

NumericTensor random_tensor(int q, int r, int dim, Rng& rng) {
  NumericTensor t(q, r, dim);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const IndexTuple& i : enumerate_all_tuples(r, q)) {
    auto& m = t.at(i);
    for (int a = 0; a < dim; ++a) {
      for (int b = a; b < dim; ++b) {
        const double v = u(rng);
        m[static_cast<std::size_t>(a * dim + b)] = v;
        m[static_cast<std::size_t>(b * dim + a)] = v;
      }
    }
  }
  return t;
}

ExactTensor random_integer_tensor(int q, int r, int dim, int bound, Rng& rng) {
  ExactTensor t(q, r, dim);
  std::uniform_int_distribution<int> u(-bound, bound);
  for (const IndexTuple& i : enumerate_all_tuples(r, q)) {
    auto& m = t.at(i);
    for (int a = 0; a < dim; ++a) {
      for (int b = a; b < dim; ++b) {
        const Rational v = make_rational(u(rng));
        m[static_cast<std::size_t>(a * dim + b)] = v;
        m[static_cast<std::size_t>(b * dim + a)] = v;
      }
    }
  }
  return t;
}

std::vector<Rational> random_rational_simplex(int r, int max_weight, Rng& rng) {
  std::uniform_int_distribution<int> u(1, max_weight);
  std::vector<int> w(static_cast<std::size_t>(r));
  std::int64_t total = 0;
  for (int& x : w) {
    x = u(rng);
    total += x;
  }
  std::vector<Rational> out;
  for (int x : w) out.push_back(make_rational(x, total));
  return out;
}

// ----------------------------------------------------------- decompositions

template <typename T>
std::vector<T> flat_sum(const Tensor<T>& t, const std::vector<T>& h) {
  if (static_cast<int>(h.size()) != t.r()) throw DimensionError("membership vector length differs from rule count");
  std::vector<T> out(static_cast<std::size_t>(t.dim() * t.dim()), T(0));
  for (const IndexTuple& i : enumerate_all_tuples(t.r(), t.q())) {
    T w(1);
    for (int v : i.entries()) w *= weight(h, v);
    add_scaled(out, t.at(i), w);
  }
  return out;
}

template <typename T>
std::vector<T> decompose_eval(const Tensor<T>& t, const std::vector<T>& h, const DecomposeOptions& options) {
  check_decompose_input(t, h);
  switch (options.path) {
    case DecomposePath::General: return decompose_general(t, h, options.mu_factorial_bias);
    case DecomposePath::Triple: return decompose_triple(t, h);
    case DecomposePath::Quadruple: return decompose_quadruple(t, h);
  }
  throw ConfigError("unknown decomposition path");
}

template std::vector<double> flat_sum(const Tensor<double>&, const std::vector<double>&);
template std::vector<Rational> flat_sum(const Tensor<Rational>&, const std::vector<Rational>&);
template std::vector<double> decompose_eval(const Tensor<double>&, const std::vector<double>&,
                                            const DecomposeOptions&);
template std::vector<Rational> decompose_eval(const Tensor<Rational>&, const std::vector<Rational>&,
                                              const DecomposeOptions&);

double relative_residual(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("residual of differently sized matrices");
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    norm += a[i] * a[i];
  }
  return std::sqrt(diff) / (1.0 + std::sqrt(norm));
}

// ------------------------------------------------------------ identity suite

std::string check_integer_identities(int q_max, int r_max) {
  for (int q = 1; q <= q_max; ++q) {
    for (int k = 1; k <= q; ++k) {
      if (stirling2(q, k) != stirling2_by_partitions(q, k)) {
        return "stirling q=" + std::to_string(q) + " k=" + std::to_string(k);
      }
    }
    for (int r = 1; r <= r_max; ++r) {
      if (!power_identity_check(q, r)) return "power identity q=" + std::to_string(q) + " r=" + std::to_string(r);
      if (!partition_cover_check(q, r)) return "partition cover q=" + std::to_string(q) + " r=" + std::to_string(r);
    }
  }
  return {};
}

bool IdentityReport::passed() const {
  return integer_identities && std::all_of(cases.begin(), cases.end(), [](const IdentityCase& c) { return c.passed; });
}

IdentityReport run_identity_suite(const IdentityOptions& options) {
  IdentityReport report;
  report.integer_failure = check_integer_identities();
  report.integer_identities = report.integer_failure.empty();
  if (options.trials <= 0) return report;

  for (int q : options.folds) {
    for (int r : options.rules) {
      IdentityCase c;
      c.q = q;
      c.r = r;
      c.trials = options.trials;
      std::seed_seq seq{options.seed, static_cast<std::uint64_t>(q), static_cast<std::uint64_t>(r)};
      Rng rng(seq);

      std::vector<DecomposeOptions> paths{{DecomposePath::General, options.mu_factorial_bias}};
      if (q == 3) paths.push_back({DecomposePath::Triple, 0});
      if (q == 4) paths.push_back({DecomposePath::Quadruple, 0});

      for (int trial = 0; trial < options.trials; ++trial) {
        const NumericTensor t = random_tensor(q, r, options.dim, rng);
        const MembershipVector h = sample_simplex(r, rng);
        const std::vector<double> flat = flat_sum(t, h.weights());
        for (const DecomposeOptions& path : paths) {
          const double res = relative_residual(flat, decompose_eval(t, h.weights(), path));
          c.max_residual = std::max(c.max_residual, res);
          if (!(res <= options.tolerance) && c.passed) {
            c.passed = false;
            nlohmann::json replay = {{"trial", trial},
                                     {"path", static_cast<int>(path.path)},
                                     {"residual", res},
                                     {"h", h.weights()},
                                     {"tensor", tensor_json(t)}};
            c.failure = replay.dump();
          }
        }
      }

      if (options.exact) {
        const int exact_trials = std::min(options.trials, 10);
        for (int trial = 0; trial < exact_trials; ++trial) {
          const ExactTensor t = random_integer_tensor(q, r, options.dim, 9, rng);
          const std::vector<Rational> h = random_rational_simplex(r, 6, rng);
          const std::vector<Rational> flat = flat_sum(t, h);
          for (const DecomposeOptions& path : paths) {
            if (decompose_eval(t, h, path) != flat) {
              c.exact_zero = false;
              if (c.passed) {
                c.passed = false;
                nlohmann::json hj = nlohmann::json::array();
                for (const Rational& x : h) hj.push_back(to_string(x));
                nlohmann::json replay = {{"exact_trial", trial},
                                         {"path", static_cast<int>(path.path)},
                                         {"h", hj},
                                         {"tensor", tensor_json(t)}};
                c.failure = replay.dump();
              }
            }
          }
        }
      }
      report.cases.push_back(std::move(c));
    }
  }
  return report;
}

// ---------------------------------------------------------------- soundness

SoundnessReport soundness_sample(const PlmiSpec& spec, const FeasibilityResult& result, int n_samples, Rng& rng) {
  if (result.status != FeasibilityStatus::FeasibleWithMargin) {
    throw ConfigError("soundness sampling needs a feasible witness");
  }
  const int r = spec.r();
  const VertexValues values(spec, result.witness);

  std::vector<MembershipVector> points;
  for (int k = 1; k <= r; ++k) points.push_back(MembershipVector::vertex(r, k));
  for (int a = 0; a < r; ++a) {
    for (int b = a + 1; b < r; ++b) {
      std::vector<double> w(static_cast<std::size_t>(r), 0.0);
      w[static_cast<std::size_t>(a)] = 0.5;
      w[static_cast<std::size_t>(b)] = 0.5;
      points.emplace_back(std::move(w));
    }
  }
  points.push_back(MembershipVector::uniform(r));
  for (int s = 0; s < n_samples; ++s) points.push_back(sample_simplex(r, rng));

  SoundnessReport report;
  report.max_eigenvalue = -std::numeric_limits<double>::infinity();
  for (const MembershipVector& h : points) {
    const double lam = max_eigenvalue(values.combine(h));
    ++report.samples;
    if (lam >= 0.0) ++report.violations;
    if (lam > report.max_eigenvalue) {
      report.max_eigenvalue = lam;
      report.worst_h = h.weights();
    }
  }
  return report;
}

// -------------------------------------------------------------- containment

ContainmentSummary region_containment(const RegionMap& first, const RegionMap& second) {
  if (first.a_values != second.a_values || first.b_values != second.b_values) {
    throw ConfigError("containment needs identical grids ('" + first.label + "' vs '" + second.label + "')");
  }
  const std::size_t cells = first.a_values.size() * first.b_values.size();
  if (first.status.size() != cells || second.status.size() != cells) {
    throw ConfigError("region map does not cover its grid");
  }
  ContainmentSummary out;
  out.first = first.label;
  out.second = second.label;
  for (std::size_t ia = 0; ia < first.a_values.size(); ++ia) {
    for (std::size_t ib = 0; ib < first.b_values.size(); ++ib) {
      const GridPoint p{first.a_values[ia], first.b_values[ib]};
      const FeasibilityStatus s1 = first.at(ia, ib);
      const FeasibilityStatus s2 = second.at(ia, ib);
      const bool f1 = s1 == FeasibilityStatus::FeasibleWithMargin;
      const bool f2 = s2 == FeasibilityStatus::FeasibleWithMargin;
      if (f1 == f2) continue;
      if (s1 == FeasibilityStatus::Inconclusive || s2 == FeasibilityStatus::Inconclusive) {
        out.inconclusive.push_back(p);
      } else if (f1) {
        out.first_not_second.push_back(p);
      } else {
        out.second_not_first.push_back(p);
      }
    }
  }
  return out;
}

}  // namespace plmi
