#pragma once

// Independent numeric checks: simplex sampling, the nested-summation
// decompositions evaluated term by term, the weighted AM-GM inequality,
// sampled soundness of solved witnesses and region containment.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plmi/combinat.hpp"
#include "plmi/matexpr.hpp"
#include "plmi/rational.hpp"
#include "plmi/sdp.hpp"

namespace plmi {

using Rng = std::mt19937_64;

/// Uniform point on the (r-1)-simplex from normalized exponential draws.
MembershipVector sample_simplex(int r, Rng& rng);

struct AmGmCheck {
  bool holds = false;
  double gap = 0.0;  // arithmetic mean minus geometric mean
};

/// (prod c_i^w_i)^(1/W) <= sum w_i c_i / W + 1e-12 with W = sum w_i.
/// Throws ConfigError on negative c, nonpositive weights or size mismatch.
AmGmCheck check_amgm(const std::vector<double>& c, const std::vector<double>& weights);

/// (1/q) sum_j lambda_j h_{tail_j}^q - h^lambda: the pure-power over-bound
/// applied to a mixed membership monomial. Nonnegative for points on the simplex.
double amgm_monomial_gap(const MembershipVector& h, const Partition& lambda, const IndexTuple& tail);

/// Symmetric dim x dim matrices indexed by N_r^q, stored row-major per tuple
/// in lexicographic tuple order. T is double or Rational.
template <typename T>
class Tensor {
 public:
  using Matrix = std::vector<T>;  // dim * dim, row-major

  Tensor(int q, int r, int dim);

  int q() const { return q_; }
  int r() const { return r_; }
  int dim() const { return dim_; }

  const Matrix& at(const IndexTuple& i) const { return values_[offset(i)]; }
  Matrix& at(const IndexTuple& i) { return values_[offset(i)]; }
  const std::vector<Matrix>& values() const { return values_; }

 private:
  std::size_t offset(const IndexTuple& i) const;

  int q_;
  int r_;
  int dim_;
  std::vector<Matrix> values_;
};

using NumericTensor = Tensor<double>;
using ExactTensor = Tensor<Rational>;

/// Symmetric entries uniform in [-1, 1].
NumericTensor random_tensor(int q, int r, int dim, Rng& rng);
/// Symmetric integer entries in [-bound, bound].
ExactTensor random_integer_tensor(int q, int r, int dim, int bound, Rng& rng);
/// Rational point on the simplex: positive integer weights in 1..max_weight, normalized.
std::vector<Rational> random_rational_simplex(int r, int max_weight, Rng& rng);

enum class DecomposePath { General, Triple, Quadruple };

struct DecomposeOptions {
  DecomposePath path = DecomposePath::General;
  /// Added to every mu(lambda)! in the general path. Nonzero only in negative controls.
  int mu_factorial_bias = 0;
};

/// sum over N_r^q of prod h * Phi_i.
template <typename T>
std::vector<T> flat_sum(const Tensor<T>& t, const std::vector<T>& h);

/// The decomposed right-hand side evaluated term by term. The general path
/// sums (1/mu!) h^lambda P(Phi_{i^lambda}) over every lambda and every
/// distinct-index tail; the Triple and Quadruple paths spell out the q = 3 and
/// q = 4 statements. Throws CapExceeded beyond q = 6 or r = 5 and WrongFold
/// if a dedicated path is asked for the wrong q.
template <typename T>
std::vector<T> decompose_eval(const Tensor<T>& t, const std::vector<T>& h, const DecomposeOptions& options = {});

/// || a - b ||_F / (1 + || a ||_F).
double relative_residual(const std::vector<double>& a, const std::vector<double>& b);

struct IdentityCase {
  int q = 0;
  int r = 0;
  int trials = 0;
  double max_residual = 0.0;     // worst over trials and paths
  bool exact_zero = true;        // exact-rational run reproduced the flat sum
  bool passed = true;
  std::string failure;           // replay data for the first failing trial
};

struct IdentityOptions {
  std::vector<int> folds{3, 4, 5};
  std::vector<int> rules{2, 3, 4};
  int trials = 100;
  int dim = 2;
  std::uint64_t seed = 1;
  double tolerance = 1e-10;
  int mu_factorial_bias = 0;
  bool exact = true;
};

struct IdentityReport {
  std::vector<IdentityCase> cases;
  /// Exact combinatorial identities for q <= 8, r <= 12.
  bool integer_identities = true;
  std::string integer_failure;
  bool passed() const;
};

IdentityReport run_identity_suite(const IdentityOptions& options);

/// Checks power, partition-cover and Stirling agreement for every q <= q_max,
/// r <= r_max. Returns the first failing case or an empty string.
std::string check_integer_identities(int q_max = kMaxPartitionFold, int r_max = kMaxIdentityRules);

struct SoundnessReport {
  int samples = 0;
  double max_eigenvalue = 0.0;  // worst lambda_max(Phi(h, witness)) over samples
  int violations = 0;           // samples with lambda_max >= 0
  std::vector<double> worst_h;
};

/// Vertices, edge midpoints, the barycenter, then n_samples random points.
/// Throws ConfigError unless result is FeasibleWithMargin.
SoundnessReport soundness_sample(const PlmiSpec& spec, const FeasibilityResult& result, int n_samples, Rng& rng);

/// Status of every grid cell for one method, row-major with a varying slowest.
struct RegionMap {
  std::string label;
  std::vector<double> a_values;
  std::vector<double> b_values;
  std::vector<FeasibilityStatus> status;

  FeasibilityStatus at(std::size_t ia, std::size_t ib) const { return status[ia * b_values.size() + ib]; }
};

struct GridPoint {
  double a = 0.0;
  double b = 0.0;
  bool operator==(const GridPoint&) const = default;
};

struct ContainmentSummary {
  std::string first;
  std::string second;
  std::vector<GridPoint> first_not_second;  // Feasible in first, Infeasible in second
  std::vector<GridPoint> second_not_first;
  std::vector<GridPoint> inconclusive;      // either side Inconclusive; never a violation
};

/// Throws ConfigError unless both maps share the grid.
ContainmentSummary region_containment(const RegionMap& first, const RegionMap& second);

}  // namespace plmi
