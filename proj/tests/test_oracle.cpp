#include <cmath>

#include "doctest.h"
#include "plmi/errors.hpp"
#include "plmi/oracle.hpp"
#include "plmi/relax.hpp"

using namespace plmi;

namespace {

// Direct sum over every tuple, written without the library's helpers.
std::vector<double> direct_sum(const NumericTensor& t, const std::vector<double>& h) {
  std::vector<double> out(static_cast<std::size_t>(t.dim() * t.dim()), 0.0);
  for (const IndexTuple& i : enumerate_all_tuples(t.r(), t.q())) {
    double w = 1.0;
    for (int p = 0; p < i.size(); ++p) w *= h[static_cast<std::size_t>(i[p] - 1)];
    for (std::size_t e = 0; e < out.size(); ++e) out[e] += w * t.at(i)[e];
  }
  return out;
}

RegionMap grid_map(std::string label, std::vector<FeasibilityStatus> status) {
  return {std::move(label), {0.0, 1.0}, {0.0, 1.0}, std::move(status)};
}

constexpr auto F = FeasibilityStatus::FeasibleWithMargin;
constexpr auto I = FeasibilityStatus::Infeasible;
constexpr auto U = FeasibilityStatus::Inconclusive;

}  // namespace

TEST_CASE("simplex samples are on the simplex with uniform means") {
  Rng rng(42);
  const int n = 20000;
  const int r = 3;
  std::vector<double> mean(r, 0.0);
  for (int s = 0; s < n; ++s) {
    auto h = sample_simplex(r, rng);
    double total = 0.0;
    for (int k = 0; k < r; ++k) {
      CHECK(h[k] >= 0.0);
      total += h[k];
      mean[static_cast<std::size_t>(k)] += h[k] / n;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Flat Dirichlet: each coordinate has mean 1/r and variance (r-1)/(r^2 (r+1)).
  const double se = std::sqrt((r - 1.0) / (r * r * (r + 1.0)) / n);
  for (double m : mean) CHECK(std::abs(m - 1.0 / r) < 3 * se);
}

TEST_CASE("weighted AM-GM checks") {
  auto eq = check_amgm({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0});
  CHECK(eq.holds);
  CHECK(eq.gap == doctest::Approx(0.0));
  auto two = check_amgm({1.0, 4.0}, {1.0, 1.0});
  CHECK(two.holds);
  CHECK(two.gap == doctest::Approx(0.5));
  auto zero = check_amgm({0.0, 3.0}, {2.0, 1.0});
  CHECK(zero.gap == doctest::Approx(1.0));
  CHECK_THROWS_AS(check_amgm({-1.0}, {1.0}), ConfigError);
  CHECK_THROWS_AS(check_amgm({1.0}, {0.0}), ConfigError);
  CHECK_THROWS_AS(check_amgm({1.0, 2.0}, {1.0}), ConfigError);
}

TEST_CASE("monomial over-bound is nonnegative on the simplex") {
  Rng rng(5);
  auto lambda = Partition::from_parts({2, 1, 0});
  for (int s = 0; s < 200; ++s) {
    auto h = sample_simplex(3, rng);
    double expected = (2 * std::pow(h[0], 3) + std::pow(h[1], 3)) / 3 - h[0] * h[0] * h[1];
    double gap = amgm_monomial_gap(h, lambda, IndexTuple{1, 2});
    CHECK(gap == doctest::Approx(expected).epsilon(1e-12));
    CHECK(gap >= -1e-15);
  }
  auto q4 = Partition::from_parts({2, 1, 1, 0});
  for (int s = 0; s < 200; ++s) CHECK(amgm_monomial_gap(sample_simplex(4, rng), q4, IndexTuple{3, 1, 4}) >= -1e-15);
  CHECK(amgm_monomial_gap(MembershipVector::uniform(3), Partition::from_parts({1, 1, 1}), IndexTuple{1, 2, 3}) ==
        doctest::Approx(0.0));
}

TEST_CASE("flat sum matches a direct loop") {
  Rng rng(1);
  for (int q : {2, 3, 4}) {
    auto t = random_tensor(q, 3, 2, rng);
    auto h = sample_simplex(3, rng).weights();
    CHECK(relative_residual(flat_sum(t, h), direct_sum(t, h)) < 1e-15);
  }
}

TEST_CASE("decompositions reproduce the flat sum") {
  Rng rng(2);
  for (int q = 2; q <= 6; ++q) {
    for (int r = 1; r <= 4; ++r) {
      auto t = random_tensor(q, r, 2, rng);
      auto h = sample_simplex(r, rng).weights();
      CHECK(relative_residual(decompose_eval(t, h), direct_sum(t, h)) < 1e-12);
    }
  }
  for (int r = 2; r <= 5; ++r) {
    auto t3 = random_tensor(3, r, 3, rng);
    auto t4 = random_tensor(4, r, 3, rng);
    auto h = sample_simplex(r, rng).weights();
    CHECK(relative_residual(decompose_eval(t3, h, {DecomposePath::Triple, 0}), direct_sum(t3, h)) < 1e-12);
    CHECK(relative_residual(decompose_eval(t4, h, {DecomposePath::Quadruple, 0}), direct_sum(t4, h)) < 1e-12);
  }
}

TEST_CASE("exact decompositions are exactly the flat sum") {
  Rng rng(3);
  for (int q : {3, 4}) {
    for (int r : {2, 3}) {
      auto t = random_integer_tensor(q, r, 2, 9, rng);
      auto h = random_rational_simplex(r, 7, rng);
      Rational total;
      for (const auto& v : h) total += v;
      CHECK(total == make_rational(1));
      const auto flat = flat_sum(t, h);
      CHECK(decompose_eval(t, h) == flat);
      const auto path = q == 3 ? DecomposePath::Triple : DecomposePath::Quadruple;
      CHECK(decompose_eval(t, h, {path, 0}) == flat);
    }
  }
}

TEST_CASE("a perturbed multiplicity breaks the identity") {
  Rng rng(4);
  auto t = random_tensor(4, 3, 2, rng);
  auto h = sample_simplex(3, rng).weights();
  CHECK(relative_residual(decompose_eval(t, h, {DecomposePath::General, 1}), direct_sum(t, h)) > 1e-6);
}

TEST_CASE("decomposition limits") {
  Rng rng(5);
  auto t7 = random_tensor(7, 2, 1, rng);
  CHECK_THROWS_AS(decompose_eval(t7, std::vector<double>{0.5, 0.5}), CapExceeded);
  auto t3 = random_tensor(3, 2, 1, rng);
  CHECK_THROWS_AS(decompose_eval(t3, std::vector<double>{0.5, 0.5}, {DecomposePath::Quadruple, 0}), WrongFold);
  CHECK_THROWS_AS(decompose_eval(t3, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("identity suite passes and its negative control fails") {
  IdentityOptions o;
  o.folds = {3, 4};
  o.rules = {2, 3};
  o.trials = 5;
  auto report = run_identity_suite(o);
  CHECK(report.passed());
  CHECK(report.cases.size() == 4);
  for (const auto& c : report.cases) {
    CHECK(c.max_residual < 1e-12);
    CHECK(c.exact_zero);
  }
  o.mu_factorial_bias = 1;
  auto bad = run_identity_suite(o);
  CHECK_FALSE(bad.passed());
  bool replay = false;
  for (const auto& c : bad.cases) replay = replay || !c.failure.empty();
  CHECK(replay);
}

TEST_CASE("integer identities hold over the full range") {
  CHECK(check_integer_identities() == "");
}

TEST_CASE("relative residual") {
  CHECK(relative_residual({1.0, 0.0}, {1.0, 0.0}) == 0.0);
  CHECK(relative_residual({3.0, 4.0}, {3.0, 3.0}) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("soundness sampling of a solved witness") {
  auto spec = make_example_spec(0.0, 0.0, 2);
  auto set = canonicalize(gen_tuan(spec));
  auto result = solve_feasibility(stabilization_problem(spec, set));
  REQUIRE(result.status == FeasibilityStatus::FeasibleWithMargin);
  Rng rng(8);
  auto report = soundness_sample(spec, result, 500, rng);
  CHECK(report.samples == 500 + 3 + 3 + 1);
  CHECK(report.violations == 0);
  CHECK(report.max_eigenvalue < 0.0);

  FeasibilityResult bad = result;
  bad.status = FeasibilityStatus::Infeasible;
  CHECK_THROWS_AS(soundness_sample(spec, bad, 10, rng), ConfigError);
}

TEST_CASE("sampling detects an unsound witness") {
  auto spec = make_example_spec(0.0, 0.0, 2);
  FeasibilityResult fake;
  fake.status = FeasibilityStatus::FeasibleWithMargin;
  fake.witness = {1, 0, 1, 0, 0, 0, 0, 0, 0};  // Q = I, F = 0: A_i + A_i^T is indefinite
  Rng rng(9);
  auto report = soundness_sample(spec, fake, 50, rng);
  CHECK(report.violations > 0);
  CHECK(report.max_eigenvalue > 0.0);
}

TEST_CASE("region containment") {
  auto first = grid_map("p", {F, I, U, F});
  auto second = grid_map("q", {F, F, F, I});
  auto s = region_containment(first, second);
  CHECK(s.first == "p");
  CHECK(s.second == "q");
  CHECK(s.first_not_second == std::vector<GridPoint>{{1.0, 1.0}});
  CHECK(s.second_not_first == std::vector<GridPoint>{{0.0, 1.0}});
  CHECK(s.inconclusive == std::vector<GridPoint>{{1.0, 0.0}});
  CHECK(first.at(1, 0) == U);

  auto other = first;
  other.b_values = {0.0, 2.0};
  CHECK_THROWS_AS(region_containment(first, other), ConfigError);
}
