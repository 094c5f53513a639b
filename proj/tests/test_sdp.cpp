#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "plmi/errors.hpp"
#include "plmi/sdp.hpp"
#include "test_support.hpp"

using namespace plmi;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return (m + m.transpose()) / 2;
}

RatSym scalar(int v) {
  RatSym s(1);
  s.set(0, 0, make_rational(v));
  return s;
}

// One scalar variable x and the constraint a x + c < 0.
FeasibilityProblem line_problem(int a, int c, double radius) {
  auto reg = std::make_shared<VarRegistry>();
  reg->add_scalar("x");
  RegistryPtr r = reg;
  AffineSymMatrix e(r, scalar(c));
  e.add_term(0, scalar(a));
  LmiSet set(r, 1);
  set.add(e, {});
  return FeasibilityProblem(set, {}, radius);
}

FeasibilityProblem scaled(const FeasibilityProblem& p, int factor) {
  LmiSet set(p.registry, p.constraints.front().dim());
  for (const auto& c : p.constraints) set.add(expr_scale(c, make_rational(factor)), {});
  std::vector<AffineSymMatrix> side;
  for (const auto& c : p.extra) side.push_back(expr_scale(c, make_rational(factor)));
  return FeasibilityProblem(set, side, p.ball_radius);
}

}  // namespace

TEST_CASE("Jacobi eigenvalues on small known matrices") {
  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  auto e = sym_eig(m);
  CHECK(e.values(0) == doctest::Approx(1.0));
  CHECK(e.values(1) == doctest::Approx(3.0));
  Eigen::MatrixXd d = Eigen::Vector3d(5, -1, 2).asDiagonal();
  auto ed = sym_eig(d);
  CHECK(ed.values(0) == -1);
  CHECK(ed.values(2) == 5);
  CHECK(max_eigenvalue(d) == 5);
  Eigen::MatrixXd one(1, 1);
  one << -4;
  CHECK(sym_eig(one).values(0) == -4);
}

TEST_CASE("Jacobi agrees with a reference eigensolver") {
  std::mt19937_64 rng(3);
  for (int n : {2, 3, 5, 8, 20, 64}) {
    Eigen::MatrixXd m = random_symmetric(n, rng);
    auto e = sym_eig(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(m);
    CHECK((e.values - ref.eigenvalues()).norm() < 1e-10 * (1 + m.norm()));
    Eigen::MatrixXd rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((rebuilt - m).norm() < 1e-10 * (1 + m.norm()));
    CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-10);
    for (int k = 1; k < n; ++k) CHECK(e.values(k - 1) <= e.values(k));
  }
}

TEST_CASE("Jacobi rejects bad input") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  CHECK_THROWS_AS(sym_eig(m), DimensionError);
  CHECK_THROWS_AS(sym_eig(Eigen::MatrixXd::Zero(2, 3)), DimensionError);
  CHECK_THROWS_AS(sym_eig(Eigen::MatrixXd::Identity(65, 65)), DimensionError);
}

TEST_CASE("one-dimensional feasible problem reaches the ball boundary") {
  // x - 1 < 0 with |x| <= 10: t* = -11 at x = -10.
  auto p = line_problem(1, -1, 10.0);
  auto r = solve_feasibility(p);
  CHECK(r.status == FeasibilityStatus::FeasibleWithMargin);
  CHECK(r.margin == doctest::Approx(-11.0).epsilon(1e-6));
  CHECK(r.lower_bound <= r.margin + 1e-9);
  REQUIRE(r.witness.size() == 1);
  CHECK(r.witness[0] == doctest::Approx(-10.0).epsilon(1e-6));
  CHECK(worst_eigenvalue(p, r.witness) == doctest::Approx(r.margin));
}

TEST_CASE("constant positive constraint is infeasible with t* = 1") {
  RegistryPtr reg = std::make_shared<const VarRegistry>();
  LmiSet set(reg, 3);
  set.add(AffineSymMatrix(reg, RatSym::identity(3)), {});
  auto r = solve_feasibility(FeasibilityProblem(set, {}, 10.0));
  CHECK(r.status == FeasibilityStatus::Infeasible);
  CHECK(r.lower_bound == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.margin == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("conflicting constraints are infeasible") {
  // x < 0 and -x + 2 < 0 cannot both hold; best t is 1 at x = 1.
  auto reg = std::make_shared<VarRegistry>();
  reg->add_scalar("x");
  RegistryPtr r = reg;
  AffineSymMatrix a(r, 1), b(r, scalar(2));
  a.add_term(0, scalar(1));
  b.add_term(0, scalar(-1));
  LmiSet set(r, 1);
  set.add(a, {});
  set.add(b, {});
  auto res = solve_feasibility(FeasibilityProblem(set, {}, 100.0));
  CHECK(res.status == FeasibilityStatus::Infeasible);
  CHECK(res.lower_bound == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("best margin never increases across outer iterations") {
  auto spec = make_example_spec(2.0, 1.0, 2);
  auto set = canonicalize(gen_kimlee2(spec));
  auto r = solve_feasibility(stabilization_problem(spec, set));
  REQUIRE(r.outer_margins.size() >= 2);
  for (std::size_t k = 1; k < r.outer_margins.size(); ++k) CHECK(r.outer_margins[k] <= r.outer_margins[k - 1]);
  CHECK(r.outer_margins.back() == r.margin);
}

TEST_CASE("classification is invariant under data scaling") {
  for (auto [a, b] : {std::pair{0.0, 0.0}, std::pair{5.0, 5.0}}) {
    auto spec = make_example_spec(a, b, 2);
    auto p = stabilization_problem(spec, canonicalize(gen_tuan(spec)));
    auto r1 = solve_feasibility(p);
    auto r2 = solve_feasibility(scaled(p, 1000));
    CHECK(r1.status == r2.status);
    CHECK(r2.margin == doctest::Approx(1000 * r1.margin).epsilon(1e-5));
  }
}

TEST_CASE("repeated solves are bit-identical") {
  auto spec = make_example_spec(1.0, 3.0, 3);
  auto p = stabilization_problem(spec, canonicalize(gen_amgm3(spec)));
  auto r1 = solve_feasibility(p);
  auto r2 = solve_feasibility(p);
  CHECK(r1.status == r2.status);
  CHECK(r1.margin == r2.margin);
  CHECK(r1.witness == r2.witness);
  CHECK(r1.newton_iterations == r2.newton_iterations);
}

TEST_CASE("stabilization witness satisfies Q > I and scales") {
  auto spec = make_example_spec(0.0, 0.0, 2);
  auto set = canonicalize(gen_tuan(spec));
  auto p = stabilization_problem(spec, set);
  CHECK(p.extra.size() == 1);
  auto r = solve_feasibility(p);
  REQUIRE(r.status == FeasibilityStatus::FeasibleWithMargin);
  CHECK(r.margin == doctest::Approx(-0.3323).epsilon(1e-3));
  const auto& x = r.witness;
  Eigen::Matrix2d Q;
  Q << x[0], x[1], x[1], x[2];
  CHECK(sym_eig(Q).values(0) > 1.0);
  // the LMIs are homogeneous in (Q, F): a larger multiple keeps them negative
  std::vector<double> x2(x);
  for (auto& v : x2) v *= 2;
  for (const auto& c : set.constraints()) CHECK(max_eigenvalue(eval_expr(c, x2)) < 0);
}

TEST_CASE("stabilization needs a Lyapunov variable") {
  auto spec = plmi::testing::random_spec(2, 2, 2, 1, 1);
  CHECK_THROWS_AS(stabilization_problem(spec, gen_tuan(spec)), ConfigError);
}

TEST_CASE("Newton failure is reported, never classified") {
  auto spec = make_example_spec(0.0, 0.0, 2);
  auto p = stabilization_problem(spec, canonicalize(gen_tuan(spec)));
  SolverOptions o;
  o.max_newton = 1;
  CHECK_THROWS_AS(solve_feasibility(p, o), NumericalFailure);
}

TEST_CASE("solver options from key-value pairs") {
  auto o = SolverOptions::from_key_values({{"max_outer", "40"}, {"ball_radius", "50"}, {"margin_eps", "1e-7"}});
  CHECK(o.max_outer == 40);
  CHECK(o.ball_radius == 50.0);
  CHECK(o.margin_eps == 1e-7);
  auto back = SolverOptions::from_key_values(o.to_key_values());
  CHECK(back.to_key_values() == o.to_key_values());
  CHECK_THROWS_AS(SolverOptions::from_key_values({{"tolerance", "1"}}), ConfigError);
  CHECK_THROWS_AS(SolverOptions::from_key_values({{"max_outer", "many"}}), ConfigError);
  CHECK_THROWS_AS(SolverOptions::from_key_values({{"barrier_shrink", "1.5"}}), ConfigError);
  CHECK_THROWS_AS(SolverOptions::from_key_values({{"ball_radius", "-1"}}), ConfigError);
}

TEST_CASE("SDPA export layout") {
  auto p = line_problem(2, -3, 7.0);
  auto s = to_sdpa(p);
  CHECK(s.num_vars == 2);
  CHECK(s.block_sizes == std::vector<int>{1, 2});
  CHECK(s.objective == std::vector<double>{0.0, 1.0});
  // F_0 = C0 = -3, F_x = -2, F_t = 1 in block 1; ball block [[R, x], [x, R]].
  std::vector<SdpaProblem::Entry> expected = {
      {0, 1, 1, 1, -3.0}, {0, 2, 1, 1, -7.0}, {0, 2, 2, 2, -7.0}, {1, 1, 1, 1, -2.0}, {1, 2, 1, 2, 1.0},
      {2, 1, 1, 1, 1.0}};
  CHECK(s.entries == expected);

  std::ostringstream out;
  write_sdpa(s, out);
  CHECK(out.str().rfind("* ", 0) == 0);
  std::istringstream in(out.str());
  auto back = parse_sdpa(in);
  CHECK(back.num_vars == s.num_vars);
  CHECK(back.block_sizes == s.block_sizes);
  CHECK(back.objective == s.objective);
  CHECK(back.entries == s.entries);
}

TEST_CASE("SDPA round trip on the benchmark preserves every value") {
  auto spec = make_example_spec(parse_rational("3.3"), parse_rational("1/3"), 3);
  auto p = stabilization_problem(spec, canonicalize(gen_polya(spec)));
  auto s = to_sdpa(p);
  std::ostringstream out;
  write_sdpa(s, out);
  std::istringstream in(out.str());
  auto back = parse_sdpa(in);
  CHECK(back.entries == s.entries);
  CHECK(back.block_sizes.size() == p.total_constraints() + 1);
}

TEST_CASE("SDPA parser tolerates punctuation and reports bad lines") {
  std::istringstream ok("\"title\n2\n2\n{1, -2}\n0.0 1.0\n0 1 1 1 -3\n2 1 1 1 1\n2 2 1 1 1\n2 2 2 2 1\n");
  auto s = parse_sdpa(ok);
  CHECK(s.block_sizes == std::vector<int>{1, 2});
  CHECK(s.entries.size() == 4);

  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_sdpa(in);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("2\n1\n1\n0 1\n0 1 1 1 x\n").find("line 5") != std::string::npos);
  CHECK(error_of("2\n1\n1\n0 1\n0 2 1 1 1\n").find("block index") != std::string::npos);
  CHECK(error_of("2\n1\n1\n0 1\n3 1 1 1 1\n").find("matrix index") != std::string::npos);
  CHECK(error_of("2\n1\n1\n0 1\n0 1 2 1 1\n").find("position") != std::string::npos);
  CHECK(error_of("2\n1\n").find("end of file") != std::string::npos);
  CHECK(error_of("2\n1\n1\n0 1\n0 1 1 1 1 9\n").find("trailing") != std::string::npos);
}
