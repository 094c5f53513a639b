#pragma once

// Strict feasibility of affine matrix-negativity constraints, decided by
// minimizing the worst maximum eigenvalue t over a norm ball:
//
//   minimize t  s.t.  F_c(x) - t I <= 0 for every c,  ||x|| <= R,
//
// with a path-following log-barrier method. The sign of the minimized margin
// t* classifies the problem; a band of width eps_margin * scale around zero is
// reported as Inconclusive.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plmi/matexpr.hpp"
#include "plmi/relax.hpp"

namespace plmi {

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values(k)
  int sweeps = 0;
};

/// Cyclic Jacobi decomposition of a symmetric matrix (dim <= 64).
/// Throws NumericalFailure if the sweep cap is reached.
SymEig sym_eig(const Eigen::MatrixXd& m);

double max_eigenvalue(const Eigen::MatrixXd& m);

struct SolverOptions {
  int max_outer = 60;
  double barrier_shrink = 0.2;  // barrier weight multiplier per outer iteration
  double newton_tol = 1e-10;    // half squared Newton decrement
  double margin_eps = 1e-6;     // relative to the problem scale
  double ball_radius = 1e3;
  int max_newton = 500;         // per centering step

  /// Overrides from plain key-value pairs: max_outer, barrier_shrink,
  /// newton_tol, margin_eps, ball_radius, max_newton. Unknown keys throw.
  static SolverOptions from_key_values(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_key_values() const;
};

struct FeasibilityProblem {
  RegistryPtr registry;
  std::vector<AffineSymMatrix> constraints;  // the LMI set, each "< 0"
  std::vector<AffineSymMatrix> extra;        // side constraints, also "< 0"
  double ball_radius = 1e3;

  FeasibilityProblem(const LmiSet& set, std::vector<AffineSymMatrix> side, double radius);

  std::size_t total_constraints() const { return constraints.size() + extra.size(); }
  const AffineSymMatrix& constraint(std::size_t i) const {
    return i < constraints.size() ? constraints[i] : extra[i - constraints.size()];
  }
  /// Largest Frobenius norm among all constant and coefficient matrices.
  double scale() const;
};

enum class FeasibilityStatus { FeasibleWithMargin, Infeasible, Inconclusive };

std::string_view status_name(FeasibilityStatus s);

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::Inconclusive;
  std::vector<double> witness;    // best point found; meaningful when feasible
  double margin = 0.0;            // max_c lambda_max(F_c(witness))
  double lower_bound = 0.0;       // certified lower bound on t*
  double scale = 1.0;
  double threshold = 0.0;         // eps_margin * scale
  int outer_iterations = 0;
  int newton_iterations = 0;
  double wall_ms = 0.0;
  std::vector<double> outer_margins;  // best margin after each outer iteration
};

/// Throws NumericalFailure when Newton stalls; never maps a stall to Infeasible.
FeasibilityResult solve_feasibility(const FeasibilityProblem& problem, const SolverOptions& options = {});

/// set plus I - Q < 0 for the spec's Lyapunov variable Q, inside the ball of
/// options.ball_radius. Throws ConfigError if the spec has no such variable.
FeasibilityProblem stabilization_problem(const PlmiSpec& spec, const LmiSet& set, const SolverOptions& options = {});

/// Largest lambda_max over every constraint of the problem at x.
double worst_eigenvalue(const FeasibilityProblem& problem, std::span<const double> x);

// ------------------------------------------------------------------- SDPA

/// In-memory sparse SDPA problem: minimize c^T y subject to
/// sum_k y_k F_k - F_0 >= 0 over a block-diagonal space.
struct SdpaProblem {
  struct Entry {
    int matrix = 0;  // 0 for F_0, k for y_k
    int block = 0;   // 1-based
    int i = 0;       // 1-based, i <= j
    int j = 0;
    double value = 0.0;
    auto operator<=>(const Entry&) const = default;
  };
  int num_vars = 0;
  std::vector<int> block_sizes;
  std::vector<double> objective;
  std::vector<Entry> entries;
};

/// The epigraph problem in SDPA form: variables are the registry scalars
/// followed by t; one block per constraint holding t I - F_c(x) >= 0, and a
/// final (n+1) x (n+1) block [[R, x^T], [x, R I]] >= 0 encoding ||x|| <= R.
SdpaProblem to_sdpa(const FeasibilityProblem& problem);

void write_sdpa(const SdpaProblem& sdpa, std::ostream& out);
void export_sdpa(const FeasibilityProblem& problem, const std::string& path);

/// Reads the sparse format written by write_sdpa (comments, braces and commas
/// tolerated). Throws ParseError with the line number on malformed input.
SdpaProblem parse_sdpa(std::istream& in);
SdpaProblem read_sdpa(const std::string& path);

}  // namespace plmi
