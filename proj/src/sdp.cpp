#include "plmi/sdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <limits>

#include "plmi/errors.hpp"

namespace plmi {
namespace {

// Constraint data divided by the problem scale; G_c(x, t) = t I - c0 - sum x_v C_v.
struct ScaledConstraint {
  int dim = 0;
  Eigen::MatrixXd c0;
  std::vector<int> vars;
  std::vector<Eigen::MatrixXd> coeffs;
};

class BarrierModel {
 public:
  BarrierModel(const FeasibilityProblem& problem, double scale)
      : n_(problem.registry ? problem.registry->size() : 0), radius_(problem.ball_radius) {
    for (std::size_t c = 0; c < problem.total_constraints(); ++c) {
      const AffineSymMatrix& e = problem.constraint(c);
      ScaledConstraint sc;
      sc.dim = e.dim();
      sc.c0 = e.constant().to_dense() / scale;
      for (const auto& [id, coeff] : e.terms()) {
        sc.vars.push_back(id);
        sc.coeffs.push_back(coeff.to_dense() / scale);
      }
      barrier_weight_ += sc.dim;
      constraints_.push_back(std::move(sc));
    }
    barrier_weight_ += 1;  // ball
  }

  int num_vars() const { return n_; }
  double barrier_weight() const { return barrier_weight_; }

  Eigen::MatrixXd slack(const ScaledConstraint& c, const Eigen::VectorXd& y) const {
    Eigen::MatrixXd g = y(n_) * Eigen::MatrixXd::Identity(c.dim, c.dim) - c.c0;
    for (std::size_t k = 0; k < c.vars.size(); ++k) g -= y(c.vars[k]) * c.coeffs[k];
    return g;
  }

  /// s t + barrier, or +inf outside the domain.
  double value(const Eigen::VectorXd& y, double s) const {
    const double r2 = radius_ * radius_ - y.head(n_).squaredNorm();
    if (!(r2 > 0.0)) return std::numeric_limits<double>::infinity();
    double f = s * y(n_) - std::log(r2);
    for (const ScaledConstraint& c : constraints_) {
      Eigen::LLT<Eigen::MatrixXd> llt(slack(c, y));
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const Eigen::MatrixXd& l = llt.matrixLLT();
      for (int i = 0; i < c.dim; ++i) {
        if (!(l(i, i) > 0.0)) return std::numeric_limits<double>::infinity();
        f -= 2.0 * std::log(l(i, i));
      }
    }
    return f;
  }

  void derivatives(const Eigen::VectorXd& y, double s, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const int m = n_ + 1;
    grad = Eigen::VectorXd::Zero(m);
    hess = Eigen::MatrixXd::Zero(m, m);
    grad(n_) = s;
    std::vector<Eigen::MatrixXd> prods;
    std::vector<int> ids;
    for (const ScaledConstraint& c : constraints_) {
      const Eigen::MatrixXd w = slack(c, y).llt().solve(Eigen::MatrixXd::Identity(c.dim, c.dim));
      // dG/dx_v = -C_v, dG/dt = I; M_k = G^{-1} dG/dy_k.
      prods.clear();
      ids.clear();
      for (std::size_t k = 0; k < c.vars.size(); ++k) {
        prods.push_back(-(w * c.coeffs[k]));
        ids.push_back(c.vars[k]);
      }
      prods.push_back(w);
      ids.push_back(n_);
      for (std::size_t a = 0; a < prods.size(); ++a) {
        grad(ids[a]) -= prods[a].trace();
        for (std::size_t b = a; b < prods.size(); ++b) {
          const double h = (prods[a].array() * prods[b].transpose().array()).sum();
          hess(ids[a], ids[b]) += h;
          if (a != b) hess(ids[b], ids[a]) += h;
        }
      }
    }
    const Eigen::VectorXd x = y.head(n_);
    const double r2 = radius_ * radius_ - x.squaredNorm();
    grad.head(n_) += 2.0 * x / r2;
    hess.topLeftCorner(n_, n_) += (2.0 / r2) * Eigen::MatrixXd::Identity(n_, n_) + (4.0 / (r2 * r2)) * x * x.transpose();
  }

 private:
  int n_;
  double radius_;
  double barrier_weight_ = 0.0;
  std::vector<ScaledConstraint> constraints_;
};

}  // namespace

// ------------------------------------------------------------------ sym_eig

SymEig sym_eig(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw DimensionError("sym_eig needs a square matrix");
  if (n > 64) throw DimensionError("sym_eig supports dim <= 64");
  const double norm = m.norm();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(norm, 1.0)) {
    throw DimensionError("sym_eig needs a symmetric matrix");
  }
  Eigen::MatrixXd a = 0.5 * (m + m.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off <= std::numeric_limits<double>::min() || std::sqrt(off) <= 1e-17 * std::max(norm, 1e-300)) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation zeroing a(p,q) (Rutishauser's stable form).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps) throw NumericalFailure("Jacobi eigensolver did not converge");

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });
  SymEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  out.sweeps = sweep;
  return out;
}

double max_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  return sym_eig(m).values(m.rows() - 1);
}

// ---------------------------------------------------------- SolverOptions

SolverOptions SolverOptions::from_key_values(const std::map<std::string, std::string>& kv) {
  SolverOptions o;
  for (const auto& [key, value] : kv) {
    try {
      if (key == "max_outer") {
        o.max_outer = std::stoi(value);
      } else if (key == "barrier_shrink") {
        o.barrier_shrink = std::stod(value);
      } else if (key == "newton_tol") {
        o.newton_tol = std::stod(value);
      } else if (key == "margin_eps") {
        o.margin_eps = std::stod(value);
      } else if (key == "ball_radius") {
        o.ball_radius = std::stod(value);
      } else if (key == "max_newton") {
        o.max_newton = std::stoi(value);
      } else {
        throw ConfigError("unknown solver option '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("solver option '" + key + "' has invalid value '" + value + "'");
    }
  }
  if (o.max_outer < 1 || o.max_newton < 1) throw ConfigError("iteration limits must be positive");
  if (!(o.barrier_shrink > 0.0 && o.barrier_shrink < 1.0)) throw ConfigError("barrier_shrink must lie in (0,1)");
  if (!(o.ball_radius > 0.0)) throw ConfigError("ball_radius must be positive");
  if (!(o.margin_eps > 0.0) || !(o.newton_tol > 0.0)) throw ConfigError("tolerances must be positive");
  return o;
}

std::map<std::string, std::string> SolverOptions::to_key_values() const {
  auto fmt = [](double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  };
  return {{"max_outer", std::to_string(max_outer)}, {"barrier_shrink", fmt(barrier_shrink)},
          {"newton_tol", fmt(newton_tol)},           {"margin_eps", fmt(margin_eps)},
          {"ball_radius", fmt(ball_radius)},         {"max_newton", std::to_string(max_newton)}};
}

// ------------------------------------------------------ FeasibilityProblem

FeasibilityProblem::FeasibilityProblem(const LmiSet& set, std::vector<AffineSymMatrix> side, double radius)
    : registry(set.registry()), constraints(set.constraints()), extra(std::move(side)), ball_radius(radius) {
  if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
  for (const AffineSymMatrix& e : extra) {
    if (e.registry() != registry) throw RegistryError("side constraint uses a foreign registry");
  }
}

double FeasibilityProblem::scale() const {
  double s = 0.0;
  for (std::size_t c = 0; c < total_constraints(); ++c) {
    const AffineSymMatrix& e = constraint(c);
    s = std::max(s, e.constant().to_dense().norm());
    for (const auto& term : e.terms()) s = std::max(s, term.second.to_dense().norm());
  }
  return s > 0.0 ? s : 1.0;
}

std::string_view status_name(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::FeasibleWithMargin: return "Feasible";
    case FeasibilityStatus::Infeasible: return "Infeasible";
    case FeasibilityStatus::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

double worst_eigenvalue(const FeasibilityProblem& problem, std::span<const double> x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < problem.total_constraints(); ++c) {
    worst = std::max(worst, max_eigenvalue(eval_expr(problem.constraint(c), x)));
  }
  return worst;
}

// ---------------------------------------------------------------- solver

FeasibilityResult solve_feasibility(const FeasibilityProblem& problem, const SolverOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const int n = problem.registry ? problem.registry->size() : 0;
  if (n > 200) throw CapExceeded("solver supports at most 200 variables");
  std::size_t rows = 0;
  for (std::size_t c = 0; c < problem.total_constraints(); ++c) rows += static_cast<std::size_t>(problem.constraint(c).dim());
  if (rows > 5000) throw CapExceeded("solver supports at most 5000 constraint rows");

  FeasibilityResult result;
  result.scale = problem.scale();
  result.threshold = options.margin_eps * result.scale;
  const BarrierModel model(problem, result.scale);

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n + 1);
  const std::vector<double> origin(static_cast<std::size_t>(n), 0.0);
  if (problem.total_constraints() == 0) {
    result.status = FeasibilityStatus::Inconclusive;
    result.witness = origin;
    result.margin = -std::numeric_limits<double>::infinity();
    return result;
  }
  // x = 0, t = worst eigenvalue + 1 is strictly interior.
  y(n) = (worst_eigenvalue(problem, origin) + 1.0) / result.scale;

  auto margin_at = [&](const Eigen::VectorXd& point) {
    std::vector<double> x(point.data(), point.data() + n);
    return std::pair{worst_eigenvalue(problem, x), x};
  };

  double best_margin = std::numeric_limits<double>::infinity();
  std::vector<double> best_x = origin;
  double s = 1.0;
  double lower_bound = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  constexpr double kGapTarget = 1e-9;  // scaled units; three decades under the margin threshold
  constexpr double kLooseDecrement = 1e-6;

  for (int outer = 0; outer < options.max_outer; ++outer) {
    bool centered = false;
    for (int it = 0; it < options.max_newton; ++it) {
      model.derivatives(y, s, grad, hess);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        throw NumericalFailure("Newton system could not be solved");
      }
      const double decrement2 = -grad.dot(step);
      ++result.newton_iterations;
      if (decrement2 / 2.0 <= options.newton_tol) {
        centered = true;
        break;
      }
      const double lambda = std::sqrt(std::max(decrement2, 0.0));
      if (step.norm() < 1e-14 * (1.0 + y.norm())) {
        // Cancellation in the gradient puts a floor under the decrement at
        // large barrier weights; a point that can no longer move and has a
        // small decrement is centered to working precision.
        if (decrement2 <= kLooseDecrement) {
          centered = true;
          break;
        }
        throw NumericalFailure("Newton step vanished with decrement " + std::to_string(decrement2) +
                               " at barrier weight " + std::to_string(s));
      }
      // Inside the quadratic region of a self-concordant barrier the full
      // step stays interior; function values there are too flat relative to
      // s t to drive a line search.
      if (lambda < 0.25) {
        const Eigen::VectorXd trial = y + step;
        if (std::isfinite(model.value(trial, s))) {
          y = trial;
          continue;
        }
      }
      const double f0 = model.value(y, s);
      double alpha = 1.0;
      bool accepted = false;
      while (alpha * step.norm() >= 1e-14 * (1.0 + y.norm())) {
        const Eigen::VectorXd trial = y + alpha * step;
        const double f1 = model.value(trial, s);
        if (std::isfinite(f1) && f1 <= f0 - 0.25 * alpha * decrement2) {
          y = trial;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // The 1/(1+lambda) step is interior and decreasing in exact arithmetic.
        const Eigen::VectorXd trial = y + step / (1.0 + lambda);
        if (!std::isfinite(model.value(trial, s))) {
          throw NumericalFailure("Newton line search stalled with decrement " + std::to_string(decrement2) +
                                 " at barrier weight " + std::to_string(s));
        }
        y = trial;
      }
    }
    if (!centered) throw NumericalFailure("Newton centering did not converge");

    result.outer_iterations = outer + 1;
    auto [margin, x] = margin_at(y);
    if (margin < best_margin) {
      best_margin = margin;
      best_x = std::move(x);
    }
    result.outer_margins.push_back(best_margin);
    const double gap = model.barrier_weight() / s;
    lower_bound = (y(n) - gap) * result.scale;
    if (gap <= kGapTarget) break;
    s /= options.barrier_shrink;
  }

  result.margin = best_margin;
  result.witness = std::move(best_x);
  result.lower_bound = lower_bound;
  if (best_margin <= -result.threshold) {
    result.status = FeasibilityStatus::FeasibleWithMargin;
  } else if (lower_bound >= result.threshold) {
    result.status = FeasibilityStatus::Infeasible;
  } else {
    result.status = FeasibilityStatus::Inconclusive;
  }
  result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

FeasibilityProblem stabilization_problem(const PlmiSpec& spec, const LmiSet& set, const SolverOptions& options) {
  if (!spec.lyapunov_variable()) throw ConfigError("spec has no designated Lyapunov variable");
  const VarGroup* q = spec.registry()->group(*spec.lyapunov_variable());
  if (q == nullptr) throw ConfigError("Lyapunov variable missing from registry");
  // I - Q, built from 2Q = Q + Q^T.
  AffineSymMatrix side = AffineMatrix::of_group(spec.registry(), *q).symmetrized_twice();
  side *= make_rational(-1, 2);
  side.add_constant(RatSym::identity(q->rows));
  return FeasibilityProblem(set, {side}, options.ball_radius);
}

}  // namespace plmi
