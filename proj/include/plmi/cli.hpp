#pragma once

// Parameter sweeps over the benchmark system, their flat-file outputs and the
// command-line front end.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "plmi/oracle.hpp"
#include "plmi/rational.hpp"
#include "plmi/relax.hpp"
#include "plmi/sdp.hpp"

namespace plmi {

inline constexpr int kReportSchemaVersion = 1;

struct MethodFold {
  Method method = Method::Polya;
  int q = 3;

  /// "polya:3"
  std::string label() const;
  static MethodFold parse(const std::string& text);
  bool operator==(const MethodFold&) const = default;
};

/// Expected containment: the feasible region of `inner` lies inside `outer`.
struct ContainmentPair {
  MethodFold inner;
  MethodFold outer;

  /// "tuan:2<=kimlee2:2"
  std::string label() const;
  static ContainmentPair parse(const std::string& text);
};

struct SweepConfig {
  Rational a_min = make_rational(0);
  Rational a_max = make_rational(10);
  Rational b_min = make_rational(0);
  Rational b_max = make_rational(10);
  int grid_n = 11;
  std::vector<MethodFold> methods;
  std::vector<ContainmentPair> containment;
  SolverOptions solver;
  GeneratorOptions generator;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir = ".";

  /// Four-method comparison: tuan:2, kimlee2:2, polya:3, amgm:3, polya:4, amgm:4.
  static SweepConfig defaults();

  /// Throws ConfigError on an empty range, grid_n < 2, an unknown method, or a
  /// (method, q) pair whose constraint count exceeds the cap.
  void validate() const;

  std::vector<Rational> a_values() const;
  std::vector<Rational> b_values() const;

  /// Effective configuration as sorted key-value pairs.
  std::map<std::string, std::string> to_key_values() const;
};

/// Plain key = value lines; '#' starts a comment; "[solver]" prefixes the
/// following keys with "solver.". Values may be quoted or bracketed lists.
std::map<std::string, std::string> parse_key_values(std::istream& in);

/// Applies overrides to `base`; unknown keys throw ConfigError.
SweepConfig apply_config(SweepConfig base, const std::map<std::string, std::string>& kv);
SweepConfig load_sweep_config(const std::string& path, SweepConfig base = SweepConfig::defaults());

struct SweepRow {
  Rational a;
  Rational b;
  MethodFold method;
  FeasibilityStatus status = FeasibilityStatus::Inconclusive;
  double margin = 0.0;
  std::uint64_t constraints = 0;  // emitted, before the side constraint
  double solve_ms = 0.0;
  std::string flag;               // "numerical_failure" when the solver gave up
  std::vector<double> witness;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;  // method-major, then a, then b
};

/// One solve of the benchmark system at (a, b).
SweepRow solve_point(const Rational& a, const Rational& b, const MethodFold& method, const SolverOptions& solver,
                     const GeneratorOptions& generator);

/// Runs every (method, grid point) on a pool of config.jobs workers; row order
/// does not depend on completion order.
SweepResult run_sweep(const SweepConfig& config);

std::vector<RegionMap> region_maps(const std::vector<SweepRow>& rows);
std::vector<ContainmentSummary> containment_summaries(const std::vector<SweepRow>& rows,
                                                      const std::vector<ContainmentPair>& pairs);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
/// Rows back from a CSV written by write_sweep_csv (witnesses are not stored).
std::vector<SweepRow> read_sweep_csv(std::istream& in);

void write_plot_data(const std::vector<SweepRow>& rows, std::ostream& out);
void write_containment(const std::vector<ContainmentSummary>& summaries, const std::vector<ContainmentPair>& pairs,
                       std::ostream& out);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

enum ExitCode { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitNumerical = 3 };

int run_cli(int argc, char** argv);

}  // namespace plmi
