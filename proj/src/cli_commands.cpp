#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plmi/cli.hpp"
#include "plmi/errors.hpp"
#include "plmi/spec_io.hpp"

namespace plmi {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
};

SweepConfig effective_config(const GlobalOptions& g) {
  SweepConfig c = g.config.empty() ? SweepConfig::defaults() : load_sweep_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.jobs) c.jobs = *g.jobs;
  if (g.out_dir) c.out_dir = *g.out_dir;
  return c;
}

fs::path output_path(const SweepConfig& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  return f;
}

// -------------------------------------------------------------- identities

struct IdentityArgs {
  int q_max = 5;
  int r_max = 4;
  int trials = 100;
  int mu_bias = 0;
};

int cmd_identities(const GlobalOptions& g, const IdentityArgs& args) {
  const SweepConfig c = effective_config(g);
  if (args.q_max < 3 || args.q_max > 6) throw ConfigError("--q-max must lie in 3..6");
  if (args.r_max < 2 || args.r_max > 5) throw ConfigError("--r-max must lie in 2..5");
  if (args.trials < 0) throw ConfigError("--trials must be nonnegative");
  IdentityOptions o;
  o.folds.clear();
  o.rules.clear();
  for (int q = 3; q <= args.q_max; ++q) o.folds.push_back(q);
  for (int r = 2; r <= args.r_max; ++r) o.rules.push_back(r);
  o.trials = args.trials;
  o.seed = c.seed;
  o.mu_factorial_bias = args.mu_bias;
  const IdentityReport report = run_identity_suite(o);

  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["seed"] = c.seed;
  doc["trials"] = args.trials;
  doc["tolerance"] = o.tolerance;
  doc["integer_identities"] = report.integer_identities;
  if (!report.integer_identities) doc["integer_failure"] = report.integer_failure;
  json cases = json::array();
  std::cout << "integer identities: " << (report.integer_identities ? "ok" : "FAILED " + report.integer_failure)
            << "\n";
  for (const IdentityCase& ic : report.cases) {
    json jc = {{"q", ic.q},
               {"r", ic.r},
               {"trials", ic.trials},
               {"max_residual", ic.max_residual},
               {"exact_zero", ic.exact_zero},
               {"passed", ic.passed}};
    if (!ic.passed) jc["replay"] = json::parse(ic.failure);
    cases.push_back(jc);
    std::cout << "q=" << ic.q << " r=" << ic.r << " max_residual=" << format_double(ic.max_residual)
              << " exact=" << (ic.exact_zero ? "zero" : "NONZERO") << (ic.passed ? "" : "  FAILED") << "\n";
  }
  doc["cases"] = cases;
  doc["passed"] = report.passed();
  const fs::path path = output_path(c, "identities.json");
  open_output(path) << doc.dump(2) << "\n";
  std::cout << "report: " << path.string() << "\n";
  return report.passed() ? kExitOk : kExitCheckFailed;
}

// ------------------------------------------------------ generate and solve

struct ProblemArgs {
  std::string spec_path;
  std::string a = "0";
  std::string b = "0";
  std::string method = "amgm";
  int q = 0;
  std::string export_sdpa;
  bool list = false;
};

PlmiSpec load_problem_spec(const ProblemArgs& args) {
  if (!args.spec_path.empty()) {
    PlmiSpec spec = load_spec(args.spec_path);
    return args.q > 0 && args.q != spec.q() ? spec.with_fold(args.q) : spec;
  }
  Rational a;
  Rational b;
  try {
    a = parse_rational(args.a);
    b = parse_rational(args.b);
  } catch (const Error& e) {
    throw ConfigError(std::string("--a/--b: ") + e.what());
  }
  const Method m = parse_method(args.method);
  const int default_q = m == Method::Tuan || m == Method::KimLee2 ? 2 : (m == Method::AmGm4 ? 4 : 3);
  return make_example_spec(a, b, args.q > 0 ? args.q : default_q);
}

FeasibilityProblem build_problem(const PlmiSpec& spec, const LmiSet& set, const SolverOptions& solver) {
  if (spec.lyapunov_variable()) return stabilization_problem(spec, set, solver);
  return FeasibilityProblem(set, {}, solver.ball_radius);
}

int cmd_generate(const GlobalOptions& g, const ProblemArgs& args, bool solve) {
  const SweepConfig c = effective_config(g);
  const PlmiSpec spec = load_problem_spec(args);
  const Method method = parse_method(args.method);
  check_cap(method, count_constraints(method, spec.q(), spec.r()), c.generator);
  const LmiSet emitted = generate(method, spec, c.generator);
  const LmiSet set = canonicalize(emitted);
  const FeasibilityProblem problem = build_problem(spec, set, c.solver);

  std::cout << "method: " << method_name(method) << "\n"
            << "q: " << spec.q() << "\n"
            << "r: " << spec.r() << "\n"
            << "dim: " << spec.dim() << "\n"
            << "variables: " << spec.registry()->size() << "\n"
            << "emitted: " << emitted.size() << "\n"
            << "distinct: " << set.size() << "\n"
            << "side_constraints: " << problem.extra.size() << "\n";
  if (args.list) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      const Provenance& p = set.provenance()[i];
      std::cout << "constraint " << i + 1 << ": " << p.label << " merged=" << p.merged << "\n";
    }
  }
  if (!args.export_sdpa.empty()) {
    export_sdpa(problem, args.export_sdpa);
    const SdpaProblem back = read_sdpa(args.export_sdpa);
    const bool same = back.entries == to_sdpa(problem).entries;
    std::cout << "sdpa: " << args.export_sdpa << (same ? " (round-trip ok)" : " (round-trip MISMATCH)") << "\n";
    if (!same) return kExitCheckFailed;
  }
  if (!solve) return kExitOk;

  const FeasibilityResult res = solve_feasibility(problem, c.solver);
  std::cout << "status: " << status_name(res.status) << "\n"
            << "margin: " << format_double(res.margin) << "\n"
            << "lower_bound: " << format_double(res.lower_bound) << "\n"
            << "threshold: " << format_double(res.threshold) << "\n"
            << "outer_iterations: " << res.outer_iterations << "\n"
            << "newton_iterations: " << res.newton_iterations << "\n";
  if (res.status == FeasibilityStatus::FeasibleWithMargin) {
    for (int v = 0; v < spec.registry()->size(); ++v) {
      std::cout << "witness " << spec.registry()->var(v).name << " = "
                << format_double(res.witness[static_cast<std::size_t>(v)]) << "\n";
    }
  }
  return kExitOk;
}

// ------------------------------------------------------- sweep and compare

struct SweepArgs {
  std::optional<int> grid_n;
  std::vector<std::string> methods;
  std::vector<std::string> pairs;
};

std::vector<ContainmentPair> parse_pairs(const std::vector<std::string>& texts) {
  std::vector<ContainmentPair> out;
  for (const std::string& t : texts) out.push_back(ContainmentPair::parse(t));
  return out;
}

void print_containment(const std::vector<ContainmentSummary>& summaries) {
  for (const ContainmentSummary& s : summaries) {
    std::cout << s.first << " <= " << s.second << ": violations=" << s.first_not_second.size()
              << " reverse=" << s.second_not_first.size() << " inconclusive=" << s.inconclusive.size() << "\n";
    for (const GridPoint& p : s.first_not_second) {
      std::cout << "  feasible under " << s.first << " only at a=" << format_double(p.a) << " b=" << format_double(p.b)
                << "\n";
    }
  }
}

int cmd_sweep(const GlobalOptions& g, const SweepArgs& args) {
  SweepConfig c = effective_config(g);
  std::map<std::string, std::string> overrides;
  if (args.grid_n) overrides["grid_n"] = std::to_string(*args.grid_n);
  if (!args.methods.empty()) {
    std::string joined;
    for (const std::string& m : args.methods) joined += (joined.empty() ? "" : ",") + m;
    overrides["methods"] = joined;
  }
  if (!args.pairs.empty()) {
    std::string joined;
    for (const std::string& p : args.pairs) joined += (joined.empty() ? "" : ",") + p;
    overrides["containment"] = joined;
  }
  c = apply_config(c, overrides);
  const SweepResult result = run_sweep(c);

  {
    std::ofstream csv = open_output(output_path(c, "sweep.csv"));
    write_sweep_csv(result, csv);
    std::ofstream plot = open_output(output_path(c, "plot_data.json"));
    write_plot_data(result.rows, plot);
  }
  const auto summaries = containment_summaries(result.rows, c.containment);
  {
    std::ofstream out = open_output(output_path(c, "containment.json"));
    write_containment(summaries, c.containment, out);
  }

  for (const RegionMap& map : region_maps(result.rows)) {
    int counts[3] = {0, 0, 0};
    for (FeasibilityStatus s : map.status) ++counts[static_cast<int>(s)];
    std::cout << map.label << ": feasible=" << counts[0] << " infeasible=" << counts[1]
              << " inconclusive=" << counts[2] << "\n";
  }
  int failures = 0;
  for (const SweepRow& r : result.rows) failures += r.flag.empty() ? 0 : 1;
  if (failures) std::cout << "numerical failures recorded as inconclusive: " << failures << "\n";
  print_containment(summaries);
  std::cout << "outputs: " << fs::path(c.out_dir).string() << "/{sweep.csv,plot_data.json,containment.json}\n";
  return kExitOk;
}

struct CompareArgs {
  std::string csv;
  std::vector<std::string> pairs;
};

int cmd_compare(const GlobalOptions& g, const CompareArgs& args) {
  const SweepConfig c = effective_config(g);
  const std::string csv = args.csv.empty() ? (fs::path(c.out_dir) / "sweep.csv").string() : args.csv;
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open sweep CSV '" + csv + "'");
  const std::vector<SweepRow> rows = read_sweep_csv(in);

  std::vector<ContainmentPair> pairs;
  if (!args.pairs.empty()) {
    pairs = parse_pairs(args.pairs);
  } else {
    std::set<std::string> present;
    for (const SweepRow& r : rows) present.insert(r.method.label());
    for (const ContainmentPair& p : c.containment) {
      if (present.count(p.inner.label()) && present.count(p.outer.label())) pairs.push_back(p);
    }
  }
  const auto summaries = containment_summaries(rows, pairs);
  {
    std::ofstream out = open_output(output_path(c, "containment.json"));
    write_containment(summaries, pairs, out);
  }
  print_containment(summaries);
  const bool clean = std::all_of(summaries.begin(), summaries.end(),
                                 [](const ContainmentSummary& s) { return s.first_not_second.empty(); });
  return clean ? kExitOk : kExitCheckFailed;
}

void add_problem_options(CLI::App* cmd, ProblemArgs& args) {
  cmd->add_option("--spec", args.spec_path, "JSON spec file (default: the benchmark system)");
  cmd->add_option("--a", args.a, "benchmark parameter a (rational)");
  cmd->add_option("--b", args.b, "benchmark parameter b (rational)");
  cmd->add_option("--method", args.method, "vertex, tuan, kimlee2, polya, amgm, amgm3 or amgm4");
  cmd->add_option("--q", args.q, "fold count (default: the spec's, or 2/3/4 by method for the benchmark)");
  cmd->add_option("--export-sdpa", args.export_sdpa, "write the epigraph problem in sparse SDPA format");
  cmd->add_flag("--list", args.list, "print every distinct constraint with its origin");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Finite LMI relaxations of nested fuzzy summations"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "key = value configuration file");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--jobs", g.jobs, "worker threads for sweeps");
  app.add_option("--out-dir", g.out_dir, "directory for reports");

  IdentityArgs id_args;
  CLI::App* identities = app.add_subcommand("identities", "check the summation identities numerically and exactly");
  identities->add_option("--q-max", id_args.q_max, "largest fold (3..6)");
  identities->add_option("--r-max", id_args.r_max, "largest rule count (2..5)");
  identities->add_option("--trials", id_args.trials, "random trials per (q, r)");
  identities->add_option("--mu-bias", id_args.mu_bias, "corrupt every mu(lambda)! by this amount (negative control)")
      ->group("");

  ProblemArgs gen_args;
  CLI::App* gen = app.add_subcommand("generate", "build an LMI set and report counts");
  add_problem_options(gen, gen_args);

  ProblemArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "build an LMI set and decide strict feasibility");
  add_problem_options(solve, solve_args);

  SweepArgs sweep_args;
  int grid_n = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "solve the benchmark over an (a, b) grid");
  sweep->add_option("--grid-n", grid_n, "points per axis");
  sweep->add_option("--methods", sweep_args.methods, "method:q list, e.g. polya:3,amgm:3")->delimiter(',');
  sweep->add_option("--pairs", sweep_args.pairs, "containment pairs inner<=outer")->delimiter(',');

  CompareArgs cmp_args;
  CLI::App* compare = app.add_subcommand("compare", "containment report from a sweep CSV");
  compare->add_option("--csv", cmp_args.csv, "sweep CSV (default: <out-dir>/sweep.csv)");
  compare->add_option("--pairs", cmp_args.pairs, "containment pairs inner<=outer")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*identities) return cmd_identities(g, id_args);
    if (*gen) return cmd_generate(g, gen_args, false);
    if (*solve) return cmd_generate(g, solve_args, true);
    if (*sweep) {
      if (grid_n != 0) sweep_args.grid_n = grid_n;
      return cmd_sweep(g, sweep_args);
    }
    if (*compare) return cmd_compare(g, cmp_args);
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace plmi
