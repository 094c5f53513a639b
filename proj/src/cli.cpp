#include "plmi/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "plmi/errors.hpp"

namespace plmi {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) return s.substr(1, s.size() - 2);
  return s;
}

/// "[x, y]", "x, y" or a single value, with quotes stripped from each item.
std::vector<std::string> split_list(const std::string& value) {
  std::string body = trim(value);
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') throw ConfigError("unterminated list '" + value + "'");
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(trim(item));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int to_int(const std::string& key, const std::string& value) {
  int out = 0;
  const std::string v = unquote(trim(value));
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("'" + key + "' needs an integer, got '" + value + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const std::string v = unquote(trim(value));
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' needs a nonnegative integer, got '" + value + "'");
  }
  return out;
}

std::pair<Rational, Rational> to_range(const std::string& key, const std::string& value) {
  const auto items = split_list(value);
  if (items.size() != 2) throw ConfigError("'" + key + "' needs two bounds such as [0, 10]");
  try {
    return {parse_rational(items[0]), parse_rational(items[1])};
  } catch (const Error& e) {
    throw ConfigError("'" + key + "': " + e.what());
  }
}

std::string range_string(const Rational& lo, const Rational& hi) {
  return "[" + to_string(lo) + ", " + to_string(hi) + "]";
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& render) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + render(items[i]);
  return out;
}

std::vector<Rational> grid(const Rational& lo, const Rational& hi, int n) {
  std::vector<Rational> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * make_rational(i, n - 1));
  return out;
}

FeasibilityStatus parse_status(const std::string& s) {
  if (s == "Feasible") return FeasibilityStatus::FeasibleWithMargin;
  if (s == "Infeasible") return FeasibilityStatus::Infeasible;
  if (s == "Inconclusive") return FeasibilityStatus::Inconclusive;
  throw ParseError("unknown status '" + s + "'");
}

json points_json(const std::vector<GridPoint>& pts) {
  json out = json::array();
  for (const GridPoint& p : pts) out.push_back({p.a, p.b});
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// ------------------------------------------------------------- MethodFold

std::string MethodFold::label() const { return std::string(method_name(method)) + ":" + std::to_string(q); }

MethodFold MethodFold::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("method '" + text + "' needs a fold, e.g. polya:3");
  MethodFold out;
  out.method = parse_method(trim(text.substr(0, colon)));
  out.q = to_int("method fold", text.substr(colon + 1));
  return out;
}

std::string ContainmentPair::label() const { return inner.label() + "<=" + outer.label(); }

ContainmentPair ContainmentPair::parse(const std::string& text) {
  const auto sep = text.find("<=");
  if (sep == std::string::npos) throw ConfigError("containment pair '" + text + "' must read inner<=outer");
  return {MethodFold::parse(trim(text.substr(0, sep))), MethodFold::parse(trim(text.substr(sep + 2)))};
}

// ------------------------------------------------------------ SweepConfig

SweepConfig SweepConfig::defaults() {
  SweepConfig c;
  for (const char* m : {"tuan:2", "kimlee2:2", "polya:3", "amgm:3", "polya:4", "amgm:4"}) {
    c.methods.push_back(MethodFold::parse(m));
  }
  for (const char* p : {"tuan:2<=kimlee2:2", "polya:3<=amgm:3", "polya:4<=amgm:4"}) {
    c.containment.push_back(ContainmentPair::parse(p));
  }
  return c;
}

void SweepConfig::validate() const {
  if (grid_n < 2) throw ConfigError("grid_n must be at least 2");
  if (!(a_min < a_max) || !(b_min < b_max)) throw ConfigError("parameter ranges must be nonempty intervals");
  if (jobs < 1) throw ConfigError("jobs must be positive");
  if (methods.empty()) throw ConfigError("no methods configured");
  auto check = [&](const MethodFold& m) {
    if (m.q < 2 || m.q > kMaxPartitionFold) throw ConfigError(m.label() + ": fold must lie in 2..8");
    if ((m.method == Method::Tuan || m.method == Method::KimLee2) && m.q != 2) {
      throw ConfigError(m.label() + ": this method is defined for q=2 only");
    }
    if (m.method == Method::AmGm3 && m.q != 3) throw ConfigError(m.label() + ": amgm3 needs q=3");
    if (m.method == Method::AmGm4 && m.q != 4) throw ConfigError(m.label() + ": amgm4 needs q=4");
    try {
      check_cap(m.method, count_constraints(m.method, m.q, 3), generator);
    } catch (const CapExceeded& e) {
      throw ConfigError(m.label() + ": " + e.what());
    }
  };
  for (const MethodFold& m : methods) check(m);
  for (const ContainmentPair& p : containment) {
    for (const MethodFold& m : {p.inner, p.outer}) {
      if (std::find(methods.begin(), methods.end(), m) == methods.end()) {
        throw ConfigError("containment pair " + p.label() + " names " + m.label() + ", which is not swept");
      }
    }
  }
}

std::vector<Rational> SweepConfig::a_values() const { return grid(a_min, a_max, grid_n); }
std::vector<Rational> SweepConfig::b_values() const { return grid(b_min, b_max, grid_n); }

std::map<std::string, std::string> SweepConfig::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["a_range"] = range_string(a_min, a_max);
  kv["b_range"] = range_string(b_min, b_max);
  kv["grid_n"] = std::to_string(grid_n);
  kv["methods"] = join(methods, [](const MethodFold& m) { return m.label(); });
  kv["containment"] = join(containment, [](const ContainmentPair& p) { return p.label(); });
  kv["seed"] = std::to_string(seed);
  kv["max_constraints"] = std::to_string(generator.max_constraints);
  for (const auto& [k, v] : solver.to_key_values()) kv["solver." + k] = v;
  return kv;
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Drop comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string::npos) {
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (kv.count(key)) throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = unquote(trim(body.substr(eq + 1)));
  }
  return kv;
}

SweepConfig apply_config(SweepConfig c, const std::map<std::string, std::string>& kv) {
  std::map<std::string, std::string> solver_kv = c.solver.to_key_values();
  for (const auto& [key, value] : kv) {
    if (key == "a_range") {
      std::tie(c.a_min, c.a_max) = to_range(key, value);
    } else if (key == "b_range") {
      std::tie(c.b_min, c.b_max) = to_range(key, value);
    } else if (key == "grid_n") {
      c.grid_n = to_int(key, value);
    } else if (key == "methods") {
      c.methods.clear();
      for (const std::string& m : split_list(value)) c.methods.push_back(MethodFold::parse(m));
      // Pairs that no longer refer to swept methods are dropped unless restated.
      std::vector<ContainmentPair> kept;
      for (const ContainmentPair& p : c.containment) {
        auto swept = [&](const MethodFold& m) { return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end(); };
        if (swept(p.inner) && swept(p.outer)) kept.push_back(p);
      }
      if (!kv.count("containment")) c.containment = kept;
    } else if (key == "containment") {
      c.containment.clear();
      for (const std::string& p : split_list(value)) c.containment.push_back(ContainmentPair::parse(p));
    } else if (key == "seed") {
      c.seed = to_u64(key, value);
    } else if (key == "jobs") {
      c.jobs = to_int(key, value);
    } else if (key == "out_dir") {
      c.out_dir = value;
    } else if (key == "max_constraints") {
      c.generator.max_constraints = to_u64(key, value);
    } else if (key.rfind("solver.", 0) == 0) {
      solver_kv[key.substr(7)] = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  c.solver = SolverOptions::from_key_values(solver_kv);
  return c;
}

SweepConfig load_sweep_config(const std::string& path, SweepConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  return apply_config(std::move(base), parse_key_values(f));
}

// ------------------------------------------------------------------ sweep

SweepRow solve_point(const Rational& a, const Rational& b, const MethodFold& method, const SolverOptions& solver,
                     const GeneratorOptions& generator) {
  SweepRow row;
  row.a = a;
  row.b = b;
  row.method = method;
  const PlmiSpec spec = make_example_spec(a, b, method.q);
  const LmiSet emitted = generate(method.method, spec, generator);
  row.constraints = emitted.size();
  const FeasibilityProblem problem = stabilization_problem(spec, canonicalize(emitted), solver);
  try {
    const FeasibilityResult res = solve_feasibility(problem, solver);
    row.status = res.status;
    row.margin = res.margin;
    row.solve_ms = res.wall_ms;
    if (res.status == FeasibilityStatus::FeasibleWithMargin) row.witness = res.witness;
  } catch (const NumericalFailure&) {
    row.status = FeasibilityStatus::Inconclusive;
    row.margin = std::numeric_limits<double>::quiet_NaN();
    row.flag = "numerical_failure";
  }
  return row;
}

SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  SweepResult result;
  result.config = config;
  const auto as = config.a_values();
  const auto bs = config.b_values();
  const std::size_t per_method = as.size() * bs.size();
  const std::size_t total = config.methods.size() * per_method;
  result.rows.resize(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      const std::size_t m = task / per_method;
      const std::size_t cell = task % per_method;
      try {
        result.rows[task] = solve_point(as[cell / bs.size()], bs[cell % bs.size()], config.methods[m], config.solver,
                                        config.generator);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = total;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(total)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return result;
}

std::vector<RegionMap> region_maps(const std::vector<SweepRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SweepRow*>> by_label;
  for (const SweepRow& row : rows) {
    const std::string label = row.method.label();
    if (!by_label.count(label)) order.push_back(label);
    by_label[label].push_back(&row);
  }
  std::vector<RegionMap> out;
  for (const std::string& label : order) {
    const auto& list = by_label[label];
    std::set<Rational> as;
    std::set<Rational> bs;
    for (const SweepRow* r : list) {
      as.insert(r->a);
      bs.insert(r->b);
    }
    RegionMap map;
    map.label = label;
    for (const Rational& a : as) map.a_values.push_back(to_double(a));
    for (const Rational& b : bs) map.b_values.push_back(to_double(b));
    const std::vector<Rational> av(as.begin(), as.end());
    const std::vector<Rational> bv(bs.begin(), bs.end());
    std::vector<int> filled(av.size() * bv.size(), 0);
    map.status.assign(av.size() * bv.size(), FeasibilityStatus::Inconclusive);
    for (const SweepRow* r : list) {
      const auto ia = static_cast<std::size_t>(std::lower_bound(av.begin(), av.end(), r->a) - av.begin());
      const auto ib = static_cast<std::size_t>(std::lower_bound(bv.begin(), bv.end(), r->b) - bv.begin());
      map.status[ia * bv.size() + ib] = r->status;
      ++filled[ia * bv.size() + ib];
    }
    if (std::any_of(filled.begin(), filled.end(), [](int f) { return f != 1; })) {
      throw ConfigError("rows for " + label + " do not form a complete grid");
    }
    out.push_back(std::move(map));
  }
  return out;
}

std::vector<ContainmentSummary> containment_summaries(const std::vector<SweepRow>& rows,
                                                      const std::vector<ContainmentPair>& pairs) {
  const std::vector<RegionMap> maps = region_maps(rows);
  auto find = [&](const MethodFold& m) -> const RegionMap& {
    for (const RegionMap& map : maps) {
      if (map.label == m.label()) return map;
    }
    throw ConfigError("no rows for " + m.label());
  };
  std::vector<ContainmentSummary> out;
  for (const ContainmentPair& p : pairs) out.push_back(region_containment(find(p.inner), find(p.outer)));
  return out;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  for (const auto& [k, v] : result.config.to_key_values()) out << "# " << k << " = " << v << "\n";
  out << "a,b,method,q,status,margin,constraints,solve_ms,flag\n";
  char ms[32];
  for (const SweepRow& r : result.rows) {
    std::snprintf(ms, sizeof ms, "%.3f", r.solve_ms);
    out << format_double(to_double(r.a)) << "," << format_double(to_double(r.b)) << "," << method_name(r.method.method)
        << "," << r.method.q << "," << status_name(r.status) << "," << format_double(r.margin) << "," << r.constraints
        << "," << ms << "," << r.flag << "\n";
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::vector<SweepRow> rows;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (trim(line).rfind("a,b,method,q,status,margin,constraints,solve_ms", 0) != 0) {
        throw ParseError("CSV line " + std::to_string(line_no) + ": unexpected header");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    if (f.size() == 8) f.emplace_back();
    if (f.size() != 9) throw ParseError("CSV line " + std::to_string(line_no) + ": expected 9 fields");
    try {
      SweepRow r;
      r.a = parse_rational(f[0]);
      r.b = parse_rational(f[1]);
      r.method.method = parse_method(f[2]);
      r.method.q = std::stoi(f[3]);
      r.status = parse_status(f[4]);
      r.margin = std::stod(f[5]);
      r.constraints = std::stoull(f[6]);
      r.solve_ms = std::stod(f[7]);
      r.flag = f[8];
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError("CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw ParseError("CSV has no header row");
  return rows;
}

void write_plot_data(const std::vector<SweepRow>& rows, std::ostream& out) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  json methods = json::object();
  for (const RegionMap& map : region_maps(rows)) {
    json entry = {{"Feasible", json::array()}, {"Infeasible", json::array()}, {"Inconclusive", json::array()}};
    for (std::size_t ia = 0; ia < map.a_values.size(); ++ia) {
      for (std::size_t ib = 0; ib < map.b_values.size(); ++ib) {
        entry[std::string(status_name(map.at(ia, ib)))].push_back({map.a_values[ia], map.b_values[ib]});
      }
    }
    methods[map.label] = entry;
  }
  doc["methods"] = methods;
  out << doc.dump(2) << "\n";
}

void write_containment(const std::vector<ContainmentSummary>& summaries, const std::vector<ContainmentPair>& pairs,
                       std::ostream& out) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  json list = json::array();
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const ContainmentSummary& s = summaries[i];
    list.push_back({{"pair", i < pairs.size() ? pairs[i].label() : s.first + "<=" + s.second},
                    {"inner", s.first},
                    {"outer", s.second},
                    {"violations", s.first_not_second.size()},
                    {"inner_not_outer", points_json(s.first_not_second)},
                    {"outer_not_inner", points_json(s.second_not_first)},
                    {"inconclusive", points_json(s.inconclusive)}});
  }
  doc["pairs"] = list;
  out << doc.dump(2) << "\n";
}

}  // namespace plmi
