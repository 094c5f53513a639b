#include "plmi/spec_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "plmi/errors.hpp"

namespace plmi {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ParseError("spec field '" + field + "': " + msg);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) fail(path + key, "missing");
  return obj.at(key);
}

int positive_int(const json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1000000) {
    fail(field, "expected a positive integer");
  }
  return v.get<int>();
}

Rational rational_field(const json& v, const std::string& field) {
  try {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return make_rational(v.get<std::int64_t>());
  } catch (const Error& e) {
    fail(field, e.what());
  }
  fail(field, "expected a rational string such as \"3/4\"");
}

/// Accepts a flat row-major list of dim*dim entries or dim nested rows.
RatSym sym_field(const json& v, int dim, const std::string& field) {
  if (!v.is_array()) fail(field, "expected a matrix");
  RatMatrix m(dim, dim);
  if (v.size() == static_cast<std::size_t>(dim * dim) && (dim == 1 || !v.front().is_array())) {
    for (int e = 0; e < dim * dim; ++e) {
      m(e / dim, e % dim) = rational_field(v[static_cast<std::size_t>(e)], field + "[" + std::to_string(e) + "]");
    }
  } else if (v.size() == static_cast<std::size_t>(dim)) {
    for (int i = 0; i < dim; ++i) {
      const json& row = v[static_cast<std::size_t>(i)];
      const std::string rf = field + "[" + std::to_string(i) + "]";
      if (!row.is_array() || row.size() != static_cast<std::size_t>(dim)) fail(rf, "expected a row of " + std::to_string(dim));
      for (int j = 0; j < dim; ++j) m(i, j) = rational_field(row[static_cast<std::size_t>(j)], rf + "[" + std::to_string(j) + "]");
    }
  } else {
    fail(field, "expected " + std::to_string(dim) + "x" + std::to_string(dim) + " entries");
  }
  try {
    return RatSym::from_matrix(m);
  } catch (const DimensionError&) {
    fail(field, "matrix is not symmetric");
  }
}

json sym_json(const RatSym& m) {
  json rows = json::array();
  for (int i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.dim(); ++j) row.push_back(to_string(m.at(std::min(i, j), std::max(i, j))));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

PlmiSpec parse_spec(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("spec must be a JSON object");
  if (doc.contains("schema_version")) {
    const json& v = doc.at("schema_version");
    if (!v.is_number_integer() || v.get<int>() != kSpecSchemaVersion) {
      fail("schema_version", "unsupported version (expected " + std::to_string(kSpecSchemaVersion) + ")");
    }
  }
  const int q = positive_int(require(doc, "q", ""), "q");
  const int r = positive_int(require(doc, "r", ""), "r");
  const int dim = positive_int(require(doc, "dim", ""), "dim");
  const int base_q = doc.contains("base_q") ? positive_int(doc.at("base_q"), "base_q") : q;
  if (base_q > q) fail("base_q", "must not exceed q");
  if (dim > 64) fail("dim", "at most 64 supported");

  auto registry = std::make_shared<VarRegistry>();
  const json& vars = require(doc, "variables", "");
  if (!vars.is_array()) fail("variables", "expected a list");
  std::set<std::string> names;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const std::string path = "variables[" + std::to_string(k) + "].";
    const json& v = vars[k];
    const json& name_v = require(v, "name", path);
    const json& kind_v = require(v, "kind", path);
    if (!name_v.is_string() || name_v.get<std::string>().empty()) fail(path + "name", "expected a nonempty string");
    if (!kind_v.is_string()) fail(path + "kind", "expected \"scalar\", \"sym\" or \"mat\"");
    const std::string name = name_v.get<std::string>();
    const std::string kind = kind_v.get<std::string>();
    if (!names.insert(name).second) fail(path + "name", "duplicate variable '" + name + "'");
    if (kind == "scalar") {
      registry->add_scalar(name);
    } else if (kind == "sym") {
      const int rows = positive_int(require(v, "rows", path), path + "rows");
      if (v.contains("cols") && positive_int(v.at("cols"), path + "cols") != rows) fail(path + "cols", "sym variables are square");
      registry->add_symmetric(name, rows);
    } else if (kind == "mat") {
      registry->add_matrix(name, positive_int(require(v, "rows", path), path + "rows"),
                           positive_int(require(v, "cols", path), path + "cols"));
    } else {
      fail(path + "kind", "unknown kind '" + kind + "'");
    }
  }
  RegistryPtr reg = registry;

  std::size_t count = 1;
  for (int i = 0; i < base_q; ++i) {
    count *= static_cast<std::size_t>(r);
    if (count > (std::size_t{1} << 20)) fail("vertices", "r^base_q is too large");
  }
  std::vector<std::optional<AffineSymMatrix>> table(count);
  const json& vertices = require(doc, "vertices", "");
  if (!vertices.is_array()) fail("vertices", "expected a list");
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    const std::string path = "vertices[" + std::to_string(k) + "].";
    const json& v = vertices[k];
    const json& index = require(v, "index", path);
    if (!index.is_array() || index.size() != static_cast<std::size_t>(base_q)) {
      fail(path + "index", "expected " + std::to_string(base_q) + " indices");
    }
    std::size_t slot = 0;
    for (const json& e : index) {
      if (!e.is_number_integer() || e.get<int>() < 1 || e.get<int>() > r) fail(path + "index", "entries must lie in 1..r");
      slot = slot * static_cast<std::size_t>(r) + static_cast<std::size_t>(e.get<int>() - 1);
    }
    if (table[slot]) fail(path + "index", "duplicate vertex");
    AffineSymMatrix expr(reg, v.contains("constant") ? sym_field(v.at("constant"), dim, path + "constant") : RatSym(dim));
    if (v.contains("terms")) {
      const json& terms = v.at("terms");
      if (!terms.is_object()) fail(path + "terms", "expected an object keyed by variable entry");
      for (const auto& [key, coeff] : terms.items()) {
        const auto id = reg->find(key);
        if (!id) fail(path + "terms." + key, "unknown variable entry");
        expr.add_term(*id, sym_field(coeff, dim, path + "terms." + key));
      }
    }
    table[slot] = std::move(expr);
  }
  std::vector<AffineSymMatrix> list;
  list.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    if (!table[s]) fail("vertices", "missing vertex number " + std::to_string(s + 1) + " in lexicographic order");
    list.push_back(std::move(*table[s]));
  }
  PlmiSpec spec(q, r, reg, base_q, std::move(list));
  if (doc.contains("lyapunov")) {
    const json& l = doc.at("lyapunov");
    if (!l.is_string()) fail("lyapunov", "expected a variable name");
    const VarGroup* g = reg->group(l.get<std::string>());
    if (g == nullptr || g->kind != VarKind::SymmetricEntry) fail("lyapunov", "must name a sym variable");
    spec.set_lyapunov_variable(l.get<std::string>());
  }
  return spec;
}

PlmiSpec load_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open spec file '" + path + "'");
  return parse_spec(f);
}

void write_spec(const PlmiSpec& spec, std::ostream& out) {
  json doc;
  doc["schema_version"] = kSpecSchemaVersion;
  doc["q"] = spec.q();
  doc["r"] = spec.r();
  doc["dim"] = spec.dim();
  doc["base_q"] = spec.base_fold();
  if (spec.lyapunov_variable()) doc["lyapunov"] = *spec.lyapunov_variable();
  json vars = json::array();
  for (const VarGroup& g : spec.registry()->groups()) {
    const char* kind = g.kind == VarKind::Scalar ? "scalar" : (g.kind == VarKind::SymmetricEntry ? "sym" : "mat");
    vars.push_back({{"name", g.name}, {"kind", kind}, {"rows", g.rows}, {"cols", g.cols}});
  }
  doc["variables"] = vars;
  json vertices = json::array();
  for (const IndexTuple& base : enumerate_all_tuples(spec.r(), spec.base_fold())) {
    std::vector<int> full = base.entries();
    full.resize(static_cast<std::size_t>(spec.q()), 1);
    const AffineSymMatrix& e = spec.vertex(IndexTuple(full));
    json terms = json::object();
    for (const auto& [id, coeff] : e.terms()) terms[spec.registry()->var(id).name] = sym_json(coeff);
    vertices.push_back({{"index", base.entries()}, {"constant", sym_json(e.constant())}, {"terms", terms}});
  }
  doc["vertices"] = vertices;
  out << doc.dump(2) << "\n";
}

}  // namespace plmi
