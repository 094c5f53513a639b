#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "plmi/errors.hpp"
#include "plmi/sdp.hpp"

namespace plmi {

SdpaProblem to_sdpa(const FeasibilityProblem& problem) {
  SdpaProblem out;
  const int n = problem.registry ? problem.registry->size() : 0;
  out.num_vars = n + 1;
  out.objective.assign(static_cast<std::size_t>(n + 1), 0.0);
  out.objective.back() = 1.0;

  auto push = [&](int matrix, int block, int i, int j, double v) {
    if (v != 0.0) out.entries.push_back({matrix, block, std::min(i, j), std::max(i, j), v});
  };
  auto push_sym = [&](int matrix, int block, const RatSym& m, double sign) {
    for (int i = 0; i < m.dim(); ++i) {
      for (int j = i; j < m.dim(); ++j) push(matrix, block, i + 1, j + 1, sign * to_double(m.at(i, j)));
    }
  };

  // Block c: t I - C0 - sum x_v C_v >= 0, i.e. F_0 = C0, F_v = -C_v, F_t = I.
  for (std::size_t c = 0; c < problem.total_constraints(); ++c) {
    const AffineSymMatrix& e = problem.constraint(c);
    const int block = static_cast<int>(c) + 1;
    out.block_sizes.push_back(e.dim());
    push_sym(0, block, e.constant(), 1.0);
    for (const auto& [id, coeff] : e.terms()) push_sym(id + 1, block, coeff, -1.0);
    for (int i = 1; i <= e.dim(); ++i) push(n + 1, block, i, i, 1.0);
  }
  // Ball block [[R, x^T], [x, R I]] >= 0.
  const int ball = static_cast<int>(out.block_sizes.size()) + 1;
  out.block_sizes.push_back(n + 1);
  for (int i = 1; i <= n + 1; ++i) push(0, ball, i, i, -problem.ball_radius);
  for (int v = 0; v < n; ++v) push(v + 1, ball, 1, v + 2, 1.0);

  std::sort(out.entries.begin(), out.entries.end());
  return out;
}

void write_sdpa(const SdpaProblem& sdpa, std::ostream& out) {
  char buf[64];
  out << "* minimize c^T y subject to sum_k y_k F_k - F_0 >= 0 (positive semidefinite)\n"
      << "* the last variable is the margin t; blocks before the last hold t I - F_c(x) >= 0\n"
      << "* the last block [[R, x^T], [x, R I]] >= 0 bounds the variable norm by R\n"
      << "* all block sizes are positive (no diagonal blocks, so no negated sizes)\n";
  out << sdpa.num_vars << "\n" << sdpa.block_sizes.size() << "\n";
  for (std::size_t b = 0; b < sdpa.block_sizes.size(); ++b) out << (b ? " " : "") << sdpa.block_sizes[b];
  out << "\n";
  for (std::size_t k = 0; k < sdpa.objective.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", sdpa.objective[k]);
    out << (k ? " " : "") << buf;
  }
  out << "\n";
  for (const SdpaProblem::Entry& e : sdpa.entries) {
    std::snprintf(buf, sizeof buf, "%.17g", e.value);
    out << e.matrix << " " << e.block << " " << e.i << " " << e.j << " " << buf << "\n";
  }
}

void export_sdpa(const FeasibilityProblem& problem, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  write_sdpa(to_sdpa(problem), f);
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  /// Next non-comment line with separators replaced by blanks.
  bool next_line(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      if (line[first] == '*' || line[first] == '"') continue;
      for (char& ch : line) {
        if (ch == '{' || ch == '}' || ch == ',' || ch == '(' || ch == ')') ch = ' ';
      }
      return true;
    }
    return false;
  }

  /// Pulls numbers until `count` have been collected, spanning lines if needed.
  template <typename T>
  std::vector<T> numbers(std::size_t count, const char* what) {
    std::vector<T> out;
    std::string line;
    while (out.size() < count) {
      if (!next_line(line)) fail(std::string("unexpected end of file reading ") + what);
      std::istringstream ss(line);
      T v;
      while (out.size() < count && ss >> v) out.push_back(v);
      if (!ss.eof() && out.size() < count) fail(std::string("malformed ") + what);
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("SDPA line " + std::to_string(line_no_) + ": " + msg);
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace

SdpaProblem parse_sdpa(std::istream& in) {
  TokenReader reader(in);
  SdpaProblem out;
  out.num_vars = reader.numbers<int>(1, "variable count")[0];
  const int blocks = reader.numbers<int>(1, "block count")[0];
  if (out.num_vars < 1 || blocks < 1) reader.fail("counts must be positive");
  for (int b : reader.numbers<int>(static_cast<std::size_t>(blocks), "block sizes")) {
    if (b == 0) reader.fail("zero block size");
    out.block_sizes.push_back(b < 0 ? -b : b);
  }
  out.objective = reader.numbers<double>(static_cast<std::size_t>(out.num_vars), "objective");

  std::string line;
  while (reader.next_line(line)) {
    std::istringstream ss(line);
    SdpaProblem::Entry e;
    if (!(ss >> e.matrix >> e.block >> e.i >> e.j >> e.value)) reader.fail("malformed entry");
    std::string rest;
    if (ss >> rest) reader.fail("trailing data after entry");
    if (e.matrix < 0 || e.matrix > out.num_vars) reader.fail("matrix index out of range");
    if (e.block < 1 || e.block > blocks) reader.fail("block index out of range");
    const int size = out.block_sizes[static_cast<std::size_t>(e.block - 1)];
    if (e.i < 1 || e.j < 1 || e.i > size || e.j > size) reader.fail("entry position out of range");
    if (e.i > e.j) std::swap(e.i, e.j);
    out.entries.push_back(e);
  }
  std::sort(out.entries.begin(), out.entries.end());
  return out;
}

SdpaProblem read_sdpa(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  return parse_sdpa(f);
}

}  // namespace plmi
