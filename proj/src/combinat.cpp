#include "plmi/combinat.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "plmi/errors.hpp"

namespace plmi {

bool IndexTuple::valid_for(int r) const {
  return std::all_of(entries_.begin(), entries_.end(), [r](int v) { return v >= 1 && v <= r; });
}

IndexTuple IndexTuple::swap_values(int a, int b) const {
  std::vector<int> out = entries_;
  for (int& v : out) {
    if (v == a) {
      v = b;
    } else if (v == b) {
      v = a;
    }
  }
  return IndexTuple(std::move(out));
}

IndexTuple IndexTuple::sorted() const {
  std::vector<int> out = entries_;
  std::sort(out.begin(), out.end());
  return IndexTuple(std::move(out));
}

std::string IndexTuple::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) os << ',';
    os << entries_[i];
  }
  os << ')';
  return os.str();
}

Partition Partition::from_parts(std::vector<int> parts) {
  Partition p;
  const int q = static_cast<int>(parts.size());
  p.mu.assign(static_cast<std::size_t>(q), 0);
  int sum = 0;
  for (std::size_t l = 0; l < parts.size(); ++l) {
    const int v = parts[l];
    if (v < 0 || (l > 0 && v > parts[l - 1])) {
      throw ConfigError("partition parts must be nonnegative and nonincreasing");
    }
    sum += v;
    if (v > 0) {
      ++p.k;
      if (v <= q) ++p.mu[static_cast<std::size_t>(v - 1)];
    }
  }
  if (sum != q) throw ConfigError("partition parts must sum to the fold count");
  p.parts = std::move(parts);
  return p;
}

std::string Partition::to_string() const {
  return IndexTuple(parts).to_string();
}

std::map<int, std::vector<Partition>> enumerate_partitions(int q) {
  if (q < 1 || q > kMaxPartitionFold) {
    throw CapExceeded("partition enumeration requires 1 <= q <= " + std::to_string(kMaxPartitionFold) +
                      ", got q=" + std::to_string(q));
  }
  std::map<int, std::vector<Partition>> out;
  for (int k = 1; k <= q; ++k) out[k];
  std::vector<int> current;
  // Largest first part first gives lexicographically decreasing order.
  std::function<void(int, int)> rec = [&](int remaining, int max_part) {
    if (remaining == 0) {
      std::vector<int> parts = current;
      parts.resize(static_cast<std::size_t>(q), 0);
      Partition p = Partition::from_parts(std::move(parts));
      out[p.k].push_back(std::move(p));
      return;
    }
    for (int part = std::min(remaining, max_part); part >= 1; --part) {
      current.push_back(part);
      rec(remaining - part, part);
      current.pop_back();
    }
  };
  rec(q, q);
  return out;
}

std::uint64_t multiplicity_factorial(const Partition& lambda) {
  std::uint64_t out = 1;
  for (int m : lambda.mu) {
    for (int f = 2; f <= m; ++f) out *= static_cast<std::uint64_t>(f);
  }
  return out;
}

BigInt factorial(int n) {
  BigInt out = 1;
  for (int f = 2; f <= n; ++f) out *= f;
  return out;
}

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt out = 1;
  for (int i = 1; i <= k; ++i) {
    out *= n - k + i;
    out /= i;
  }
  return out;
}

BigInt multinomial(const std::vector<int>& parts) {
  int total = 0;
  BigInt den = 1;
  for (int p : parts) {
    total += p;
    den *= factorial(p);
  }
  return factorial(total) / den;
}

BigInt stirling2(int q, int k) {
  if (q < 0 || k < 0 || k > q || q > kMaxStirlingOrder) {
    throw CapExceeded("stirling2 requires 0 <= k <= q <= " + std::to_string(kMaxStirlingOrder));
  }
  std::vector<BigInt> row(static_cast<std::size_t>(q) + 1, 0);
  row[0] = 1;
  for (int n = 1; n <= q; ++n) {
    for (int j = n; j >= 1; --j) {
      row[static_cast<std::size_t>(j)] = j * row[static_cast<std::size_t>(j)] + row[static_cast<std::size_t>(j) - 1];
    }
    row[0] = 0;
  }
  return row[static_cast<std::size_t>(k)];
}

BigInt stirling2_by_partitions(int q, int k) {
  if (k < 0 || k > q) throw CapExceeded("stirling2_by_partitions requires 0 <= k <= q");
  if (q == 0) return k == 0 ? 1 : 0;
  if (k == 0) return 0;
  const auto lambdas = enumerate_partitions(q);
  BigInt total = 0;
  for (const Partition& p : lambdas.at(k)) {
    const BigInt term = multinomial(p.parts);
    const std::uint64_t mu = multiplicity_factorial(p);
    if (term % mu != 0) throw NumericalFailure("multinomial not divisible by mu(lambda)!");
    total += term / mu;
  }
  return total;
}

BigInt falling_factorial(int r, int k) {
  if (r < 0 || k < 0 || r > kMaxFallingBase) {
    throw CapExceeded("falling_factorial requires 0 <= r <= " + std::to_string(kMaxFallingBase));
  }
  if (k > r) return 0;
  BigInt out = 1;
  for (int j = 0; j < k; ++j) out *= r - j;
  return out;
}

bool power_identity_check(int q, int r) {
  if (q < 1 || q > kMaxPartitionFold || r < 1 || r > kMaxIdentityRules) {
    throw CapExceeded("power_identity_check requires q <= 8 and r <= 12");
  }
  BigInt lhs = 1;
  for (int i = 0; i < q; ++i) lhs *= r;
  BigInt rhs = 0;
  for (int k = 0; k <= q; ++k) rhs += stirling2(q, k) * falling_factorial(r, k);
  return lhs == rhs;
}

bool partition_cover_check(int q, int r) {
  if (r < 1 || r > kMaxIdentityRules) throw CapExceeded("partition_cover_check requires 1 <= r <= 12");
  const auto lambdas = enumerate_partitions(q);
  BigInt covered = 0;
  for (const auto& [k, list] : lambdas) {
    // Ordered distinct-index tails: r (r-1) ... (r-k+1).
    BigInt tails = 1;
    for (int j = 0; j < k; ++j) tails *= std::max(r - j, 0);
    for (const Partition& p : list) {
      const BigInt weighted = multinomial(p.parts) * tails;
      const std::uint64_t mu = multiplicity_factorial(p);
      if (weighted % mu != 0) return false;
      covered += weighted / mu;
    }
  }
  BigInt total = 1;
  for (int i = 0; i < q; ++i) total *= r;
  return covered == total;
}

MultisetPermutations distinct_permutations(const IndexTuple& tuple) {
  MultisetPermutations out{tuple, {}};
  std::vector<int> work = tuple.sorted().entries();
  do {
    out.tuples.emplace_back(work);
  } while (std::next_permutation(work.begin(), work.end()));
  return out;
}

std::vector<IndexTuple> enumerate_distinct_tails(int r, int k, int head) {
  std::vector<IndexTuple> out;
  if (k < 1 || k > r || head < 1 || head > r) return out;
  std::vector<int> current{head};
  std::vector<bool> used(static_cast<std::size_t>(r) + 1, false);
  used[static_cast<std::size_t>(head)] = true;
  std::function<void()> rec = [&]() {
    if (static_cast<int>(current.size()) == k) {
      out.emplace_back(current);
      return;
    }
    for (int v = 1; v <= r; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = true;
      current.push_back(v);
      rec();
      current.pop_back();
      used[static_cast<std::size_t>(v)] = false;
    }
  };
  rec();
  return out;
}

std::vector<IndexTuple> enumerate_multisets(int r, int q) {
  std::vector<IndexTuple> out;
  std::vector<int> current;
  std::function<void(int)> rec = [&](int lo) {
    if (static_cast<int>(current.size()) == q) {
      out.emplace_back(current);
      return;
    }
    for (int v = lo; v <= r; ++v) {
      current.push_back(v);
      rec(v);
      current.pop_back();
    }
  };
  rec(1);
  return out;
}

std::vector<IndexTuple> enumerate_all_tuples(int r, int q) {
  std::vector<IndexTuple> out;
  std::vector<int> current(static_cast<std::size_t>(q), 1);
  if (q == 0) return {IndexTuple{}};
  while (true) {
    out.emplace_back(current);
    int pos = q - 1;
    while (pos >= 0 && current[static_cast<std::size_t>(pos)] == r) {
      current[static_cast<std::size_t>(pos)] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++current[static_cast<std::size_t>(pos)];
  }
  return out;
}

IndexTuple expand_partition(const Partition& lambda, const IndexTuple& tail) {
  std::vector<int> out;
  out.reserve(lambda.parts.size());
  for (int j = 0; j < lambda.k; ++j) {
    for (int c = 0; c < lambda.parts[static_cast<std::size_t>(j)]; ++c) out.push_back(tail[j]);
  }
  return IndexTuple(std::move(out));
}

}  // namespace plmi
