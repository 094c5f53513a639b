#include "plmi/relax.hpp"

#include <algorithm>
#include <numeric>
#include <system_error>

#include "plmi/errors.hpp"

namespace plmi {
namespace {

void require_fold(const PlmiSpec& spec, int q, Method m) {
  if (spec.q() != q) {
    throw WrongFold(std::string(method_name(m)) + " requires q=" + std::to_string(q) + ", spec has q=" +
                    std::to_string(spec.q()));
  }
}

std::string bit_string(std::span<const std::uint8_t> bits) {
  std::string out;
  out.reserve(bits.size());
  for (std::uint8_t b : bits) out.push_back(b ? '1' : '0');
  return out;
}

/// Emits base + sum of the gated terms selected by every 0/1 pattern, in
/// binary order with the first term as the most significant bit.
void expand_gates(const AffineSymMatrix& base, const std::vector<AffineSymMatrix>& terms, Method method, int head,
                  const ConstraintVisitor& visit) {
  std::vector<std::uint8_t> bits(terms.size(), 0);
  std::function<void(std::size_t, const AffineSymMatrix&)> rec = [&](std::size_t depth, const AffineSymMatrix& acc) {
    if (depth == terms.size()) {
      visit(acc, Provenance{method, head, "i1=" + std::to_string(head) + " delta=" + bit_string(bits), 1});
      return;
    }
    bits[depth] = 0;
    rec(depth + 1, acc);
    bits[depth] = 1;
    rec(depth + 1, expr_add(acc, terms[depth]));
    bits[depth] = 0;
  };
  rec(0, base);
}

IndexTuple constant_tuple(int q, int value) {
  return IndexTuple(std::vector<int>(static_cast<std::size_t>(q), value));
}

/// Gated terms of the general family for one head, in delta_layout order.
std::vector<AffineSymMatrix> amgm_terms(const PlmiSpec& spec, int head) {
  const int q = spec.q();
  std::vector<AffineSymMatrix> terms;
  for (const DeltaBit& bit : delta_layout(q, spec.r(), head)) {
    const IndexTuple expanded = expand_partition(bit.lambda, bit.tail);
    AffineSymMatrix term(spec.registry(), spec.dim());
    for (int j = 0; j < bit.k; ++j) {
      const int weight = bit.lambda.parts[static_cast<std::size_t>(j)];
      // P(Phi_{i^lambda}) with the values of i_j and i_1 exchanged.
      AffineSymMatrix swapped = permutation_sum(spec, expanded.swap_values(bit.tail[j], bit.tail[0]));
      swapped *= make_rational(weight);
      term += swapped;
    }
    term *= make_rational(1, static_cast<std::int64_t>(multiplicity_factorial(bit.lambda)) * q);
    terms.push_back(std::move(term));
  }
  return terms;
}

bool head_selected(const GeneratorOptions& options, int head) {
  return options.only_head == 0 || options.only_head == head;
}

BigInt capped_count(Method m, int q, int r, const GeneratorOptions& options) {
  if (options.only_head < 0 || options.only_head > r) throw ConfigError("only_head must lie in 0..r");
  const BigInt total = count_constraints(m, q, r);
  return options.only_head == 0 ? total : total / r;
}

template <class F>
auto with_overflow_guard(F&& f) {
  try {
    return f();
  } catch (const std::system_error& e) {
    throw CapExceeded(std::string("exact rational arithmetic overflowed 64 bits: ") + e.what());
  }
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Vertex: return "vertex";
    case Method::Tuan: return "tuan";
    case Method::KimLee2: return "kimlee2";
    case Method::Polya: return "polya";
    case Method::AmGm: return "amgm";
    case Method::AmGm3: return "amgm3";
    case Method::AmGm4: return "amgm4";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Vertex, Method::Tuan, Method::KimLee2, Method::Polya, Method::AmGm, Method::AmGm3,
                   Method::AmGm4}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected vertex, tuan, kimlee2, polya, amgm, amgm3 or amgm4)");
}

LmiSet::LmiSet(RegistryPtr registry, int dim) : registry_(std::move(registry)), dim_(dim) {}

void LmiSet::add(AffineSymMatrix constraint, Provenance provenance) {
  if (constraint.registry() != registry_) throw RegistryError("constraint uses a foreign registry");
  if (constraint.dim() != dim_) throw DimensionError("constraint size differs from the set's size");
  constraints_.push_back(std::move(constraint));
  provenance_.push_back(std::move(provenance));
}

std::vector<DeltaBit> delta_layout(int q, int r, int head) {
  std::vector<DeltaBit> out;
  const auto lambdas = enumerate_partitions(q);
  for (int k = 2; k <= q; ++k) {
    const auto& list = lambdas.at(k);
    const auto tails = enumerate_distinct_tails(r, k, head);
    for (std::size_t l = 0; l < list.size(); ++l) {
      for (std::size_t t = 0; t < tails.size(); ++t) {
        out.push_back({k, static_cast<int>(l) + 1, static_cast<int>(t) + 1, list[l], tails[t]});
      }
    }
  }
  return out;
}

BigInt delta_bit_count(int q, int r) {
  const auto lambdas = enumerate_partitions(q);
  BigInt m = 0;
  for (int k = 2; k <= q; ++k) {
    BigInt tails = 1;
    for (int j = 1; j < k; ++j) tails *= std::max(r - j, 0);
    m += tails * static_cast<unsigned>(lambdas.at(k).size());
  }
  return m;
}

AffineSymMatrix permutation_sum(const PlmiSpec& spec, const IndexTuple& tuple) {
  AffineSymMatrix out(spec.registry(), spec.dim());
  for (const IndexTuple& p : distinct_permutations(tuple).tuples) out += spec.vertex(p);
  return out;
}

LmiSet gen_vertex(const PlmiSpec& spec) {
  return with_overflow_guard([&] {
    LmiSet out(spec.registry(), spec.dim());
    for (const IndexTuple& t : enumerate_all_tuples(spec.r(), spec.q())) {
      out.add(spec.vertex(t), {Method::Vertex, 0, "tuple=" + t.to_string(), 1});
    }
    return out;
  });
}

LmiSet gen_tuan(const PlmiSpec& spec) {
  require_fold(spec, 2, Method::Tuan);
  const int r = spec.r();
  if (r < 2) throw ConfigError("tuan requires r >= 2");
  return with_overflow_guard([&] {
    LmiSet out(spec.registry(), spec.dim());
    for (int i = 1; i <= r; ++i) {
      out.add(spec.vertex({i, i}), {Method::Tuan, i, "diag i1=" + std::to_string(i), 1});
    }
    const Rational weight = make_rational(2, r - 1);
    for (int i1 = 1; i1 <= r; ++i1) {
      for (int i2 = 1; i2 <= r; ++i2) {
        if (i1 == i2) continue;
        AffineSymMatrix c = expr_scale(spec.vertex({i1, i1}), weight);
        c += spec.vertex({i1, i2});
        c += spec.vertex({i2, i1});
        out.add(std::move(c), {Method::Tuan, i1, "pair=(" + std::to_string(i1) + "," + std::to_string(i2) + ")", 1});
      }
    }
    return out;
  });
}

LmiSet gen_kimlee2(const PlmiSpec& spec) {
  require_fold(spec, 2, Method::KimLee2);
  const int r = spec.r();
  if (r > 24) throw CapExceeded("kimlee2 with r=" + std::to_string(r) + " exceeds the enumeration cap");
  return with_overflow_guard([&] {
    LmiSet out(spec.registry(), spec.dim());
    for (int i1 = 1; i1 <= r; ++i1) {
      // slot(i2) = i2 for i2 < i1 and i2 - 1 for i2 > i1.
      std::vector<AffineSymMatrix> halves;
      for (int i2 = 1; i2 <= r; ++i2) {
        if (i2 == i1) continue;
        AffineSymMatrix pair = expr_add(spec.vertex({i1, i2}), spec.vertex({i2, i1}));
        pair *= make_rational(1, 2);
        halves.push_back(std::move(pair));
      }
      expand_gates(spec.vertex({i1, i1}), halves, Method::KimLee2, i1,
                   [&](const AffineSymMatrix& c, const Provenance& p) { out.add(c, p); });
    }
    return out;
  });
}

LmiSet gen_polya(const PlmiSpec& spec) {
  if (spec.q() < 2) throw WrongFold("polya requires q >= 2");
  return with_overflow_guard([&] {
    LmiSet out(spec.registry(), spec.dim());
    for (const IndexTuple& rep : enumerate_multisets(spec.r(), spec.q())) {
      out.add(permutation_sum(spec, rep), {Method::Polya, 0, "multiset=" + rep.to_string(), 1});
    }
    return out;
  });
}

void for_each_amgm_constraint(const PlmiSpec& spec, int head, const ConstraintVisitor& visit) {
  with_overflow_guard([&] {
    const std::vector<AffineSymMatrix> terms = amgm_terms(spec, head);
    expand_gates(spec.vertex(constant_tuple(spec.q(), head)), terms, Method::AmGm, head, visit);
    return 0;
  });
}

LmiSet gen_amgm(const PlmiSpec& spec, const GeneratorOptions& options) {
  if (spec.q() < 2) throw WrongFold("amgm requires q >= 2");
  check_cap(Method::AmGm, capped_count(Method::AmGm, spec.q(), spec.r(), options), options);
  LmiSet out(spec.registry(), spec.dim());
  for (int head = 1; head <= spec.r(); ++head) {
    if (!head_selected(options, head)) continue;
    for_each_amgm_constraint(spec, head, [&](const AffineSymMatrix& c, const Provenance& p) { out.add(c, p); });
  }
  return out;
}

LmiSet gen_amgm3(const PlmiSpec& spec, const GeneratorOptions& options) {
  require_fold(spec, 3, Method::AmGm3);
  check_cap(Method::AmGm3, capped_count(Method::AmGm3, 3, spec.r(), options), options);
  const int r = spec.r();
  auto P = [&](int a, int b, int c) { return permutation_sum(spec, IndexTuple{a, b, c}); };
  return with_overflow_guard([&] {
    LmiSet out(spec.registry(), spec.dim());
    for (int i1 = 1; i1 <= r; ++i1) {
      if (!head_selected(options, i1)) continue;
      std::vector<AffineSymMatrix> terms;
      // (1/3)(2 P(Phi_{i1 i1 i2}) + P(Phi_{i2 i2 i1}))
      for (int i2 = 1; i2 <= r; ++i2) {
        if (i2 == i1) continue;
        AffineSymMatrix t = expr_scale(P(i1, i1, i2), make_rational(2));
        t += P(i2, i2, i1);
        t *= make_rational(1, 3);
        terms.push_back(std::move(t));
      }
      // (1/3!) P(Phi_{i1 i2 i3})
      for (int i2 = 1; i2 <= r; ++i2) {
        for (int i3 = 1; i3 <= r; ++i3) {
          if (i2 == i1 || i3 == i1 || i3 == i2) continue;
          terms.push_back(expr_scale(P(i1, i2, i3), make_rational(1, 6)));
        }
      }
      expand_gates(spec.vertex({i1, i1, i1}), terms, Method::AmGm3, i1,
                   [&](const AffineSymMatrix& c, const Provenance& p) { out.add(c, p); });
    }
    return out;
  });
}

LmiSet gen_amgm4(const PlmiSpec& spec, const GeneratorOptions& options) {
  require_fold(spec, 4, Method::AmGm4);
  check_cap(Method::AmGm4, capped_count(Method::AmGm4, 4, spec.r(), options), options);
  const int r = spec.r();
  auto P = [&](int a, int b, int c, int d) { return permutation_sum(spec, IndexTuple{a, b, c, d}); };
  return with_overflow_guard([&] {
    LmiSet out(spec.registry(), spec.dim());
    for (int i1 = 1; i1 <= r; ++i1) {
      if (!head_selected(options, i1)) continue;
      std::vector<AffineSymMatrix> terms;
      // (1/4)(3 P(Phi_{i1 i1 i1 i2}) + P(Phi_{i2 i2 i2 i1}))
      for (int i2 = 1; i2 <= r; ++i2) {
        if (i2 == i1) continue;
        AffineSymMatrix t = expr_scale(P(i1, i1, i1, i2), make_rational(3));
        t += P(i2, i2, i2, i1);
        t *= make_rational(1, 4);
        terms.push_back(std::move(t));
      }
      // (1/2) P(Phi_{i1 i1 i2 i2})
      for (int i2 = 1; i2 <= r; ++i2) {
        if (i2 == i1) continue;
        terms.push_back(expr_scale(P(i1, i1, i2, i2), make_rational(1, 2)));
      }
      // (1/8)(2 P(Phi_{i1 i1 i2 i3}) + P(Phi_{i2 i2 i1 i3}) + P(Phi_{i3 i3 i2 i1}))
      for (int i2 = 1; i2 <= r; ++i2) {
        for (int i3 = 1; i3 <= r; ++i3) {
          if (i2 == i1 || i3 == i1 || i3 == i2) continue;
          AffineSymMatrix t = expr_scale(P(i1, i1, i2, i3), make_rational(2));
          t += P(i2, i2, i1, i3);
          t += P(i3, i3, i2, i1);
          t *= make_rational(1, 8);
          terms.push_back(std::move(t));
        }
      }
      // (1/4!) P(Phi_{i1 i2 i3 i4})
      for (int i2 = 1; i2 <= r; ++i2) {
        for (int i3 = 1; i3 <= r; ++i3) {
          for (int i4 = 1; i4 <= r; ++i4) {
            if (i2 == i1 || i3 == i1 || i3 == i2 || i4 == i1 || i4 == i2 || i4 == i3) continue;
            terms.push_back(expr_scale(P(i1, i2, i3, i4), make_rational(1, 24)));
          }
        }
      }
      expand_gates(spec.vertex({i1, i1, i1, i1}), terms, Method::AmGm4, i1,
                   [&](const AffineSymMatrix& c, const Provenance& p) { out.add(c, p); });
    }
    return out;
  });
}

LmiSet generate(Method method, const PlmiSpec& spec, const GeneratorOptions& options) {
  switch (method) {
    case Method::Vertex: return gen_vertex(spec);
    case Method::Tuan: return gen_tuan(spec);
    case Method::KimLee2: return gen_kimlee2(spec);
    case Method::Polya: return gen_polya(spec);
    case Method::AmGm: return gen_amgm(spec, options);
    case Method::AmGm3: return gen_amgm3(spec, options);
    case Method::AmGm4: return gen_amgm4(spec, options);
  }
  throw ConfigError("unknown method");
}

LmiSet canonicalize(const LmiSet& set) {
  const auto& cs = set.constraints();
  std::vector<std::size_t> hashes(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) hashes[i] = cs[i].hash();
  std::vector<std::size_t> order(cs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Hash first, full rational order to break ties; stable keeps the first emitted.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (hashes[a] != hashes[b]) return hashes[a] < hashes[b];
    return cs[a].compare(cs[b]) < 0;
  });
  LmiSet out(set.registry(), set.dim());
  for (std::size_t pos = 0; pos < order.size();) {
    const std::size_t first = order[pos];
    std::size_t next = pos + 1;
    int merged = set.provenance()[first].merged;
    while (next < order.size() && hashes[order[next]] == hashes[first] && cs[order[next]] == cs[first]) {
      merged += set.provenance()[order[next]].merged;
      ++next;
    }
    Provenance p = set.provenance()[first];
    p.merged = merged;
    out.add(cs[first], std::move(p));
    pos = next;
  }
  return out;
}

BigInt count_constraints(Method method, int q, int r) {
  switch (method) {
    case Method::Vertex: {
      BigInt n = 1;
      for (int i = 0; i < q; ++i) n *= r;
      return n;
    }
    case Method::Tuan: return BigInt(r) * r;
    case Method::KimLee2: return BigInt(r) << (r - 1);
    case Method::Polya: return binomial(r + q - 1, q);
    case Method::AmGm:
    case Method::AmGm3:
    case Method::AmGm4: {
      const BigInt m = delta_bit_count(q, r);
      if (m > 4096) throw CapExceeded("delta bit count " + m.str() + " is beyond any enumeration");
      return BigInt(r) << static_cast<unsigned>(m);
    }
  }
  return 0;
}

void check_cap(Method method, const BigInt& count, const GeneratorOptions& options) {
  if (count > options.max_constraints) {
    throw CapExceeded(std::string(method_name(method)) + " would emit " + count.str() +
                      " constraints, above the cap of " + std::to_string(options.max_constraints));
  }
}

}  // namespace plmi
