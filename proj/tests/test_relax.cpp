#include <algorithm>
#include <functional>
#include <set>

#include "doctest.h"
#include "plmi/errors.hpp"
#include "plmi/relax.hpp"
#include "test_support.hpp"

using namespace plmi;
using plmi::testing::constant_spec;
using plmi::testing::random_spec;

namespace {

// Number of nonincreasing sequences of k positive parts summing to q.
int partition_count(int q, int k, int max_part) {
  if (k == 0) return q == 0 ? 1 : 0;
  int n = 0;
  for (int v = std::min(q, max_part); v >= 1; --v) n += partition_count(q - v, k - 1, v);
  return n;
}

long long brute_bit_count(int q, int r) {
  long long m = 0;
  for (int k = 2; k <= q; ++k) {
    long long tails = 1;
    for (int j = 1; j < k; ++j) tails *= std::max(r - j, 0);
    m += partition_count(q, k, q) * tails;
  }
  return m;
}

bool same_set(const LmiSet& a, const LmiSet& b) {
  return canonicalize(a).constraints() == canonicalize(b).constraints();
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : {Method::Vertex, Method::Tuan, Method::KimLee2, Method::Polya, Method::AmGm, Method::AmGm3,
                   Method::AmGm4})
    CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("sos"), ConfigError);
}

TEST_CASE("emitted counts for the benchmark-sized cases") {
  auto s3 = random_spec(3, 3, 1, 1, 5);
  auto s4 = random_spec(4, 3, 1, 1, 6);
  CHECK(gen_amgm(s3).size() == 48);
  CHECK(gen_amgm(s4).size() == 192);
  CHECK(gen_polya(s3).size() == 10);
  CHECK(gen_polya(s4).size() == 15);
  CHECK(count_constraints(Method::AmGm, 3, 3) == 48);
  CHECK(count_constraints(Method::AmGm, 4, 3) == 192);
  CHECK(count_constraints(Method::Polya, 3, 3) == 10);
  CHECK(count_constraints(Method::Polya, 4, 3) == 15);
  for (int r = 2; r <= 6; ++r) {
    auto s2 = random_spec(2, r, 1, 1, static_cast<std::uint64_t>(r));
    const auto expected = static_cast<std::size_t>(r) << (r - 1);
    CHECK(gen_kimlee2(s2).size() == expected);
    CHECK(count_constraints(Method::KimLee2, 2, r) == BigInt(expected));
    CHECK(gen_tuan(s2).size() == static_cast<std::size_t>(r * r));
    CHECK(gen_vertex(s2).size() == static_cast<std::size_t>(r * r));
  }
}

TEST_CASE("delta bit counts match brute force") {
  for (int q = 2; q <= 6; ++q) {
    for (int r = 1; r <= 6; ++r) {
      CHECK(delta_bit_count(q, r) == brute_bit_count(q, r));
      for (int head = 1; head <= r; ++head) {
        auto layout = delta_layout(q, r, head);
        CHECK(static_cast<long long>(layout.size()) == brute_bit_count(q, r));
        for (const auto& bit : layout) {
          CHECK(bit.tail[0] == head);
          CHECK(bit.tail.size() == bit.k);
          CHECK(bit.lambda.k == bit.k);
        }
      }
    }
  }
  CHECK(delta_bit_count(3, 3) == 4);
  CHECK(delta_bit_count(4, 3) == 6);
}

TEST_CASE("general family specializes to the dedicated families") {
  for (int r = 2; r <= 3; ++r) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      CHECK(same_set(gen_amgm(random_spec(2, r, 2, 2, seed)), gen_kimlee2(random_spec(2, r, 2, 2, seed))));
      CHECK(same_set(gen_amgm(random_spec(3, r, 2, 2, seed)), gen_amgm3(random_spec(3, r, 2, 2, seed))));
      CHECK(same_set(gen_amgm(random_spec(4, r, 2, 2, seed)), gen_amgm4(random_spec(4, r, 2, 2, seed))));
    }
  }
}

TEST_CASE("per-head generation partitions the family") {
  auto spec = random_spec(3, 3, 2, 1, 9);
  auto all = canonicalize(gen_amgm(spec));
  std::size_t total = 0;
  for (int head = 1; head <= 3; ++head) {
    GeneratorOptions opt;
    opt.only_head = head;
    auto part = gen_amgm(spec, opt);
    total += part.size();
    for (const auto& p : part.provenance()) CHECK(p.head == head);
    CHECK(same_set(part, gen_amgm3(spec, opt)));
  }
  CHECK(total == gen_amgm(spec).size());
  GeneratorOptions bad;
  bad.only_head = 4;
  CHECK_THROWS_AS(gen_amgm(spec, bad), ConfigError);
}

TEST_CASE("streaming visitor yields the stored family") {
  auto spec = random_spec(3, 2, 1, 2, 4);
  LmiSet streamed(spec.registry(), spec.dim());
  for (int head = 1; head <= 2; ++head)
    for_each_amgm_constraint(spec, head, [&](const AffineSymMatrix& c, const Provenance& p) { streamed.add(c, p); });
  CHECK(streamed.constraints() == gen_amgm(spec).constraints());
}

TEST_CASE("canonicalize sorts, deduplicates and merges counts") {
  auto spec = make_example_spec(1.0, 2.0, 4);
  auto raw = gen_amgm(spec);
  auto canon = canonicalize(raw);
  CHECK(raw.size() == 192);
  CHECK(canon.size() < raw.size());
  int merged = 0;
  for (const auto& p : canon.provenance()) merged += p.merged;
  CHECK(merged == 192);
  for (std::size_t i = 0; i < canon.size(); ++i)
    for (std::size_t j = i + 1; j < canon.size(); ++j) CHECK_FALSE(canon.constraints()[i] == canon.constraints()[j]);
  CHECK(canonicalize(canon).constraints() == canon.constraints());
}

TEST_CASE("hand-checked constant instance") {
  // Phi_11 = -1, Phi_12 = 1, Phi_21 = -3, Phi_22 = -1: the sum is -(h1 + h2)^2 = -1.
  auto spec = constant_spec(2, 2, {-1, 1, -3, -1});
  auto value = [](const AffineSymMatrix& e) { return to_double(e.constant().at(0, 0)); };
  auto vertex = gen_vertex(spec);
  REQUIRE(vertex.size() == 4);
  CHECK(std::any_of(vertex.constraints().begin(), vertex.constraints().end(),
                    [&](const AffineSymMatrix& e) { return value(e) > 0; }));
  // Tuan with r = 2: 2 Phi_ii + Phi_ij + Phi_ji = -4 < 0 for both heads.
  auto tuan = gen_tuan(spec);
  for (const auto& c : tuan.constraints()) CHECK(value(c) < 0);
  // Kim-Lee: Phi_11 + delta (Phi_12 + Phi_21)/2 in {-1, -2}.
  std::multiset<double> kl;
  auto kimlee = gen_kimlee2(spec);
  for (const auto& c : kimlee.constraints()) kl.insert(value(c));
  CHECK(kl == std::multiset<double>{-2, -2, -1, -1});
  // Polya: multisets 11, 12, 22 give -1, -2, -1.
  std::multiset<double> polya;
  auto poly = gen_polya(spec);
  for (const auto& c : poly.constraints()) polya.insert(value(c));
  CHECK(polya == std::multiset<double>{-2, -1, -1});
}

TEST_CASE("fold requirements and caps") {
  auto s3 = random_spec(3, 2, 1, 1, 1);
  CHECK_THROWS_AS(gen_tuan(s3), WrongFold);
  CHECK_THROWS_AS(gen_kimlee2(s3), WrongFold);
  CHECK_THROWS_AS(gen_amgm4(s3), WrongFold);
  CHECK_THROWS_AS(gen_amgm3(random_spec(2, 2, 1, 1, 1)), WrongFold);
  GeneratorOptions tight;
  tight.max_constraints = 47;
  CHECK_THROWS_AS(gen_amgm(random_spec(3, 3, 1, 1, 1), tight), CapExceeded);
  CHECK_THROWS_AS(count_constraints(Method::AmGm, 8, 12), CapExceeded);
  CHECK_NOTHROW(check_cap(Method::AmGm, 48, GeneratorOptions{}));
}

TEST_CASE("permutation sums over repeated indices") {
  auto spec = random_spec(3, 2, 1, 0, 3);
  auto expected = expr_add(expr_add(spec.vertex({1, 1, 2}), spec.vertex({1, 2, 1})), spec.vertex({2, 1, 1}));
  CHECK(permutation_sum(spec, {2, 1, 1}) == expected);
  CHECK(permutation_sum(spec, {2, 2, 2}) == spec.vertex({2, 2, 2}));
}
