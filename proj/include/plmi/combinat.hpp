#pragma once

// Exact combinatorics behind the nested-summation decompositions: index
// tuples, the partition sets Lambda_k, multiplicities, Stirling numbers of the
// second kind, multiset permutations and distinct-index tails.
//
// Indices are 1-based throughout (values in 1..r). Every function is pure.

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace plmi {

using BigInt = boost::multiprecision::cpp_int;

inline constexpr int kMaxPartitionFold = 8;
inline constexpr int kMaxStirlingOrder = 20;
inline constexpr int kMaxFallingBase = 64;
inline constexpr int kMaxIdentityRules = 12;

/// Multi-index (i_1, ..., i_q) with entries in 1..r.
class IndexTuple {
 public:
  IndexTuple() = default;
  explicit IndexTuple(std::vector<int> entries) : entries_(std::move(entries)) {}
  IndexTuple(std::initializer_list<int> entries) : entries_(entries) {}

  int size() const { return static_cast<int>(entries_.size()); }
  int operator[](int pos) const { return entries_[static_cast<std::size_t>(pos)]; }
  const std::vector<int>& entries() const { return entries_; }

  /// True iff every entry lies in 1..r.
  bool valid_for(int r) const;

  /// Exchanges the values a and b wherever they occur.
  IndexTuple swap_values(int a, int b) const;

  /// Nondecreasing rearrangement (the multiset representative).
  IndexTuple sorted() const;

  std::string to_string() const;

  auto operator<=>(const IndexTuple&) const = default;

 private:
  std::vector<int> entries_;
};

/// A nonincreasing q-tuple of nonnegative parts summing to q.
struct Partition {
  std::vector<int> parts;  // size q
  int k = 0;               // number of nonzero parts
  std::vector<int> mu;     // mu[j-1] = #{l : parts[l] == j}, j in 1..q

  static Partition from_parts(std::vector<int> parts);

  int fold() const { return static_cast<int>(parts.size()); }
  std::string to_string() const;
  bool operator==(const Partition&) const = default;
};

/// Lambda_k for k = 1..q, each list in lexicographically decreasing order.
/// Throws CapExceeded unless 1 <= q <= kMaxPartitionFold.
std::map<int, std::vector<Partition>> enumerate_partitions(int q);

/// prod_j mu_j(lambda)!
std::uint64_t multiplicity_factorial(const Partition& lambda);

/// q! / prod_j lambda_j!
BigInt multinomial(const std::vector<int>& parts);

BigInt factorial(int n);

BigInt binomial(int n, int k);

/// s(q, k) by the recurrence s(q,k) = k s(q-1,k) + s(q-1,k-1).
/// Throws CapExceeded outside 0 <= k <= q <= kMaxStirlingOrder.
BigInt stirling2(int q, int k);

/// s(q, k) as sum over Lambda_k of multinomial(q; lambda) / mu(lambda)!.
BigInt stirling2_by_partitions(int q, int k);

/// r! / (r-k)!, with 1 for k = 0 and 0 for k > r.
BigInt falling_factorial(int r, int k);

/// Checks r^q == sum_k s(q,k) r!/(r-k)! with both sides computed independently.
bool power_identity_check(int q, int r);

/// Counts r * prod_{j<k}(r-j) * multinomial / mu! over every partition and
/// compares against r^q.
bool partition_cover_check(int q, int r);

struct MultisetPermutations {
  IndexTuple source;
  std::vector<IndexTuple> tuples;  // lexicographic, no duplicates
};

MultisetPermutations distinct_permutations(const IndexTuple& tuple);

/// Tuples (head, i_2, ..., i_k) with pairwise-distinct entries from 1..r, in
/// lexicographic order of the tail; list position + 1 is the tail label.
std::vector<IndexTuple> enumerate_distinct_tails(int r, int k, int head);

/// Nondecreasing tuples of length q over 1..r (one per multiset).
std::vector<IndexTuple> enumerate_multisets(int r, int q);

/// Every tuple of N_r^q in lexicographic order.
std::vector<IndexTuple> enumerate_all_tuples(int r, int q);

/// i^lambda: tail value t_j repeated lambda_j times, j = 1..k.
IndexTuple expand_partition(const Partition& lambda, const IndexTuple& tail);

}  // namespace plmi
