#pragma once

// Finite LMI families sufficient for the nested fuzzy summation to be
// negative definite. Every generator is pure given an immutable spec and
// builds its constraints with exact rational coefficients; each constraint is
// demanded "< 0".

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plmi/combinat.hpp"
#include "plmi/matexpr.hpp"

namespace plmi {

enum class Method { Vertex, Tuan, KimLee2, Polya, AmGm, AmGm3, AmGm4 };

std::string_view method_name(Method m);
/// Accepts "vertex", "tuan", "kimlee2", "polya", "amgm", "amgm3", "amgm4".
Method parse_method(std::string_view name);

struct Provenance {
  Method method = Method::Vertex;
  int head = 0;        // i_1 for the per-head families, 0 otherwise
  std::string label;   // tuple or delta bit string
  int merged = 1;      // emitted constraints folded into this one by canonicalize
};

/// A finite family of affine symmetric constraints over one registry.
class LmiSet {
 public:
  LmiSet(RegistryPtr registry, int dim);

  void add(AffineSymMatrix constraint, Provenance provenance);

  std::size_t size() const { return constraints_.size(); }
  int dim() const { return dim_; }
  const RegistryPtr& registry() const { return registry_; }
  const std::vector<AffineSymMatrix>& constraints() const { return constraints_; }
  const std::vector<Provenance>& provenance() const { return provenance_; }

 private:
  RegistryPtr registry_;
  int dim_;
  std::vector<AffineSymMatrix> constraints_;
  std::vector<Provenance> provenance_;
};

struct GeneratorOptions {
  /// Upper bound on constraints emitted by the delta-enumerating families.
  std::uint64_t max_constraints = std::uint64_t{1} << 20;
  /// AM-GM families only: emit just the constraints of this head (0 = all).
  int only_head = 0;
};

/// One gate bit of the AM-GM families, addressed by (k, lambda label, tail label).
struct DeltaBit {
  int k = 0;
  int lambda_label = 0;  // 1-based position of lambda within Lambda_k
  int tail_label = 0;    // 1-based position of the tail among distinct tails
  Partition lambda;
  IndexTuple tail;       // (i_1, i_2, ..., i_k), i_1 = head
};

/// Bits for one head, ordered by k, then lambda, then tail.
std::vector<DeltaBit> delta_layout(int q, int r, int head);

/// m(q, r) = sum_{k=2..q} |Lambda_k| prod_{j=1..k-1} (r - j).
BigInt delta_bit_count(int q, int r);

/// Sum of Phi over the distinct reorderings of `tuple`.
AffineSymMatrix permutation_sum(const PlmiSpec& spec, const IndexTuple& tuple);

/// Phi_i < 0 for every i in N_r^q.
LmiSet gen_vertex(const PlmiSpec& spec);
/// Requires q = 2 and r >= 2.
LmiSet gen_tuan(const PlmiSpec& spec);
/// Requires q = 2; r 2^(r-1) constraints.
LmiSet gen_kimlee2(const PlmiSpec& spec);
/// One constraint per multiset: the permutation sum of its representative.
LmiSet gen_polya(const PlmiSpec& spec);
/// General q-fold AM-GM family; r 2^m(q,r) constraints.
LmiSet gen_amgm(const PlmiSpec& spec, const GeneratorOptions& options = {});
/// Direct 3-fold statement of the AM-GM family (q = 3).
LmiSet gen_amgm3(const PlmiSpec& spec, const GeneratorOptions& options = {});
/// Direct 4-fold statement of the AM-GM family (q = 4).
LmiSet gen_amgm4(const PlmiSpec& spec, const GeneratorOptions& options = {});

LmiSet generate(Method method, const PlmiSpec& spec, const GeneratorOptions& options = {});

using ConstraintVisitor = std::function<void(const AffineSymMatrix&, const Provenance&)>;

/// Streams the general AM-GM constraints of one head without storing them.
void for_each_amgm_constraint(const PlmiSpec& spec, int head, const ConstraintVisitor& visit);

/// Sorted, duplicate-free copy; provenance of the first emitted duplicate survives.
LmiSet canonicalize(const LmiSet& set);

/// Emitted (pre-dedup) count without building the set.
BigInt count_constraints(Method method, int q, int r);

/// Throws CapExceeded when `count` exceeds the configured bound.
void check_cap(Method method, const BigInt& count, const GeneratorOptions& options);

}  // namespace plmi
