#pragma once

#include <functional>
#include <span>
#include <vector>

#include "manifoldshap/core.hpp"
#include "manifoldshap/manifold.hpp"
#include "manifoldshap/rng.hpp"
#include "manifoldshap/sampler.hpp"
#include "manifoldshap/values.hpp"

namespace manifoldshap {

/// v(S) for every S of one (value function, x), indexed by bit mask.
class EvalCache {
 public:
  explicit EvalCache(std::size_t d);
  std::size_t dim() const { return d_; }
  bool Has(std::uint64_t mask) const { return filled_[mask]; }
  const ValueEstimate& Get(std::uint64_t mask) const { return values_[mask]; }
  void Put(std::uint64_t mask, ValueEstimate v);
  std::size_t size() const { return count_; }

 private:
  std::size_t d_;
  std::vector<ValueEstimate> values_;
  std::vector<bool> filled_;
  std::size_t count_ = 0;
};

struct ExactOptions {
  std::size_t max_dim = 20;
};

/// phi_i = sum_S w(|S|, d) (v(S + i) - v(S)), each v(S) evaluated once with
/// a fresh copy of `base` (common random numbers across coalitions).
Attribution ExactShapley(const ValueFunction& vf, std::span<const double> x,
                         const RngStream& base, const ExactOptions& options = {},
                         EvalCache* cache = nullptr);
/// Exact Shapley values of a set function given on all 2^d masks.
Attribution ExactShapleyFromTable(std::span<const double> v_by_mask, std::size_t d);

struct PermutationOptions {
  std::size_t permutations = 2000;
  /// Pair each permutation with its reverse (off by default).
  bool antithetic = false;
};

/// Average marginal contribution along M random orderings. Within one
/// permutation every prefix coalition uses a copy of the same stream.
Attribution PermutationShapley(const ValueFunction& vf, std::span<const double> x,
                               const RngStream& base, const PermutationOptions& options = {});

struct ManifoldPermutationOptions {
  std::size_t permutations = 2000;
  /// Draw cap per accepted sample before AcceptanceFailure.
  std::size_t max_attempts = 100000;
  /// Run the per-feature loops literally instead of sharing one accepted
  /// sample per prefix across features.
  bool literal = false;
};

/// Rejection-sampling permutation estimator of ManifoldShap: one accepted
/// interventional draw per prefix coalition, marginal contributions of f
/// between consecutive prefixes. value_empty estimates E[f(X) | X in Z].
Attribution ManifoldPermutationShapley(const Model& f, const Manifold& manifold,
                                       const CoalitionSampler& sampler,
                                       std::span<const double> x, const RngStream& base,
                                       const ManifoldPermutationOptions& options = {});

}  // namespace manifoldshap
