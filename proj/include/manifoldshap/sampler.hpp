#pragma once

#include <memory>
#include <span>

#include "manifoldshap/core.hpp"
#include "manifoldshap/rng.hpp"

namespace manifoldshap {

/// Draws X with the coordinates in S held at x_S. Which law the remaining
/// coordinates follow is up to the implementation: interventional
/// (truncated factorization), marginal, or conditional.
class CoalitionSampler {
 public:
  virtual ~CoalitionSampler() = default;
  virtual std::size_t dim() const = 0;
  /// Writes one draw into `out` (length dim()); out[S] == x[S].
  virtual void Sample(const Coalition& coalition, std::span<const double> x,
                      RngStream& rng, std::span<double> out) const = 0;
};

/// Marginal resampling of dataset rows: X_Sbar ~ p(X_Sbar), the
/// interventional law when model inputs are distinct children of the true
/// features.
class RowMarginalSampler final : public CoalitionSampler {
 public:
  explicit RowMarginalSampler(std::shared_ptr<const Dataset> data);
  std::size_t dim() const override { return data_->cols(); }
  void Sample(const Coalition& coalition, std::span<const double> x, RngStream& rng,
              std::span<double> out) const override;

 private:
  std::shared_ptr<const Dataset> data_;
};

}  // namespace manifoldshap
