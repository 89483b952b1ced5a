#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "manifoldshap/core.hpp"
#include "manifoldshap/density.hpp"
#include "manifoldshap/manifold.hpp"
#include "manifoldshap/rng.hpp"
#include "manifoldshap/sampler.hpp"
#include "manifoldshap/scm.hpp"

namespace manifoldshap {

struct ValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// v(S) at a fixed point x. Evaluate is deterministic given the stream, so
/// handing every coalition a copy of one stream gives common random numbers.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual ValueEstimate Evaluate(const Coalition& coalition, std::span<const double> x,
                                 RngStream& rng) const = 0;
  /// Throws OffManifoldPoint when x is not admissible (ManifoldShap only).
  virtual void CheckPoint(std::span<const double>) const {}
};

/// Monte-Carlo mean of f(x_S, X_Sbar) with X drawn by `sampler`. With a
/// row-marginal sampler this is MS; with an SCM sampler it is IS.
class SampledValue final : public ValueFunction {
 public:
  SampledValue(Model f, std::shared_ptr<const CoalitionSampler> sampler, std::size_t m,
               std::string name);
  std::size_t dim() const override { return sampler_->dim(); }
  std::string name() const override { return name_; }
  ValueEstimate Evaluate(const Coalition& coalition, std::span<const double> x,
                         RngStream& rng) const override;

 private:
  Model f_;
  std::shared_ptr<const CoalitionSampler> sampler_;
  std::size_t m_;
  std::string name_;
};

enum class Interventional { kScm, kMarginal };

std::shared_ptr<ValueFunction> MakeMsValue(Model f, std::shared_ptr<const Dataset> data,
                                           std::size_t m);
std::shared_ptr<ValueFunction> MakeIsValue(Model f, std::shared_ptr<const Scm> scm, std::size_t m,
                                           Interventional semantics = Interventional::kScm);
std::shared_ptr<CoalitionSampler> MakeInterventionalSampler(std::shared_ptr<const Scm> scm,
                                                            Interventional semantics);

/// CES with the analytic Gaussian conditional X_Sbar | X_S = x_S.
class CesAnalyticValue final : public ValueFunction {
 public:
  CesAnalyticValue(Model f, GaussianDensity joint, std::size_t m);
  std::size_t dim() const override { return joint_.dim(); }
  std::string name() const override { return "ces-analytic"; }
  ValueEstimate Evaluate(const Coalition& coalition, std::span<const double> x,
                         RngStream& rng) const override;

 private:
  Model f_;
  GaussianDensity joint_;
  std::size_t m_;
};

/// Masked-input k-NN regressor for E[f(X) | X_S = x_S]. Training pairs are
/// (x with coordinates outside T set to kMaskCode, f(x)) for coalitions T
/// drawn with Shapley weights. A query on S uses the pairs whose unmasked
/// set contains S, measuring distance on the coordinates of S only.
class CesSurrogate {
 public:
  static constexpr double kMaskCode = -1e300;

  CesSurrogate(Dataset rows, std::vector<double> targets, std::vector<std::uint64_t> masks,
               std::size_t k_min);

  std::size_t dim() const { return rows_.cols(); }
  std::size_t num_pairs() const { return masks_.size(); }
  /// Prediction with the standard error of the neighbour mean.
  ValueEstimate Predict(const Coalition& coalition, std::span<const double> x) const;

 private:
  Dataset rows_;                      // masked inputs, one per pair
  std::vector<double> targets_;       // f at the unmasked row
  std::vector<std::uint64_t> masks_;  // unmasked set per pair
  std::vector<double> scale_;         // per-feature sd used in distances
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_mask_;
  std::size_t k_min_;
};

/// Draws n_coalition_draws (row, feature i, coalition S not containing i)
/// triples, S with probability w(|S|, d), and emits pairs for S and S+{i}.
/// n_coalition_draws = 0 selects 10 per row.
CesSurrogate FitCesSurrogate(const Model& f, const Dataset& data, std::size_t n_coalition_draws,
                             RngStream& rng, std::size_t k_min = 10);

class CesSurrogateValue final : public ValueFunction {
 public:
  explicit CesSurrogateValue(std::shared_ptr<const CesSurrogate> surrogate, Model f)
      : surrogate_(std::move(surrogate)), f_(std::move(f)) {}
  std::size_t dim() const override { return surrogate_->dim(); }
  std::string name() const override { return "ces-surrogate"; }
  ValueEstimate Evaluate(const Coalition& coalition, std::span<const double> x,
                         RngStream& rng) const override;

 private:
  std::shared_ptr<const CesSurrogate> surrogate_;
  Model f_;
};

/// f(x_S, x'_Sbar) p(x_S, x'_Sbar) for a fixed baseline x'.
class JbValue final : public ValueFunction {
 public:
  JbValue(Model f, std::shared_ptr<const Density> density, Instance baseline);
  std::size_t dim() const override { return baseline_.size(); }
  std::string name() const override { return "jb"; }
  ValueEstimate Evaluate(const Coalition& coalition, std::span<const double> x,
                         RngStream& rng) const override;

 private:
  Model f_;
  std::shared_ptr<const Density> density_;
  Instance baseline_;
};

/// Mean of f p over baselines drawn from the prior (marginal resampling).
class RjbValue final : public ValueFunction {
 public:
  RjbValue(Model f, std::shared_ptr<const Density> density,
           std::shared_ptr<const CoalitionSampler> prior, std::size_t m);
  std::size_t dim() const override { return prior_->dim(); }
  std::string name() const override { return "rjb"; }
  ValueEstimate Evaluate(const Coalition& coalition, std::span<const double> x,
                         RngStream& rng) const override;

 private:
  Model f_;
  std::shared_ptr<const Density> density_;
  std::shared_ptr<const CoalitionSampler> prior_;
  std::size_t m_;
};

enum class ManifoldEstimator { kRejection, kRatio };

/// E[f(X) | do(X_S = x_S), X in Z]. Rejection keeps drawing until m samples
/// land in Z or cap_factor * m draws were spent; the ratio estimator uses m
/// draws and divides mean f 1(Z) by mean 1(Z). f is only ever evaluated on
/// accepted samples.
class ManifoldValue final : public ValueFunction {
 public:
  ManifoldValue(Model f, std::shared_ptr<const Manifold> manifold,
                std::shared_ptr<const CoalitionSampler> sampler, std::size_t m,
                ManifoldEstimator estimator = ManifoldEstimator::kRejection,
                double cap_factor = 200.0);
  std::size_t dim() const override { return sampler_->dim(); }
  std::string name() const override { return "manifold"; }
  ValueEstimate Evaluate(const Coalition& coalition, std::span<const double> x,
                         RngStream& rng) const override;
  void CheckPoint(std::span<const double> x) const override;

 private:
  Model f_;
  std::shared_ptr<const Manifold> manifold_;
  std::shared_ptr<const CoalitionSampler> sampler_;
  std::size_t m_;
  ManifoldEstimator estimator_;
  double cap_factor_;
};

/// Names accepted by config: ms | is | ces-analytic | ces-surrogate | jb | rjb | manifold.
const std::vector<std::string>& MethodNames();
bool IsMethodName(const std::string& name);

}  // namespace manifoldshap
