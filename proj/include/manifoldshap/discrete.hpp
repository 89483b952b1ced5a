#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "manifoldshap/core.hpp"
#include "manifoldshap/manifold.hpp"
#include "manifoldshap/values.hpp"

namespace manifoldshap {

/// Finite distribution over points of R^d.
struct Pmf {
  std::vector<Instance> outcomes;
  std::vector<double> probs;

  std::size_t dim() const { return outcomes.empty() ? 0 : outcomes.front().size(); }
  double Total() const;
  /// Throws unless probabilities are >= 0 and sum to 1 within tol.
  void Validate(double tol = 1e-9) const;
  double Expect(const Model& f) const;
  /// P(X in set).
  double Mass(const std::function<bool(std::span<const double>)>& in) const;
};

/// (1/2) sum |p - q|. Both must enumerate the same outcomes in the same order.
double TvDistanceDiscrete(const Pmf& p, const Pmf& q);

/// Discrete joint over features whose dependence comes from latent common
/// causes only, so do(X_S = x_S) leaves X_Sbar at its marginal law.
class DiscreteJoint {
 public:
  explicit DiscreteJoint(Pmf joint);

  std::size_t dim() const { return joint_.dim(); }
  const Pmf& joint() const { return joint_; }

  /// Law of X under do(X_S = x_S), on the same outcome list as joint().
  Pmf Interventional(const Coalition& coalition, std::span<const double> x) const;
  /// Law of X given X_S = x_S; zero-probability conditioning throws.
  Pmf Conditional(const Coalition& coalition, std::span<const double> x) const;

 private:
  Pmf joint_;
};

/// p renormalized on Z (mass outside set to 0). Zero mass on Z throws
/// AcceptanceFailure.
Pmf RestrictPmf(const Pmf& p, const Manifold& manifold, const std::string& label = "");

/// Latent Z ~ Bernoulli(1/2), X1 = Z, X2 = Z with probability p else 1 - Z.
/// Outcomes enumerated as (0,0), (0,1), (1,0), (1,1).
DiscreteJoint MakeConfoundedBinary(double p);

/// Exact value functions by enumeration over the outcome list.
class DiscreteValue final : public ValueFunction {
 public:
  enum class Kind { kInterventional, kConditional, kManifold };

  DiscreteValue(Model f, std::shared_ptr<const DiscreteJoint> joint, Kind kind,
                std::shared_ptr<const Manifold> manifold = nullptr);
  std::size_t dim() const override { return joint_->dim(); }
  std::string name() const override;
  ValueEstimate Evaluate(const Coalition& coalition, std::span<const double> x,
                         RngStream& rng) const override;
  void CheckPoint(std::span<const double> x) const override;

 private:
  Model f_;
  std::shared_ptr<const DiscreteJoint> joint_;
  Kind kind_;
  std::shared_ptr<const Manifold> manifold_;
};

}  // namespace manifoldshap
