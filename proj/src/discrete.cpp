#include "manifoldshap/discrete.hpp"

#include <cmath>
#include <stdexcept>

namespace manifoldshap {

double Pmf::Total() const {
  double s = 0.0;
  for (double p : probs) s += p;
  return s;
}

void Pmf::Validate(double tol) const {
  if (outcomes.size() != probs.size() || outcomes.empty()) {
    throw std::invalid_argument("Pmf: need one probability per outcome");
  }
  for (const auto& o : outcomes) {
    if (o.size() != dim()) throw std::invalid_argument("Pmf: outcomes differ in dimension");
  }
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("Pmf: negative probability");
  }
  if (std::abs(Total() - 1.0) > tol) throw std::invalid_argument("Pmf: probabilities do not sum to 1");
}

double Pmf::Expect(const Model& f) const {
  double s = 0.0;
  for (std::size_t k = 0; k < outcomes.size(); ++k)
    if (probs[k] > 0.0) s += probs[k] * f(outcomes[k]);
  return s;
}

double Pmf::Mass(const std::function<bool(std::span<const double>)>& in) const {
  double s = 0.0;
  for (std::size_t k = 0; k < outcomes.size(); ++k)
    if (in(outcomes[k])) s += probs[k];
  return s;
}

double TvDistanceDiscrete(const Pmf& p, const Pmf& q) {
  p.Validate();
  q.Validate();
  if (p.outcomes != q.outcomes) {
    throw std::invalid_argument("TvDistanceDiscrete: outcome enumerations differ");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < p.probs.size(); ++k) s += std::abs(p.probs[k] - q.probs[k]);
  return 0.5 * s;
}

DiscreteJoint::DiscreteJoint(Pmf joint) : joint_(std::move(joint)) { joint_.Validate(); }

namespace {

bool Matches(const Instance& o, const std::vector<std::size_t>& idx, std::span<const double> x) {
  for (auto i : idx)
    if (o[i] != x[i]) return false;
  return true;
}

}  // namespace

Pmf DiscreteJoint::Interventional(const Coalition& coalition, std::span<const double> x) const {
  // P(y) = 1(y_S = x_S) P(X_Sbar = y_Sbar).
  const auto in = coalition.members();
  const auto out = coalition.complement().members();
  Pmf r{joint_.outcomes, std::vector<double>(joint_.probs.size(), 0.0)};
  for (std::size_t a = 0; a < r.outcomes.size(); ++a) {
    if (!Matches(r.outcomes[a], in, x)) continue;
    double marginal = 0.0;
    for (std::size_t b = 0; b < joint_.outcomes.size(); ++b)
      if (Matches(joint_.outcomes[b], out, r.outcomes[a])) marginal += joint_.probs[b];
    r.probs[a] = marginal;
  }
  if (std::abs(r.Total() - 1.0) > 1e-9) {
    throw std::invalid_argument("DiscreteJoint: intervention value outside the outcome grid");
  }
  return r;
}

Pmf DiscreteJoint::Conditional(const Coalition& coalition, std::span<const double> x) const {
  const auto in = coalition.members();
  Pmf r{joint_.outcomes, std::vector<double>(joint_.probs.size(), 0.0)};
  double z = 0.0;
  for (std::size_t a = 0; a < r.outcomes.size(); ++a) {
    if (Matches(r.outcomes[a], in, x)) {
      r.probs[a] = joint_.probs[a];
      z += joint_.probs[a];
    }
  }
  if (!(z > 0.0)) {
    throw std::domain_error("conditioning event X_S = x_S has probability zero (S = " +
                            coalition.ToBitString() + ")");
  }
  for (double& p : r.probs) p /= z;
  return r;
}

Pmf RestrictPmf(const Pmf& p, const Manifold& manifold, const std::string& label) {
  Pmf r{p.outcomes, std::vector<double>(p.probs.size(), 0.0)};
  double z = 0.0;
  for (std::size_t a = 0; a < p.outcomes.size(); ++a) {
    if (p.probs[a] > 0.0 && manifold.Contains(p.outcomes[a])) {
      r.probs[a] = p.probs[a];
      z += p.probs[a];
    }
  }
  if (!(z > 0.0)) throw AcceptanceFailure(label.empty() ? "(enumerated)" : label, 0);
  for (double& q : r.probs) q /= z;
  return r;
}

DiscreteJoint MakeConfoundedBinary(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("MakeConfoundedBinary: p outside [0, 1]");
  Pmf joint;
  joint.outcomes = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  joint.probs.assign(4, 0.0);
  for (int z = 0; z <= 1; ++z) {
    for (int keep = 0; keep <= 1; ++keep) {
      const double pr = 0.5 * (keep ? p : 1.0 - p);
      const int x1 = z;
      const int x2 = keep ? z : 1 - z;
      joint.probs[static_cast<std::size_t>(2 * x1 + x2)] += pr;
    }
  }
  return DiscreteJoint(std::move(joint));
}

DiscreteValue::DiscreteValue(Model f, std::shared_ptr<const DiscreteJoint> joint, Kind kind,
                             std::shared_ptr<const Manifold> manifold)
    : f_(std::move(f)), joint_(std::move(joint)), kind_(kind), manifold_(std::move(manifold)) {
  if (kind_ == Kind::kManifold && !manifold_) {
    throw std::invalid_argument("DiscreteValue: manifold kind needs a restriction set");
  }
}

std::string DiscreteValue::name() const {
  switch (kind_) {
    case Kind::kInterventional:
      return "is";
    case Kind::kConditional:
      return "ces";
    case Kind::kManifold:
      break;
  }
  return "manifold";
}

void DiscreteValue::CheckPoint(std::span<const double> x) const {
  if (kind_ == Kind::kManifold && !manifold_->Contains(x)) {
    throw OffManifoldPoint("point lies outside the restriction set");
  }
}

ValueEstimate DiscreteValue::Evaluate(const Coalition& coalition, std::span<const double> x,
                                      RngStream&) const {
  switch (kind_) {
    case Kind::kInterventional:
      return {joint_->Interventional(coalition, x).Expect(f_), 0.0, 0};
    case Kind::kConditional:
      return {joint_->Conditional(coalition, x).Expect(f_), 0.0, 0};
    case Kind::kManifold:
      break;
  }
  CheckPoint(x);
  const Pmf restricted = RestrictPmf(joint_->Interventional(coalition, x), *manifold_,
                                     coalition.ToBitString());
  return {restricted.Expect(f_), 0.0, 0};
}

}  // namespace manifoldshap
