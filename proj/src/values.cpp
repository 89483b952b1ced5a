#include "manifoldshap/values.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace manifoldshap {

namespace {

/// Running mean and variance (Welford).
class Moments {
 public:
  void Add(double v) {
    ++n_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

void CheckDims(const Coalition& coalition, std::span<const double> x, std::size_t d) {
  if (coalition.dim() != d || x.size() != d) {
    throw std::invalid_argument("value function over " + std::to_string(d) +
                                " features called with coalition/point of dimension " +
                                std::to_string(coalition.dim()) + "/" + std::to_string(x.size()));
  }
}

void CheckSamples(std::size_t m) {
  if (m == 0) throw std::invalid_argument("sample count m must be >= 1");
}

}  // namespace

SampledValue::SampledValue(Model f, std::shared_ptr<const CoalitionSampler> sampler,
                           std::size_t m, std::string name)
    : f_(std::move(f)), sampler_(std::move(sampler)), m_(m), name_(std::move(name)) {
  CheckSamples(m_);
  if (!sampler_) throw std::invalid_argument("SampledValue: null sampler");
}

ValueEstimate SampledValue::Evaluate(const Coalition& coalition, std::span<const double> x,
                                     RngStream& rng) const {
  CheckDims(coalition, x, dim());
  if (coalition.is_full()) return {f_(x), 0.0, 0};
  std::vector<double> buf(dim());
  Moments acc;
  for (std::size_t j = 0; j < m_; ++j) {
    sampler_->Sample(coalition, x, rng, buf);
    acc.Add(f_(buf));
  }
  return {acc.mean(), acc.std_error(), m_};
}

std::shared_ptr<ValueFunction> MakeMsValue(Model f, std::shared_ptr<const Dataset> data,
                                           std::size_t m) {
  return std::make_shared<SampledValue>(std::move(f),
                                        std::make_shared<RowMarginalSampler>(std::move(data)), m,
                                        "ms");
}

std::shared_ptr<CoalitionSampler> MakeInterventionalSampler(std::shared_ptr<const Scm> scm,
                                                            Interventional semantics) {
  if (semantics == Interventional::kMarginal) {
    return std::make_shared<ScmMarginalSampler>(std::move(scm));
  }
  return std::make_shared<ScmInterventionalSampler>(std::move(scm));
}

std::shared_ptr<ValueFunction> MakeIsValue(Model f, std::shared_ptr<const Scm> scm, std::size_t m,
                                           Interventional semantics) {
  return std::make_shared<SampledValue>(std::move(f),
                                        MakeInterventionalSampler(std::move(scm), semantics), m,
                                        "is");
}

CesAnalyticValue::CesAnalyticValue(Model f, GaussianDensity joint, std::size_t m)
    : f_(std::move(f)), joint_(std::move(joint)), m_(m) {
  CheckSamples(m_);
}

ValueEstimate CesAnalyticValue::Evaluate(const Coalition& coalition, std::span<const double> x,
                                         RngStream& rng) const {
  CheckDims(coalition, x, dim());
  if (coalition.is_full()) return {f_(x), 0.0, 0};
  std::vector<double> xs;
  for (auto i : coalition.members()) xs.push_back(x[i]);
  GaussianConditional cond(joint_.mean(), joint_.cov(), coalition, std::move(xs));
  std::vector<double> buf(dim());
  Moments acc;
  for (std::size_t j = 0; j < m_; ++j) {
    cond.SampleInto(rng, buf);
    acc.Add(f_(buf));
  }
  return {acc.mean(), acc.std_error(), m_};
}

ValueEstimate CesSurrogateValue::Evaluate(const Coalition& coalition, std::span<const double> x,
                                          RngStream&) const {
  CheckDims(coalition, x, dim());
  if (coalition.is_full()) return {f_(x), 0.0, 0};
  return surrogate_->Predict(coalition, x);
}

JbValue::JbValue(Model f, std::shared_ptr<const Density> density, Instance baseline)
    : f_(std::move(f)), density_(std::move(density)), baseline_(std::move(baseline)) {
  if (!density_ || density_->dim() != baseline_.size()) {
    throw std::invalid_argument("JbValue: density and baseline dimensions differ");
  }
}

ValueEstimate JbValue::Evaluate(const Coalition& coalition, std::span<const double> x,
                                RngStream&) const {
  CheckDims(coalition, x, dim());
  Instance z = baseline_;
  for (auto i : coalition.members()) z[i] = x[i];
  return {f_(z) * (*density_)(z), 0.0, 0};
}

RjbValue::RjbValue(Model f, std::shared_ptr<const Density> density,
                   std::shared_ptr<const CoalitionSampler> prior, std::size_t m)
    : f_(std::move(f)), density_(std::move(density)), prior_(std::move(prior)), m_(m) {
  CheckSamples(m_);
  if (!density_ || !prior_ || density_->dim() != prior_->dim()) {
    throw std::invalid_argument("RjbValue: density and prior dimensions differ");
  }
}

ValueEstimate RjbValue::Evaluate(const Coalition& coalition, std::span<const double> x,
                                 RngStream& rng) const {
  CheckDims(coalition, x, dim());
  if (coalition.is_full()) return {f_(x) * (*density_)(x), 0.0, 0};
  std::vector<double> buf(dim());
  Moments acc;
  for (std::size_t j = 0; j < m_; ++j) {
    prior_->Sample(coalition, x, rng, buf);
    acc.Add(f_(buf) * (*density_)(buf));
  }
  return {acc.mean(), acc.std_error(), m_};
}

ManifoldValue::ManifoldValue(Model f, std::shared_ptr<const Manifold> manifold,
                             std::shared_ptr<const CoalitionSampler> sampler, std::size_t m,
                             ManifoldEstimator estimator, double cap_factor)
    : f_(std::move(f)), manifold_(std::move(manifold)), sampler_(std::move(sampler)), m_(m),
      estimator_(estimator), cap_factor_(cap_factor) {
  CheckSamples(m_);
  if (!manifold_ || !sampler_ || manifold_->dim() != sampler_->dim()) {
    throw std::invalid_argument("ManifoldValue: manifold and sampler dimensions differ");
  }
  if (!(cap_factor_ >= 1.0)) throw std::invalid_argument("ManifoldValue: cap_factor must be >= 1");
}

void ManifoldValue::CheckPoint(std::span<const double> x) const {
  if (!manifold_->Contains(x)) {
    throw OffManifoldPoint("point lies outside the restriction set; ManifoldShap is undefined there");
  }
}

ValueEstimate ManifoldValue::Evaluate(const Coalition& coalition, std::span<const double> x,
                                      RngStream& rng) const {
  CheckDims(coalition, x, dim());
  CheckPoint(x);
  if (coalition.is_full()) return {f_(x), 0.0, 0};
  std::vector<double> buf(dim());
  if (estimator_ == ManifoldEstimator::kRejection) {
    const auto cap = static_cast<std::size_t>(cap_factor_ * static_cast<double>(m_));
    Moments acc;
    std::size_t attempts = 0;
    while (acc.count() < m_ && attempts < cap) {
      ++attempts;
      sampler_->Sample(coalition, x, rng, buf);
      if (manifold_->Contains(buf)) acc.Add(f_(buf));
    }
    if (acc.count() == 0) throw AcceptanceFailure(coalition.ToBitString(), attempts);
    return {acc.mean(), acc.std_error(), acc.count()};
  }
  // Ratio of interventional means: E[f 1(Z)] / P(Z).
  double sum_f = 0.0;
  std::size_t inside = 0;
  std::vector<double> accepted;
  for (std::size_t j = 0; j < m_; ++j) {
    sampler_->Sample(coalition, x, rng, buf);
    if (!manifold_->Contains(buf)) continue;
    const double v = f_(buf);
    accepted.push_back(v);
    sum_f += v;
    ++inside;
  }
  if (inside == 0) throw AcceptanceFailure(coalition.ToBitString(), m_);
  const double m = static_cast<double>(m_);
  const double p = static_cast<double>(inside) / m;
  const double ratio = (sum_f / m) / p;
  // Delta method: Var(r) ~ Var(f 1 - r 1) / (m p^2); draws outside Z add 0.
  double ss = 0.0;
  for (double v : accepted) ss += (v - ratio) * (v - ratio);
  const double var = m > 1 ? ss / (m - 1) : 0.0;
  return {ratio, std::sqrt(var / (m * p * p)), inside};
}

const std::vector<std::string>& MethodNames() {
  static const std::vector<std::string> names = {"ms", "is",  "ces-analytic", "ces-surrogate",
                                                 "jb", "rjb", "manifold"};
  return names;
}

bool IsMethodName(const std::string& name) {
  const auto& n = MethodNames();
  return std::find(n.begin(), n.end(), name) != n.end();
}

}  // namespace manifoldshap
