#include "manifoldshap/scm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace manifoldshap {

NoiseSpec NoiseSpec::Gaussian(double mean, double variance) {
  if (!(variance >= 0.0)) throw std::invalid_argument("NoiseSpec: negative variance");
  NoiseSpec n;
  n.kind = Kind::kGaussian;
  n.mean = mean;
  n.variance = variance;
  return n;
}

NoiseSpec NoiseSpec::Bernoulli(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("NoiseSpec: q outside [0, 1]");
  NoiseSpec n;
  n.kind = Kind::kBernoulli;
  n.q = q;
  return n;
}

NoiseSpec NoiseSpec::Degenerate(double value) {
  NoiseSpec n;
  n.kind = Kind::kDegenerate;
  n.value = value;
  return n;
}

double NoiseSpec::Draw(RngStream& rng) const {
  switch (kind) {
    case Kind::kGaussian:
      return rng.normal(mean, std::sqrt(variance));
    case Kind::kBernoulli:
      return rng.bernoulli(q) ? 1.0 : 0.0;
    case Kind::kDegenerate:
      break;
  }
  return value;
}

double NoiseSpec::Suppressed() const {
  switch (kind) {
    case Kind::kGaussian:
      return mean;
    case Kind::kBernoulli:
      return q;
    case Kind::kDegenerate:
      break;
  }
  return value;
}

Scm::Scm(std::vector<ScmNode> nodes, std::optional<std::size_t> output)
    : nodes_(std::move(nodes)), output_(output) {
  if (nodes_.empty()) throw std::invalid_argument("Scm: no nodes");
  if (output_ && *output_ >= nodes_.size()) throw std::invalid_argument("Scm: output out of range");
  std::unordered_map<std::string, std::size_t> seen;
  node_to_feature_.assign(nodes_.size(), -1);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& node = nodes_[k];
    if (!node.mechanism) throw std::invalid_argument("Scm: node '" + node.name + "' has no mechanism");
    if (!seen.emplace(node.name, k).second) {
      throw std::invalid_argument("Scm: duplicate node name '" + node.name + "'");
    }
    for (auto p : node.parents) {
      if (p >= k) {
        throw std::invalid_argument("Scm: parent of '" + node.name +
                                    "' does not precede it in topological order");
      }
    }
    if (output_ && k == *output_) continue;
    node_to_feature_[k] = static_cast<std::ptrdiff_t>(feature_nodes_.size());
    feature_nodes_.push_back(k);
    feature_names_.push_back(node.name);
  }
  if (feature_nodes_.empty()) throw std::invalid_argument("Scm: no feature nodes");
}

std::size_t Scm::FeatureIndex(const std::string& name) const {
  for (std::size_t j = 0; j < feature_names_.size(); ++j)
    if (feature_names_[j] == name) return j;
  throw std::invalid_argument("Scm: unknown feature node '" + name + "'");
}

void Scm::SampleRow(const Coalition& coalition, std::span<const double> x, RngStream& rng,
                    std::span<double> features, double* output_value) const {
  const std::size_t d = num_features();
  if (coalition.dim() != d) {
    throw std::invalid_argument("Scm: coalition over " + std::to_string(coalition.dim()) +
                                " features, model has " + std::to_string(d));
  }
  std::vector<double> values(nodes_.size());
  std::vector<double> parent_values;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& node = nodes_[k];
    const double noise = node.noise.Draw(rng);
    const auto j = node_to_feature_[k];
    if (j >= 0 && coalition.contains(static_cast<std::size_t>(j))) {
      values[k] = x[static_cast<std::size_t>(j)];
      continue;
    }
    parent_values.clear();
    for (auto p : node.parents) parent_values.push_back(values[p]);
    values[k] = node.mechanism(parent_values, noise);
  }
  for (std::size_t j = 0; j < d; ++j) features[j] = values[feature_nodes_[j]];
  if (output_value && output_) *output_value = values[*output_];
}

Model Scm::GroundTruthModel() const {
  if (!output_) throw std::logic_error("Scm: no output node");
  const auto& node = nodes_[*output_];
  std::vector<std::size_t> parent_features;
  for (auto p : node.parents) {
    if (node_to_feature_[p] < 0) throw std::logic_error("Scm: output depends on a non-feature node");
    parent_features.push_back(static_cast<std::size_t>(node_to_feature_[p]));
  }
  const double noise = node.noise.Suppressed();
  return [mech = node.mechanism, parent_features, noise](std::span<const double> x) {
    std::vector<double> pv(parent_features.size());
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = x[parent_features[i]];
    return mech(pv, noise);
  };
}

InterventionSpec InterventionSpec::FromPoint(const Coalition& coalition,
                                             std::span<const double> x) {
  if (x.size() != coalition.dim()) throw std::invalid_argument("InterventionSpec: dimension mismatch");
  InterventionSpec s{coalition, {}};
  for (auto i : coalition.members()) s.values.push_back(x[i]);
  return s;
}

InterventionSpec InterventionSpec::ByName(const Scm& scm,
                                          const std::map<std::string, double>& values) {
  InterventionSpec s{Coalition(scm.num_features()), {}};
  std::vector<double> full(scm.num_features(), 0.0);
  for (const auto& [name, v] : values) {
    const auto j = scm.FeatureIndex(name);
    s.coalition.insert(j);
    full[j] = v;
  }
  for (auto i : s.coalition.members()) s.values.push_back(full[i]);
  return s;
}

std::vector<double> InterventionSpec::Expand() const {
  const auto members = coalition.members();
  if (members.size() != values.size()) {
    throw std::invalid_argument("InterventionSpec: expected " + std::to_string(members.size()) +
                                " values, got " + std::to_string(values.size()));
  }
  std::vector<double> full(coalition.dim(), 0.0);
  for (std::size_t k = 0; k < members.size(); ++k) full[members[k]] = values[k];
  return full;
}

namespace {

Dataset Draw(const Scm& scm, const Coalition& coalition, std::span<const double> x,
             std::size_t n, RngStream& rng) {
  const std::size_t d = scm.num_features();
  std::vector<double> values(n * d);
  std::optional<std::vector<double>> target;
  if (scm.output()) target.emplace(n);
  double y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scm.SampleRow(coalition, x, rng, std::span<double>(values.data() + i * d, d), &y);
    if (target) (*target)[i] = y;
  }
  return Dataset(n, d, std::move(values), scm.feature_names(), std::move(target));
}

}  // namespace

Dataset SampleObservational(const Scm& scm, std::size_t n, RngStream& rng) {
  std::vector<double> none(scm.num_features(), 0.0);
  return Draw(scm, Coalition(scm.num_features()), none, n, rng);
}

Dataset SampleInterventional(const Scm& scm, const InterventionSpec& spec, std::size_t n,
                             RngStream& rng) {
  if (spec.coalition.dim() != scm.num_features()) {
    throw std::invalid_argument("SampleInterventional: intervention names features the model lacks");
  }
  const auto x = spec.Expand();
  const Dataset full = Draw(scm, spec.coalition, x, n, rng);
  // Keep only the columns left free by the intervention.
  const auto free = spec.coalition.complement().members();
  std::vector<double> values;
  values.reserve(n * free.size());
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : free) values.push_back(full.at(i, j));
  std::vector<std::string> names;
  for (auto j : free) names.push_back(scm.feature_names()[j]);
  return Dataset(n, free.size(), std::move(values), std::move(names), full.target());
}

GaussianConditional::GaussianConditional(Eigen::VectorXd mu, Eigen::MatrixXd sigma,
                                         Coalition s, std::vector<double> vals)
    : mean(std::move(mu)), cov(std::move(sigma)), coalition(std::move(s)), values(std::move(vals)) {
  const auto d = static_cast<std::size_t>(mean.size());
  if (coalition.dim() != d || static_cast<std::size_t>(cov.rows()) != d ||
      static_cast<std::size_t>(cov.cols()) != d) {
    throw std::invalid_argument("GaussianConditional: dimension mismatch");
  }
  fixed_ = coalition.members();
  free_ = coalition.complement().members();
  if (values.size() != fixed_.size()) {
    throw std::invalid_argument("GaussianConditional: need one value per conditioning feature");
  }
  const auto nf = static_cast<Eigen::Index>(free_.size());
  const auto ns = static_cast<Eigen::Index>(fixed_.size());
  Eigen::VectorXd mu_f(nf), mu_s(ns), xs(ns);
  Eigen::MatrixXd s_ff(nf, nf), s_fs(nf, ns), s_ss(ns, ns);
  for (Eigen::Index a = 0; a < nf; ++a) {
    mu_f(a) = mean(static_cast<Eigen::Index>(free_[a]));
    for (Eigen::Index b = 0; b < nf; ++b)
      s_ff(a, b) = cov(static_cast<Eigen::Index>(free_[a]), static_cast<Eigen::Index>(free_[b]));
    for (Eigen::Index b = 0; b < ns; ++b)
      s_fs(a, b) = cov(static_cast<Eigen::Index>(free_[a]), static_cast<Eigen::Index>(fixed_[b]));
  }
  for (Eigen::Index a = 0; a < ns; ++a) {
    mu_s(a) = mean(static_cast<Eigen::Index>(fixed_[a]));
    xs(a) = values[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < ns; ++b)
      s_ss(a, b) = cov(static_cast<Eigen::Index>(fixed_[a]), static_cast<Eigen::Index>(fixed_[b]));
  }
  if (ns > 0 && nf > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s_ss);
    const double scale = s_ss.diagonal().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(scale, 1.0)) {
      throw std::invalid_argument("GaussianConditional: conditioning covariance is singular");
    }
    cond_mean_ = mu_f + s_fs * ldlt.solve(xs - mu_s);
    cond_cov_ = s_ff - s_fs * ldlt.solve(s_fs.transpose());
  } else {
    cond_mean_ = mu_f;
    cond_cov_ = s_ff;
  }
  if (nf > 0) {
    cond_cov_ = 0.5 * (cond_cov_ + cond_cov_.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(cond_cov_);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
    } else {
      // Numerically semidefinite: symmetric square root with clamped spectrum.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cond_cov_);
      chol_ = es.eigenvectors() *
              es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
              es.eigenvectors().transpose();
    }
  }
}

void GaussianConditional::SampleInto(RngStream& rng, std::span<double> out) const {
  for (std::size_t k = 0; k < fixed_.size(); ++k) out[fixed_[k]] = values[k];
  if (free_.empty()) return;
  const auto nf = static_cast<Eigen::Index>(free_.size());
  Eigen::VectorXd z(nf);
  for (Eigen::Index a = 0; a < nf; ++a) z(a) = rng.normal();
  const Eigen::VectorXd y = cond_mean_ + chol_ * z;
  for (Eigen::Index a = 0; a < nf; ++a) out[free_[static_cast<std::size_t>(a)]] = y(a);
}

Dataset GaussianConditional::Sample(std::size_t n, RngStream& rng) const {
  const auto d = static_cast<std::size_t>(mean.size());
  std::vector<double> v(n * d);
  for (std::size_t i = 0; i < n; ++i) SampleInto(rng, std::span<double>(v.data() + i * d, d));
  return Dataset(n, d, std::move(v));
}

void ScmInterventionalSampler::Sample(const Coalition& coalition, std::span<const double> x,
                                      RngStream& rng, std::span<double> out) const {
  scm_->SampleRow(coalition, x, rng, out);
}

void ScmMarginalSampler::Sample(const Coalition& coalition, std::span<const double> x,
                                RngStream& rng, std::span<double> out) const {
  scm_->SampleRow(Coalition(scm_->num_features()), x, rng, out);
  for (auto i : coalition.members()) out[i] = x[i];
}

GaussianConditional GaussianConditionalSampler::Condition(const Coalition& coalition,
                                                          std::span<const double> x) const {
  std::vector<double> xs;
  for (auto i : coalition.members()) xs.push_back(x[i]);
  return GaussianConditional(joint_.mean(), joint_.cov(), coalition, std::move(xs));
}

void GaussianConditionalSampler::Sample(const Coalition& coalition, std::span<const double> x,
                                        RngStream& rng, std::span<double> out) const {
  Condition(coalition, x).SampleInto(rng, out);
}

namespace {

void CheckRho(double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("correlation must satisfy |rho| < 1, got " + std::to_string(rho));
  }
}

Eigen::MatrixXd Bivariate(double rho) {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, rho, rho, 1.0;
  return cov;
}

std::shared_ptr<Scm> TwoNodeGaussian(double rho, Mechanism output) {
  CheckRho(rho);
  const double s = std::sqrt(1.0 - rho * rho);
  std::vector<ScmNode> nodes;
  nodes.push_back({"X1", {}, [](std::span<const double>, double e) { return e; },
                   NoiseSpec::Gaussian(0.0, 1.0)});
  nodes.push_back({"X2", {0}, [rho, s](std::span<const double> p, double e) {
                     return rho * p[0] + s * e;
                   }, NoiseSpec::Gaussian(0.0, 1.0)});
  nodes.push_back({"Y", {0}, std::move(output), NoiseSpec::Degenerate(0.0)});
  auto scm = std::make_shared<Scm>(std::move(nodes), 2);
  scm->gaussian_joint.emplace(Eigen::VectorXd::Zero(2), Bivariate(rho));
  scm->oracle_density = std::make_shared<GaussianDensity>(*scm->gaussian_joint);
  return scm;
}

}  // namespace

std::shared_ptr<Scm> MakeDagScm(double rho) {
  return TwoNodeGaussian(rho, [](std::span<const double> p, double) { return p[0]; });
}

std::shared_ptr<Scm> MakeCorrGaussian2d(double rho) {
  return TwoNodeGaussian(rho, [](std::span<const double> p, double) {
    return p[0] > 0.5 ? 1.0 : 0.0;
  });
}

std::shared_ptr<Scm> MakeSineScm() {
  std::vector<ScmNode> nodes;
  nodes.push_back({"X1", {}, [](std::span<const double>, double e) { return e; },
                   NoiseSpec::Gaussian(0.0, 4.0)});
  nodes.push_back({"X2", {0}, [](std::span<const double> p, double e) {
                     return std::sin(p[0]) + e;
                   }, NoiseSpec::Gaussian(0.0, 0.01)});
  nodes.push_back({"Y", {0}, [](std::span<const double> p, double) { return p[0]; },
                   NoiseSpec::Degenerate(0.0)});
  auto scm = std::make_shared<Scm>(std::move(nodes), 2);
  scm->oracle_density = std::make_shared<FunctionDensity>(2, [](std::span<const double> x) {
    const double z1 = x[0] / 2.0;
    const double z2 = (x[1] - std::sin(x[0])) / 0.1;
    return std::exp(-0.5 * (z1 * z1 + z2 * z2)) / (2.0 * std::numbers::pi * 2.0 * 0.1);
  });
  return scm;
}

std::shared_ptr<Scm> MakeIndepGaussian2d() {
  std::vector<ScmNode> nodes;
  nodes.push_back({"X1", {}, [](std::span<const double>, double e) { return e; },
                   NoiseSpec::Gaussian(0.0, 1.0)});
  nodes.push_back({"X2", {}, [](std::span<const double>, double e) { return e; },
                   NoiseSpec::Gaussian(0.0, 1.0)});
  nodes.push_back({"Y", {0}, [](std::span<const double> p, double) {
                     return std::exp(0.5 * p[0] * p[0]);
                   }, NoiseSpec::Degenerate(0.0)});
  auto scm = std::make_shared<Scm>(std::move(nodes), 2);
  scm->gaussian_joint.emplace(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  scm->oracle_density = std::make_shared<GaussianDensity>(*scm->gaussian_joint);
  return scm;
}

std::shared_ptr<Scm> MakeGaussianScm(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                     Mechanism output) {
  const auto d = mean.size();
  GaussianDensity joint(mean, cov);  // validates SPD
  std::vector<ScmNode> nodes;
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<std::size_t> parents;
    for (Eigen::Index k = 0; k < j; ++k) parents.push_back(static_cast<std::size_t>(k));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(j);
    double var = cov(j, j);
    if (j > 0) {
      const Eigen::MatrixXd spp = cov.topLeftCorner(j, j);
      const Eigen::VectorXd spj = cov.col(j).head(j);
      b = spp.llt().solve(spj);
      var -= spj.dot(b);
    }
    const double intercept = mean(j) - (j > 0 ? b.dot(mean.head(j)) : 0.0);
    const double sd = std::sqrt(std::max(var, 0.0));
    std::vector<double> coef(b.data(), b.data() + b.size());
    nodes.push_back({"X" + std::to_string(j + 1), parents,
                     [coef, intercept, sd](std::span<const double> p, double e) {
                       double v = intercept + sd * e;
                       for (std::size_t k = 0; k < coef.size(); ++k) v += coef[k] * p[k];
                       return v;
                     },
                     NoiseSpec::Gaussian(0.0, 1.0)});
  }
  std::vector<std::size_t> all;
  for (Eigen::Index j = 0; j < d; ++j) all.push_back(static_cast<std::size_t>(j));
  if (!output) output = [](std::span<const double> p, double) { return p[0]; };
  nodes.push_back({"Y", all, std::move(output), NoiseSpec::Degenerate(0.0)});
  auto scm = std::make_shared<Scm>(std::move(nodes), static_cast<std::size_t>(d));
  scm->gaussian_joint.emplace(joint);
  scm->oracle_density = std::make_shared<GaussianDensity>(joint);
  return scm;
}

std::shared_ptr<Scm> MakeEquicorrelated(std::size_t d, double rho) {
  CheckRho(rho);
  if (d < 2) throw std::invalid_argument("MakeEquicorrelated: need d >= 2");
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(n, n, rho);
  cov.diagonal().setOnes();
  return MakeGaussianScm(Eigen::VectorXd::Zero(n), cov);
}

const std::vector<std::string>& ScmNames() {
  static const std::vector<std::string> names = {"dag_rho", "corr_gaussian_2d", "sine",
                                                 "indep_gaussian_2d", "equicorrelated"};
  return names;
}

std::shared_ptr<Scm> MakeScmByName(const std::string& name, const ScmParams& params) {
  if (name == "dag_rho") return MakeDagScm(params.rho);
  if (name == "corr_gaussian_2d") return MakeCorrGaussian2d(params.rho);
  if (name == "sine") return MakeSineScm();
  if (name == "indep_gaussian_2d") return MakeIndepGaussian2d();
  if (name == "equicorrelated") return MakeEquicorrelated(params.d, params.rho);
  std::string valid;
  for (const auto& n : ScmNames()) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown scm '" + name + "' (valid: " + valid + ")");
}

}  // namespace manifoldshap
