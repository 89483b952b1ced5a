#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "manifoldshap/core.hpp"
#include "manifoldshap/density.hpp"
#include "manifoldshap/rng.hpp"
#include "manifoldshap/sampler.hpp"

namespace manifoldshap {

struct NoiseSpec {
  enum class Kind { kGaussian, kBernoulli, kDegenerate };
  Kind kind = Kind::kDegenerate;
  double mean = 0.0;
  double variance = 0.0;
  double q = 0.0;
  double value = 0.0;

  static NoiseSpec Gaussian(double mean, double variance);
  static NoiseSpec Bernoulli(double q);
  static NoiseSpec Degenerate(double value);

  double Draw(RngStream& rng) const;
  /// Noise value used when the mechanism is evaluated "noise-free":
  /// the mean for Gaussian/Bernoulli, the point value otherwise.
  double Suppressed() const;
};

/// value = mechanism(parent values, noise draw)
using Mechanism = std::function<double(std::span<const double>, double)>;

struct ScmNode {
  std::string name;
  std::vector<std::size_t> parents;  // indices of earlier nodes
  Mechanism mechanism;
  NoiseSpec noise;
};

/// Markovian SCM over nodes in topological order. Every node except the
/// optional output node is a feature; feature j is the j-th non-output node.
class Scm {
 public:
  Scm(std::vector<ScmNode> nodes, std::optional<std::size_t> output = std::nullopt);

  const std::vector<ScmNode>& nodes() const { return nodes_; }
  std::optional<std::size_t> output() const { return output_; }
  std::size_t num_features() const { return feature_nodes_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  /// Node index of feature j.
  std::size_t feature_node(std::size_t j) const { return feature_nodes_[j]; }
  /// Feature index for a node name; throws for unknown names or the output.
  std::size_t FeatureIndex(const std::string& name) const;

  /// One draw under do(X_S = x_S) by truncated factorization. `x` has one
  /// entry per feature; only entries in S are read. Noise is drawn for every
  /// node, intervened or not, so all coalitions consume the stream equally.
  void SampleRow(const Coalition& coalition, std::span<const double> x,
                 RngStream& rng, std::span<double> features,
                 double* output_value = nullptr) const;

  /// Ground-truth model: the output mechanism with noise suppressed, as a
  /// function of the features. Throws when there is no output node.
  Model GroundTruthModel() const;

  /// Analytic extras set by builders.
  std::shared_ptr<const Density> oracle_density;
  std::optional<GaussianDensity> gaussian_joint;

 private:
  std::vector<ScmNode> nodes_;
  std::optional<std::size_t> output_;
  std::vector<std::size_t> feature_nodes_;
  std::vector<std::ptrdiff_t> node_to_feature_;
  std::vector<std::string> feature_names_;
};

/// do(X_S = x_S) with x_S listed in member order of S.
struct InterventionSpec {
  Coalition coalition;
  std::vector<double> values;

  /// Takes x_S from a full feature vector.
  static InterventionSpec FromPoint(const Coalition& coalition, std::span<const double> x);
  /// Intervention by feature name; unknown names throw.
  static InterventionSpec ByName(const Scm& scm, const std::map<std::string, double>& values);
  /// Full-length vector with x_S placed at the coalition members.
  std::vector<double> Expand() const;
};

/// n i.i.d. rows; target column filled from the output node when present.
Dataset SampleObservational(const Scm& scm, std::size_t n, RngStream& rng);
/// n draws of the features left free by the intervention, in feature order.
/// An empty coalition gives observational draws.
Dataset SampleInterventional(const Scm& scm, const InterventionSpec& spec,
                             std::size_t n, RngStream& rng);

/// Analytic law of X_Sbar | X_S = x_S for X ~ N(mu, Sigma).
struct GaussianConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Coalition coalition;
  std::vector<double> values;  // x_S in member order

  GaussianConditional(Eigen::VectorXd mean, Eigen::MatrixXd cov, Coalition coalition,
                      std::vector<double> values);

  /// Conditional mean and covariance of the free coordinates (member order of
  /// the complement).
  const Eigen::VectorXd& conditional_mean() const { return cond_mean_; }
  const Eigen::MatrixXd& conditional_cov() const { return cond_cov_; }

  /// Full-length draws (fixed coordinates copied through).
  Dataset Sample(std::size_t n, RngStream& rng) const;
  void SampleInto(RngStream& rng, std::span<double> out) const;

 private:
  std::vector<std::size_t> free_;
  std::vector<std::size_t> fixed_;
  Eigen::VectorXd cond_mean_;
  Eigen::MatrixXd cond_cov_;
  Eigen::MatrixXd chol_;
};

/// Truncated-factorization sampler over an explicit SCM.
class ScmInterventionalSampler final : public CoalitionSampler {
 public:
  explicit ScmInterventionalSampler(std::shared_ptr<const Scm> scm) : scm_(std::move(scm)) {}
  std::size_t dim() const override { return scm_->num_features(); }
  void Sample(const Coalition& coalition, std::span<const double> x, RngStream& rng,
              std::span<double> out) const override;

 private:
  std::shared_ptr<const Scm> scm_;
};

/// Fig.-2 style interventional sampler: draws a full observational row from
/// the SCM and overwrites x_S, so X_Sbar follows its marginal.
class ScmMarginalSampler final : public CoalitionSampler {
 public:
  explicit ScmMarginalSampler(std::shared_ptr<const Scm> scm) : scm_(std::move(scm)) {}
  std::size_t dim() const override { return scm_->num_features(); }
  void Sample(const Coalition& coalition, std::span<const double> x, RngStream& rng,
              std::span<double> out) const override;

 private:
  std::shared_ptr<const Scm> scm_;
};

/// Conditional sampler for a Gaussian joint (CES). Recomputes the
/// conditional per call; batch callers should use GaussianConditional.
class GaussianConditionalSampler final : public CoalitionSampler {
 public:
  explicit GaussianConditionalSampler(GaussianDensity joint) : joint_(std::move(joint)) {}
  std::size_t dim() const override { return joint_.dim(); }
  void Sample(const Coalition& coalition, std::span<const double> x, RngStream& rng,
              std::span<double> out) const override;
  GaussianConditional Condition(const Coalition& coalition, std::span<const double> x) const;

 private:
  GaussianDensity joint_;
};

// Builders. All validate |rho| < 1.

/// X1 = e1, X2 = rho X1 + sqrt(1 - rho^2) e2, Y = X1.
std::shared_ptr<Scm> MakeDagScm(double rho);
/// Same joint as MakeDagScm, Y = 1(X1 > 1/2).
std::shared_ptr<Scm> MakeCorrGaussian2d(double rho);
/// X1 ~ N(0, 4), X2 | X1 ~ N(sin X1, 0.01), Y = X1.
std::shared_ptr<Scm> MakeSineScm();
/// X ~ N(0, I2), Y = exp(X1^2 / 2).
std::shared_ptr<Scm> MakeIndepGaussian2d();
/// X ~ N(0, Sigma), Sigma_ij = 1(i=j) + rho 1(i!=j), Y = X1.
std::shared_ptr<Scm> MakeEquicorrelated(std::size_t d, double rho);
/// Linear-Gaussian chain realizing N(mean, cov) with X_j regressed on
/// X_1..X_{j-1}; output Y = X1 unless `output` is given.
std::shared_ptr<Scm> MakeGaussianScm(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                     Mechanism output = nullptr);

struct ScmParams {
  double rho = 0.85;
  std::size_t d = 10;
};
/// dag_rho | corr_gaussian_2d | sine | indep_gaussian_2d | equicorrelated
std::shared_ptr<Scm> MakeScmByName(const std::string& name, const ScmParams& params);
const std::vector<std::string>& ScmNames();

}  // namespace manifoldshap
