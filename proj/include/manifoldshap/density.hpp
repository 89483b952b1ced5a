#pragma once

#include <functional>
#include <memory>
#include <span>

#include <Eigen/Dense>

namespace manifoldshap {

/// Joint density p(x) on R^d.
class Density {
 public:
  virtual ~Density() = default;
  virtual std::size_t dim() const = 0;
  virtual double operator()(std::span<const double> x) const = 0;
};

/// Multivariate normal N(mean, cov); cov must be symmetric positive definite.
class GaussianDensity final : public Density {
 public:
  GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  std::size_t dim() const override { return static_cast<std::size_t>(mean_.size()); }
  double operator()(std::span<const double> x) const override;
  /// Squared Mahalanobis distance (x - mean)' cov^-1 (x - mean).
  double Mahalanobis2(std::span<const double> x) const;
  double LogNormalizer() const { return log_norm_; }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd precision_;
  double log_norm_ = 0.0;
};

/// Density backed by a closed-form callable.
class FunctionDensity final : public Density {
 public:
  FunctionDensity(std::size_t d, std::function<double(std::span<const double>)> fn)
      : d_(d), fn_(std::move(fn)) {}
  std::size_t dim() const override { return d_; }
  double operator()(std::span<const double> x) const override { return fn_(x); }

 private:
  std::size_t d_;
  std::function<double(std::span<const double>)> fn_;
};

}  // namespace manifoldshap
