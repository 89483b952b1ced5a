#include "manifoldshap/density.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace manifoldshap {

GaussianDensity::GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw std::invalid_argument("GaussianDensity: covariance shape does not match mean");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("GaussianDensity: covariance is not positive definite");
  }
  precision_ = llt.solve(Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols()));
  const Eigen::MatrixXd l = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  log_norm_ = 0.5 * (static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) +
                     log_det);
}

double GaussianDensity::Mahalanobis2(std::span<const double> x) const {
  Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd c = v - mean_;
  return c.dot(precision_ * c);
}

double GaussianDensity::operator()(std::span<const double> x) const {
  return std::exp(-0.5 * Mahalanobis2(x) - log_norm_);
}

}  // namespace manifoldshap
