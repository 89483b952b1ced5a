#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "manifoldshap/core.hpp"
#include "manifoldshap/density.hpp"
#include "manifoldshap/rng.hpp"

namespace manifoldshap {

/// Restriction set Z as a membership predicate.
class Manifold {
 public:
  virtual ~Manifold() = default;
  virtual std::size_t dim() const = 0;
  virtual bool Contains(std::span<const double> x) const = 0;
  virtual std::string kind() const = 0;
};

/// Z = R^d.
class FullSupport final : public Manifold {
 public:
  explicit FullSupport(std::size_t d) : d_(d) {}
  std::size_t dim() const override { return d_; }
  bool Contains(std::span<const double>) const override { return true; }
  std::string kind() const override { return "full"; }

 private:
  std::size_t d_;
};

/// Z given by an arbitrary callable (discrete examples, product sets).
class PredicateManifold final : public Manifold {
 public:
  PredicateManifold(std::size_t d, std::function<bool(std::span<const double>)> pred)
      : d_(d), pred_(std::move(pred)) {}
  std::size_t dim() const override { return d_; }
  bool Contains(std::span<const double> x) const override { return pred_(x); }
  std::string kind() const override { return "predicate"; }

 private:
  std::size_t d_;
  std::function<bool(std::span<const double>)> pred_;
};

/// {x : p(x) > epsilon}. Points with p(x) == epsilon are outside.
class DensityManifold : public Manifold {
 public:
  DensityManifold(std::shared_ptr<const Density> density, double epsilon);
  std::size_t dim() const override { return density_->dim(); }
  bool Contains(std::span<const double> x) const override { return (*density_)(x) > epsilon_; }
  std::string kind() const override { return "density"; }

  double epsilon() const { return epsilon_; }
  const std::shared_ptr<const Density>& density() const { return density_; }

 private:
  std::shared_ptr<const Density> density_;
  double epsilon_;
};

/// Density manifold whose threshold was calibrated to capture mass alpha.
class MassManifold final : public DensityManifold {
 public:
  MassManifold(std::shared_ptr<const Density> density, double epsilon, double alpha)
      : DensityManifold(std::move(density), epsilon), alpha_(alpha) {}
  std::string kind() const override { return "mass"; }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

/// Product-Gaussian kernel density estimate.
class KdeEstimator final : public Density {
 public:
  KdeEstimator(Dataset reference, std::vector<double> bandwidth);
  std::size_t dim() const override { return reference_.cols(); }
  double operator()(std::span<const double> x) const override;
  /// Densities at every row of `points` (parallel over rows).
  std::vector<double> Evaluate(const Dataset& points, std::size_t threads = 0) const;

  const Dataset& reference() const { return reference_; }
  const std::vector<double>& bandwidth() const { return bandwidth_; }

 private:
  Dataset reference_;
  std::vector<double> bandwidth_;
  double log_norm_ = 0.0;
};

enum class BandwidthRule { kScott, kSilverman };

/// Scott: h_j = sd_j n^(-1/(d+4)); Silverman: h_j = sd_j (4/(d+2))^(1/(d+4)) n^(-1/(d+4)).
std::vector<double> SelectBandwidth(const Dataset& data, BandwidthRule rule);
KdeEstimator FitKde(const Dataset& data, BandwidthRule rule = BandwidthRule::kScott);
KdeEstimator FitKde(const Dataset& data, std::vector<double> bandwidth);

/// Empirical (1 - alpha) quantile of the calibration densities: with
/// k = floor((1 - alpha) n), returns the k-th smallest density (0 when k = 0),
/// so at least a fraction alpha of the calibration points lie strictly above.
double ThresholdForMass(const Density& density, const Dataset& calibration, double alpha);
double ThresholdForMass(std::vector<double> calibration_densities, double alpha);
std::shared_ptr<MassManifold> MakeMassManifold(std::shared_ptr<const Density> density,
                                               const Dataset& calibration, double alpha);

struct OodOptions {
  std::size_t n_perturbed = 1;     // perturbed copies per real row
  double perturb_fraction = 0.5;   // ceil(fraction * d) coordinates shifted
  double perturb_scale = 3.0;      // shift ~ N(0, (scale * sd_j)^2)
  std::size_t k = 5;
};

/// k-NN vote between real rows (in) and perturbed copies (out) in z-scored
/// Euclidean space; x is in when more than half of its k neighbours are real.
class OodClassifier final : public Manifold {
 public:
  OodClassifier(Dataset points, std::vector<int> labels, std::vector<double> center,
                std::vector<double> scale, std::size_t k);
  std::size_t dim() const override { return points_.cols(); }
  bool Contains(std::span<const double> x) const override;
  std::string kind() const override { return "ood"; }

  const Dataset& points() const { return points_; }  // z-scored
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& center() const { return center_; }
  const std::vector<double>& scale() const { return scale_; }
  std::size_t k() const { return k_; }

 private:
  Dataset points_;
  std::vector<int> labels_;  // 1 = real
  std::vector<double> center_;
  std::vector<double> scale_;
  std::size_t k_;
};

OodClassifier FitOodClassifier(const Dataset& data, const OodOptions& options, RngStream& rng);

/// Fraction of rows inside the manifold.
double InFraction(const Manifold& manifold, const Dataset& data);

/// Flat text format: "key,value..." parameter lines, a "data" line, then
/// CSV rows (header first). KDE-backed manifolds store reference points and
/// bandwidths; OOD classifiers store z-scored points with a label column.
void SaveManifold(const Manifold& manifold, const std::string& path);
std::shared_ptr<Manifold> LoadManifold(const std::string& path);

}  // namespace manifoldshap
