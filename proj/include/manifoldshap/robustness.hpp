#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "manifoldshap/core.hpp"
#include "manifoldshap/density.hpp"
#include "manifoldshap/manifold.hpp"
#include "manifoldshap/rng.hpp"
#include "manifoldshap/values.hpp"

namespace manifoldshap {

enum class PerturbationKind {
  kRegression,     // f + delta x_feature 1(x not in Z)
  kClassifier,     // f 1(in) + 1((1 - delta) x_feature > 1/2) 1(out)
  kGate,           // f 1(in) + 1(x_unrelated > 0) 1(out)
  kAdditive,       // f + K 1(out)
  kDensityScaled,  // f + delta c(x) / max(p(x), floor) inside ||x|| <= radius
};

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kAdditive;
  double delta = 0.0;
  double K = 0.0;
  std::size_t feature = 1;           // regression: X2; classifier uses 0
  std::size_t unrelated_column = 0;  // gate
  std::shared_ptr<const Density> density;
  double density_floor = 1e-8;
  double radius = std::numeric_limits<double>::infinity();
  /// Direction c(x) with |c| <= 1; null means c = 1.
  std::function<double(std::span<const double>)> direction;
};

/// Model built from f per the spec. Z is required for every kind except
/// kDensityScaled.
Model BuildPerturbed(Model f, std::shared_ptr<const Manifold> manifold, const PerturbationSpec& spec);

/// Value function for a given model; lets one check rebuild v for f1 and f2
/// with identical backends.
using ValueFactory = std::function<std::shared_ptr<ValueFunction>(Model)>;

struct RobustnessInputs {
  ValueFactory factory;
  Model f1;
  Model f2;
  Instance x;
  /// Coalitions to compare; empty means all 2^d.
  std::vector<Coalition> coalitions;
  std::uint64_t seed = 0;
};

struct CoalitionDiff {
  Coalition coalition;
  double v1 = 0.0;
  double v2 = 0.0;
  double se = 0.0;  // sqrt(se1^2 + se2^2)
  double absdiff = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct RobustnessReport {
  std::string method;
  std::vector<CoalitionDiff> rows;
  /// Probe-estimated perturbation size (a lower bound on the true sup).
  double delta_hat = 0.0;
  double T = 1.0;
  std::size_t n_probes = 0;
  bool pass = true;

  double MaxAbsDiff() const;
};

/// Model gap measured as max |f1 - f2| over probes inside z_prime; each
/// coalition passes when |v1 - v2| <= T delta_hat + 3 se.
RobustnessReport CheckSubspaceRobustness(const RobustnessInputs& in, const Manifold& z_prime,
                                         const Dataset& probes, double T = 1.0);

/// Density-weighted gap: delta_hat = max |f1 - f2| p over probes. Each
/// coalition passes when |v1 - v2| <= delta / epsilon + 3 se, with delta the
/// constructed bound (T = 1 / epsilon).
RobustnessReport CheckTRobustness(const RobustnessInputs& in, const Density& density,
                                  double delta, double epsilon, const Dataset& probes);

/// Columns: coalition,v1,v2,absdiff,bound,pass.
void WriteRobustnessCsv(const RobustnessReport& report, const std::filesystem::path& path);

}  // namespace manifoldshap
