#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "manifoldshap/core.hpp"
#include "manifoldshap/manifold.hpp"

namespace manifoldshap {

struct ManifoldSpec {
  /// full | density | mass | ood | oracle-density | oracle-mass
  std::string kind = "oracle-mass";
  double epsilon = 0.0;
  double alpha = 1.0 - 1e-3;
  std::size_t calibration = 10000;  // rows used to pick the mass threshold
  std::size_t reference = 2000;     // KDE / OOD training rows
  OodOptions ood;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t n_points = 500;
  std::size_t m = 500;              // MC samples per value
  std::size_t permutations = 2000;  // M
  /// auto | exact | permutation | manifold-permutation
  std::string engine = "auto";
  std::vector<std::string> methods;
  ManifoldSpec manifold;
  double rho = 0.85;
  std::vector<double> deltas;
  std::vector<double> rhos;
  std::vector<double> alphas;
  std::vector<std::size_t> dims;
  /// marginal (X_Sbar keeps its marginal law) | scm (truncated factorization)
  std::string interventional = "marginal";
  /// rejection | ratio
  std::string estimator = "rejection";
  /// error | skip
  std::string on_acceptance_failure = "error";
  std::size_t background = 10000;  // rows for MS / surrogate / baselines
  std::size_t surrogate_draws = 0;
  std::size_t max_attempts = 100000;
  bool literal = false;

  /// Registered defaults for a named experiment.
  static ExperimentConfig Defaults(const std::string& experiment);
  /// Overlays keys from a JSON object on the experiment's defaults. Unknown
  /// keys and out-of-range values throw ConfigError.
  static ExperimentConfig FromJson(const std::string& json_text,
                                   const std::string& experiment_override = "");
  std::string ToJson() const;
  void Validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const std::vector<std::string>& ExperimentNames();

struct PointResult {
  std::optional<Attribution> attribution;
  /// ok | off-manifold | acceptance-failure
  std::string status = "ok";
};

struct MethodResult {
  std::string method;
  std::vector<PointResult> points;

  /// Percentage of evaluated points whose top feature is j; the last entry
  /// is the degenerate bucket. Sums to 100 when any point was evaluated.
  std::vector<double> TopPercentages(std::size_t d) const;
  std::size_t evaluated() const;
};

struct SettingResult {
  std::string label;  // e.g. "delta=5"
  std::string parameter;
  double value = 0.0;
  std::vector<std::string> feature_names;
  std::vector<Instance> points;
  std::vector<MethodResult> methods;  // "gt-is" first

  const MethodResult& method(const std::string& name) const;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SettingResult> settings;
  double runtime_seconds = 0.0;  // not written to disk

  const SettingResult& setting(const std::string& label) const;
};

ExperimentResult RunExperiment(const ExperimentConfig& config, std::size_t threads = 0);

/// summary.csv, attributions.csv, errors.csv, distribution.csv, skipped.csv
/// and config.json under `dir` (created if missing).
void WriteResults(const ExperimentResult& result, const std::filesystem::path& dir);

/// Quartiles (q25, median, q75) with linear interpolation.
std::vector<double> Quartiles(std::vector<double> v);

}  // namespace manifoldshap
