#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace manifoldshap {

/// Deterministic random stream addressed by (seed, path). Two streams with the
/// same seed and path produce the same draws; children are derived by
/// appending to the path, so the split never depends on worker count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::vector<std::uint64_t> path = {});

  RngStream child(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return std::generate_canonical<double, 53>(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  bool bernoulli(double q) { return uniform() < q; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// SplitMix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

}  // namespace manifoldshap
