#pragma once

// Domain types shared by every module: instances, datasets, coalitions,
// attributions and the black-box model interface.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace manifoldshap {

/// A point x in R^d.
using Instance = std::vector<double>;

/// Black-box model f: R^d -> R. Classifiers return 0.0 / 1.0.
/// Must be deterministic and defined everywhere, including off-manifold.
using Model = std::function<double(std::span<const double>)>;

/// Row-major n x d feature matrix with column names and an optional target.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t n, std::size_t d, std::vector<double> values,
          std::vector<std::string> names = {},
          std::optional<std::vector<double>> target = std::nullopt);

  /// Builds from rows; all rows must share one dimension.
  static Dataset FromRows(const std::vector<Instance>& rows,
                          std::vector<std::string> names = {});

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  bool empty() const { return n_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * d_, d_};
  }
  std::span<double> mutable_row(std::size_t i) {
    return {values_.data() + i * d_, d_};
  }
  double at(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::optional<std::vector<double>>& target() const { return target_; }

  /// Column-wise sample mean and (unbiased) standard deviation.
  std::vector<double> ColumnMeans() const;
  std::vector<double> ColumnStdDevs() const;
  std::vector<double> ColumnMedians() const;

  /// Rows [begin, end) as a new dataset (target sliced along).
  Dataset Slice(std::size_t begin, std::size_t end) const;
  /// Rows selected by index.
  Dataset Select(std::span<const std::size_t> indices) const;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
  std::vector<std::string> names_;
  std::optional<std::vector<double>> target_;
};

/// Subset S of the feature indices {0, ..., d-1}.
class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(std::size_t d);
  /// Low `d` bits of `mask` (d <= 64).
  static Coalition FromMask(std::uint64_t mask, std::size_t d);
  static Coalition Full(std::size_t d);
  static Coalition Of(std::size_t d, std::initializer_list<std::size_t> members);

  std::size_t dim() const { return d_; }
  bool contains(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void insert(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void erase(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  Coalition with(std::size_t i) const;
  Coalition without(std::size_t i) const;
  Coalition complement() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  bool is_full() const { return size() == d_; }
  bool is_subset_of(const Coalition& other) const;
  std::vector<std::size_t> members() const;

  /// Bit mask of the first 64 features; exact for d <= 64.
  std::uint64_t mask() const { return words_.empty() ? 0 : words_[0]; }
  /// "0110"-style string, feature 0 first.
  std::string ToBitString() const;

  bool operator==(const Coalition& other) const = default;

 private:
  std::size_t d_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Per-feature Shapley values plus the two endpoint values of v.
struct Attribution {
  std::vector<double> phi;
  double value_empty = 0.0;
  double value_full = 0.0;
  std::size_t n_samples = 0;
  std::optional<std::vector<double>> std_errors;
  /// Set by NormalizeL1 when sum |phi| == 0.
  bool degenerate = false;
};

/// Raised when a value function cannot draw any sample inside the
/// restriction set (P(X in Z | do(X_S = x_S)) is effectively zero).
class AcceptanceFailure : public std::runtime_error {
 public:
  AcceptanceFailure(const std::string& coalition, std::size_t attempts,
                    const std::string& context = "");
  const std::string& coalition() const { return coalition_; }
  std::size_t attempts() const { return attempts_; }

 private:
  std::string coalition_;
  std::size_t attempts_;
};

/// x outside the restriction set where the value function requires x in Z.
class OffManifoldPoint : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// |S|!(d-|S|-1)!/d!. Uses log-factorials above d = 20.
double ShapleyWeight(std::size_t s_size, std::size_t d);

/// argmax_i |phi_i|, lowest index on ties.
std::size_t TopFeature(const Attribution& attr);
std::size_t TopFeature(std::span<const double> phi);

/// phi / sum |phi|; flags `degenerate` and leaves phi unchanged when the sum
/// is zero.
Attribution NormalizeL1(const Attribution& attr);

}  // namespace manifoldshap
