#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "manifoldshap/values.hpp"

namespace manifoldshap {

CesSurrogate::CesSurrogate(Dataset rows, std::vector<double> targets,
                           std::vector<std::uint64_t> masks, std::size_t k_min)
    : rows_(std::move(rows)), targets_(std::move(targets)), masks_(std::move(masks)),
      k_min_(std::max<std::size_t>(k_min, 1)) {
  if (targets_.size() != rows_.rows() || masks_.size() != rows_.rows()) {
    throw std::invalid_argument("CesSurrogate: inconsistent training pairs");
  }
  const std::size_t d = rows_.cols();
  // Per-feature spread over unmasked entries only.
  scale_.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < rows_.rows(); ++i) {
      if (!((masks_[i] >> j) & 1u)) continue;
      const double v = rows_.at(i, j);
      s += v;
      s2 += v * v;
      ++n;
    }
    if (n > 1) {
      const double var = (s2 - s * s / static_cast<double>(n)) / static_cast<double>(n - 1);
      if (var > 0.0) scale_[j] = std::sqrt(var);
    }
  }
  for (std::size_t i = 0; i < masks_.size(); ++i) by_mask_[masks_[i]].push_back(i);
}

ValueEstimate CesSurrogate::Predict(const Coalition& coalition, std::span<const double> x) const {
  const std::size_t d = dim();
  if (coalition.dim() != d || x.size() != d) {
    throw std::invalid_argument("CesSurrogate: dimension mismatch");
  }
  const std::uint64_t q = coalition.mask();
  const auto members = coalition.members();
  std::vector<std::size_t> candidates;
  for (const auto& [mask, idx] : by_mask_) {
    if ((q & ~mask) == 0) candidates.insert(candidates.end(), idx.begin(), idx.end());
  }
  // Map iteration order is unspecified; sort so ties resolve identically.
  std::sort(candidates.begin(), candidates.end());
  if (candidates.empty()) {
    throw std::runtime_error("CesSurrogate: no training pair covers coalition " +
                             coalition.ToBitString() + "; increase n_coalition_draws");
  }
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(candidates.size());
  for (auto i : candidates) {
    auto r = rows_.row(i);
    double s = 0.0;
    for (auto j : members) {
      const double z = (x[j] - r[j]) / scale_[j];
      s += z * z;
    }
    dist.emplace_back(s, i);
  }
  const auto n = dist.size();
  auto k = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  k = std::min(n, std::max(k, k_min_));
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  const double radius = dist[k - 1].first;
  // Everything tied with the k-th neighbour votes (all pairs when S is empty).
  double sum = 0.0, sum2 = 0.0;
  std::size_t used = 0;
  for (const auto& [s, i] : dist) {
    if (s > radius) continue;
    sum += targets_[i];
    sum2 += targets_[i] * targets_[i];
    ++used;
  }
  const double mean = sum / static_cast<double>(used);
  const double var =
      used > 1 ? std::max(0.0, (sum2 - sum * mean) / static_cast<double>(used - 1)) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(used)), used};
}

CesSurrogate FitCesSurrogate(const Model& f, const Dataset& data, std::size_t n_coalition_draws,
                             RngStream& rng, std::size_t k_min) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (n < 10) throw std::invalid_argument("FitCesSurrogate: need at least 10 rows");
  if (d > 64) throw std::invalid_argument("FitCesSurrogate: at most 64 features supported");
  if (n_coalition_draws == 0) n_coalition_draws = 10 * n;
  std::vector<double> fx(n);
  for (std::size_t i = 0; i < n; ++i) fx[i] = f(data.row(i));

  std::vector<double> values;
  values.reserve(2 * n_coalition_draws * d);
  std::vector<double> targets;
  std::vector<std::uint64_t> masks;
  std::vector<std::size_t> others(d > 0 ? d - 1 : 0);
  auto emit = [&](std::size_t row, std::uint64_t mask) {
    auto r = data.row(row);
    for (std::size_t j = 0; j < d; ++j)
      values.push_back(((mask >> j) & 1u) ? r[j] : CesSurrogate::kMaskCode);
    targets.push_back(fx[row]);
    masks.push_back(mask);
  };
  for (std::size_t t = 0; t < n_coalition_draws; ++t) {
    const std::size_t row = rng.index(n);
    const std::size_t i = rng.index(d);
    // P(S) = w(|S|, d): |S| uniform on 0..d-1, then a uniform subset of that
    // size from the other d-1 features.
    const std::size_t size = rng.index(d);
    std::size_t c = 0;
    for (std::size_t j = 0; j < d; ++j)
      if (j != i) others[c++] = j;
    std::uint64_t mask = 0;
    for (std::size_t s = 0; s < size; ++s) {
      std::swap(others[s], others[s + rng.index(d - 1 - s)]);
      mask |= std::uint64_t{1} << others[s];
    }
    emit(row, mask);
    emit(row, mask | (std::uint64_t{1} << i));
  }
  const std::size_t pairs = masks.size();
  return CesSurrogate(Dataset(pairs, d, std::move(values), data.feature_names()),
                      std::move(targets), std::move(masks), k_min);
}

}  // namespace manifoldshap
