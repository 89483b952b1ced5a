#include "manifoldshap/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace manifoldshap {

Dataset::Dataset(std::size_t n, std::size_t d, std::vector<double> values,
                 std::vector<std::string> names,
                 std::optional<std::vector<double>> target)
    : n_(n), d_(d), values_(std::move(values)), names_(std::move(names)),
      target_(std::move(target)) {
  if (values_.size() != n_ * d_) {
    throw std::invalid_argument("Dataset: value count does not match n*d");
  }
  if (names_.empty()) {
    names_.reserve(d_);
    for (std::size_t j = 0; j < d_; ++j) names_.push_back("x" + std::to_string(j + 1));
  }
  if (names_.size() != d_) {
    throw std::invalid_argument("Dataset: expected " + std::to_string(d_) +
                                " feature names, got " +
                                std::to_string(names_.size()));
  }
  std::unordered_set<std::string> seen(names_.begin(), names_.end());
  if (seen.size() != names_.size()) {
    throw std::invalid_argument("Dataset: feature names must be unique");
  }
  if (target_ && target_->size() != n_) {
    throw std::invalid_argument("Dataset: target length does not match rows");
  }
}

Dataset Dataset::FromRows(const std::vector<Instance>& rows,
                          std::vector<std::string> names) {
  if (rows.empty()) throw std::invalid_argument("Dataset: no rows");
  const std::size_t d = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw std::invalid_argument("Dataset: ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Dataset(rows.size(), d, std::move(values), std::move(names));
}

std::vector<double> Dataset::ColumnMeans() const {
  std::vector<double> mean(d_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < d_; ++j) mean[j] += at(i, j);
  for (auto& m : mean) m /= static_cast<double>(std::max<std::size_t>(n_, 1));
  return mean;
}

std::vector<double> Dataset::ColumnStdDevs() const {
  const auto mean = ColumnMeans();
  std::vector<double> var(d_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < d_; ++j) {
      const double c = at(i, j) - mean[j];
      var[j] += c * c;
    }
  for (auto& v : var) v = std::sqrt(v / static_cast<double>(n_ > 1 ? n_ - 1 : 1));
  return var;
}

std::vector<double> Dataset::ColumnMedians() const {
  std::vector<double> med(d_, 0.0);
  std::vector<double> col(n_);
  for (std::size_t j = 0; j < d_; ++j) {
    for (std::size_t i = 0; i < n_; ++i) col[i] = at(i, j);
    std::sort(col.begin(), col.end());
    med[j] = n_ % 2 ? col[n_ / 2] : 0.5 * (col[n_ / 2 - 1] + col[n_ / 2]);
  }
  return med;
}

Dataset Dataset::Slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, n_);
  if (begin > end) begin = end;
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(begin * d_),
                        values_.begin() + static_cast<std::ptrdiff_t>(end * d_));
  std::optional<std::vector<double>> t;
  if (target_) {
    t.emplace(target_->begin() + static_cast<std::ptrdiff_t>(begin),
              target_->begin() + static_cast<std::ptrdiff_t>(end));
  }
  return Dataset(end - begin, d_, std::move(v), names_, std::move(t));
}

Dataset Dataset::Select(std::span<const std::size_t> indices) const {
  std::vector<double> v;
  v.reserve(indices.size() * d_);
  std::optional<std::vector<double>> t;
  if (target_) t.emplace();
  for (std::size_t i : indices) {
    auto r = row(i);
    v.insert(v.end(), r.begin(), r.end());
    if (t) t->push_back((*target_)[i]);
  }
  return Dataset(indices.size(), d_, std::move(v), names_, std::move(t));
}

Coalition::Coalition(std::size_t d) : d_(d), words_((d + 63) / 64, 0) {}

Coalition Coalition::FromMask(std::uint64_t mask, std::size_t d) {
  Coalition c(d);
  if (d == 0) return c;
  if (d < 64) mask &= (std::uint64_t{1} << d) - 1;
  c.words_[0] = mask;
  return c;
}

Coalition Coalition::Full(std::size_t d) { return Coalition(d).complement(); }

Coalition Coalition::Of(std::size_t d, std::initializer_list<std::size_t> members) {
  Coalition c(d);
  for (auto i : members) {
    if (i >= d) throw std::out_of_range("Coalition: member out of range");
    c.insert(i);
  }
  return c;
}

Coalition Coalition::with(std::size_t i) const {
  Coalition c = *this;
  c.insert(i);
  return c;
}

Coalition Coalition::without(std::size_t i) const {
  Coalition c = *this;
  c.erase(i);
  return c;
}

Coalition Coalition::complement() const {
  Coalition c = *this;
  for (auto& w : c.words_) w = ~w;
  if (d_ % 64 && !c.words_.empty()) {
    c.words_.back() &= (std::uint64_t{1} << (d_ % 64)) - 1;
  }
  return c;
}

std::size_t Coalition::size() const {
  std::size_t s = 0;
  for (auto w : words_) s += static_cast<std::size_t>(__builtin_popcountll(w));
  return s;
}

bool Coalition::is_subset_of(const Coalition& other) const {
  for (std::size_t k = 0; k < words_.size(); ++k)
    if (words_[k] & ~other.words_[k]) return false;
  return true;
}

std::vector<std::size_t> Coalition::members() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d_; ++i)
    if (contains(i)) out.push_back(i);
  return out;
}

std::string Coalition::ToBitString() const {
  std::string s(d_, '0');
  for (std::size_t i = 0; i < d_; ++i)
    if (contains(i)) s[i] = '1';
  return s;
}

AcceptanceFailure::AcceptanceFailure(const std::string& coalition,
                                     std::size_t attempts,
                                     const std::string& context)
    : std::runtime_error((context.empty() ? "" : context + ": ") +
                         "no interventional sample accepted inside the "
                         "restriction set for coalition " +
                         coalition + " after " + std::to_string(attempts) +
                         " draws"),
      coalition_(coalition),
      attempts_(attempts) {}

double ShapleyWeight(std::size_t s_size, std::size_t d) {
  if (d == 0 || s_size >= d) {
    throw std::domain_error("ShapleyWeight: need 0 <= |S| <= d-1");
  }
  if (d <= 20) {
    // Exact in double for d <= 20 (20! < 2^63).
    auto fact = [](std::size_t k) {
      double f = 1.0;
      for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
      return f;
    };
    return fact(s_size) * fact(d - s_size - 1) / fact(d);
  }
  const double lw = std::lgamma(static_cast<double>(s_size) + 1.0) +
                    std::lgamma(static_cast<double>(d - s_size)) -
                    std::lgamma(static_cast<double>(d) + 1.0);
  return std::exp(lw);
}

std::size_t TopFeature(std::span<const double> phi) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < phi.size(); ++i)
    if (std::abs(phi[i]) > std::abs(phi[best])) best = i;
  return best;
}

std::size_t TopFeature(const Attribution& attr) { return TopFeature(attr.phi); }

Attribution NormalizeL1(const Attribution& attr) {
  Attribution out = attr;
  double total = 0.0;
  for (double p : attr.phi) total += std::abs(p);
  if (total == 0.0) {
    out.degenerate = true;
    return out;
  }
  for (double& p : out.phi) p /= total;
  if (out.std_errors) {
    for (double& s : *out.std_errors) s /= total;
  }
  out.degenerate = false;
  return out;
}

}  // namespace manifoldshap
