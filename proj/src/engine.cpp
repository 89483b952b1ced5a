#include "manifoldshap/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace manifoldshap {

EvalCache::EvalCache(std::size_t d) : d_(d) {
  if (d > 30) throw std::invalid_argument("EvalCache: too many features to enumerate");
  values_.resize(std::size_t{1} << d);
  filled_.assign(std::size_t{1} << d, false);
}

void EvalCache::Put(std::uint64_t mask, ValueEstimate v) {
  if (!filled_[mask]) ++count_;
  filled_[mask] = true;
  values_[mask] = v;
}

namespace {

std::vector<double> WeightsBySize(std::size_t d) {
  std::vector<double> w(d);
  for (std::size_t s = 0; s < d; ++s) w[s] = ShapleyWeight(s, d);
  return w;
}

/// Pairwise (cascade) summation keeps the rounding independent of how the
/// terms were produced.
double PairwiseSum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return PairwiseSum(v.subspan(0, h)) + PairwiseSum(v.subspan(h));
}

void FillShapley(Attribution& out, std::size_t d,
                 const std::function<double(std::uint64_t)>& v,
                 const std::function<double(std::uint64_t)>* se) {
  const auto w = WeightsBySize(d);
  const std::uint64_t full = (d == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << d) - 1);
  out.phi.assign(d, 0.0);
  std::vector<double> var(d, 0.0);
  std::vector<double> terms;
  terms.reserve(std::size_t{1} << (d - 1));
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    terms.clear();
    for (std::uint64_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcountll(s));
      terms.push_back(w[size] * (v(s | bit) - v(s)));
      if (se) {
        const double a = (*se)(s | bit), b = (*se)(s);
        var[i] += w[size] * w[size] * (a * a + b * b);
      }
    }
    out.phi[i] = PairwiseSum(terms);
  }
  out.value_empty = v(0);
  out.value_full = v(full);
  if (se) {
    std::vector<double> s(d);
    for (std::size_t i = 0; i < d; ++i) s[i] = std::sqrt(var[i]);
    out.std_errors = std::move(s);
  }
}

}  // namespace

Attribution ExactShapley(const ValueFunction& vf, std::span<const double> x,
                         const RngStream& base, const ExactOptions& options, EvalCache* cache) {
  const std::size_t d = vf.dim();
  if (d == 0) throw std::invalid_argument("ExactShapley: no features");
  if (d > options.max_dim) {
    throw std::invalid_argument("ExactShapley: d = " + std::to_string(d) +
                                " exceeds the enumeration guard " +
                                std::to_string(options.max_dim) +
                                "; use the permutation engine");
  }
  if (x.size() != d) throw std::invalid_argument("ExactShapley: point dimension mismatch");
  vf.CheckPoint(x);
  EvalCache local(d);
  EvalCache& c = cache ? *cache : local;
  if (c.dim() != d) throw std::invalid_argument("ExactShapley: cache dimension mismatch");
  const std::uint64_t count = std::uint64_t{1} << d;
  std::size_t samples = 0;
  for (std::uint64_t s = 0; s < count; ++s) {
    if (!c.Has(s)) {
      RngStream rng = base;
      c.Put(s, vf.Evaluate(Coalition::FromMask(s, d), x, rng));
    }
    samples += c.Get(s).n_samples;
  }
  Attribution out;
  std::function<double(std::uint64_t)> v = [&](std::uint64_t s) { return c.Get(s).value; };
  std::function<double(std::uint64_t)> se = [&](std::uint64_t s) { return c.Get(s).std_error; };
  FillShapley(out, d, v, &se);
  out.n_samples = samples;
  return out;
}

Attribution ExactShapleyFromTable(std::span<const double> v_by_mask, std::size_t d) {
  if (d == 0 || d > 30 || v_by_mask.size() != (std::size_t{1} << d)) {
    throw std::invalid_argument("ExactShapleyFromTable: need 2^d values");
  }
  Attribution out;
  std::function<double(std::uint64_t)> v = [&](std::uint64_t s) { return v_by_mask[s]; };
  FillShapley(out, d, v, nullptr);
  return out;
}

namespace {

std::vector<std::size_t> RandomPermutation(std::size_t d, RngStream& rng) {
  std::vector<std::size_t> p(d);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t t = 0; t + 1 < d; ++t) std::swap(p[t], p[t + rng.index(d - t)]);
  return p;
}

/// Mean and standard error of per-permutation (or per-pair) contributions.
void Summarize(const std::vector<std::vector<double>>& contrib, Attribution& out) {
  const std::size_t d = out.phi.size();
  const auto n = static_cast<double>(contrib.size());
  std::vector<double> se(d, 0.0);
  std::vector<double> col(contrib.size());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < contrib.size(); ++k) col[k] = contrib[k][i];
    const double mean = PairwiseSum(col) / n;
    double ss = 0.0;
    for (double c : col) ss += (c - mean) * (c - mean);
    out.phi[i] = mean;
    se[i] = contrib.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  }
  out.std_errors = std::move(se);
}

}  // namespace

Attribution PermutationShapley(const ValueFunction& vf, std::span<const double> x,
                               const RngStream& base, const PermutationOptions& options) {
  const std::size_t d = vf.dim();
  const std::size_t m = options.permutations;
  if (m == 0) throw std::invalid_argument("PermutationShapley: need at least one permutation");
  if (x.size() != d) throw std::invalid_argument("PermutationShapley: point dimension mismatch");
  vf.CheckPoint(x);
  std::vector<std::vector<double>> contrib(m, std::vector<double>(d, 0.0));
  std::vector<double> empty(m), full(m);
  std::size_t samples = 0;
  std::vector<std::size_t> perm;
  for (std::size_t k = 0; k < m; ++k) {
    const RngStream stream = base.child(k);
    if (options.antithetic && (k % 2 == 1)) {
      std::reverse(perm.begin(), perm.end());
    } else {
      RngStream prng = base.child(options.antithetic ? k / 2 : k).child(0);
      perm = RandomPermutation(d, prng);
    }
    const RngStream vstream = stream.child(1);
    Coalition s(d);
    RngStream r0 = vstream;
    auto prev = vf.Evaluate(s, x, r0);
    empty[k] = prev.value;
    samples += prev.n_samples;
    for (auto i : perm) {
      s.insert(i);
      RngStream r = vstream;
      const auto cur = vf.Evaluate(s, x, r);
      samples += cur.n_samples;
      contrib[k][i] = cur.value - prev.value;
      prev = cur;
    }
    full[k] = prev.value;
  }
  Attribution out;
  out.phi.assign(d, 0.0);
  if (options.antithetic && m >= 2) {
    std::vector<std::vector<double>> pairs;
    for (std::size_t k = 0; k + 1 < m; k += 2) {
      std::vector<double> avg(d);
      for (std::size_t i = 0; i < d; ++i) avg[i] = 0.5 * (contrib[k][i] + contrib[k + 1][i]);
      pairs.push_back(std::move(avg));
    }
    if (m % 2) pairs.push_back(contrib.back());
    Summarize(pairs, out);
  } else {
    Summarize(contrib, out);
  }
  out.value_empty = PairwiseSum(empty) / static_cast<double>(m);
  out.value_full = PairwiseSum(full) / static_cast<double>(m);
  out.n_samples = samples;
  return out;
}

namespace {

class AcceptedDraw {
 public:
  AcceptedDraw(const Manifold& manifold, const CoalitionSampler& sampler,
               std::span<const double> x, std::size_t max_attempts)
      : manifold_(manifold), sampler_(sampler), x_(x), max_attempts_(max_attempts),
        buf_(x.size()) {}

  /// f at one draw of X | do(X_S = x_S), X in Z.
  double operator()(const Model& f, const Coalition& s, RngStream& rng) {
    if (s.is_full()) return f(x_);
    for (std::size_t a = 1; a <= max_attempts_; ++a) {
      sampler_.Sample(s, x_, rng, buf_);
      ++draws;
      if (manifold_.Contains(buf_)) return f(buf_);
    }
    throw AcceptanceFailure(s.ToBitString(), max_attempts_);
  }

  std::size_t draws = 0;

 private:
  const Manifold& manifold_;
  const CoalitionSampler& sampler_;
  std::span<const double> x_;
  std::size_t max_attempts_;
  std::vector<double> buf_;
};

}  // namespace

Attribution ManifoldPermutationShapley(const Model& f, const Manifold& manifold,
                                       const CoalitionSampler& sampler,
                                       std::span<const double> x, const RngStream& base,
                                       const ManifoldPermutationOptions& options) {
  const std::size_t d = sampler.dim();
  const std::size_t m = options.permutations;
  if (m == 0) throw std::invalid_argument("ManifoldPermutationShapley: need at least one permutation");
  if (x.size() != d || manifold.dim() != d) {
    throw std::invalid_argument("ManifoldPermutationShapley: dimension mismatch");
  }
  if (!manifold.Contains(x)) {
    throw OffManifoldPoint("point lies outside the restriction set; ManifoldShap is undefined there");
  }
  AcceptedDraw draw(manifold, sampler, x, options.max_attempts);
  std::vector<std::vector<double>> contrib(m, std::vector<double>(d, 0.0));
  std::vector<double> empty(m);
  for (std::size_t k = 0; k < m; ++k) {
    const RngStream stream = base.child(k);
    RngStream prng = stream.child(0);
    const auto perm = RandomPermutation(d, prng);
    if (!options.literal) {
      const RngStream vstream = stream.child(1);
      Coalition s(d);
      RngStream r0 = vstream;
      double prev = draw(f, s, r0);
      empty[k] = prev;
      for (auto i : perm) {
        s.insert(i);
        RngStream r = vstream;
        const double cur = draw(f, s, r);
        contrib[k][i] = cur - prev;
        prev = cur;
      }
      continue;
    }
    // Literal form: for each feature, fresh accepted draws for S + {i} and S.
    Coalition s(d);
    for (std::size_t pos = 0; pos < d; ++pos) {
      const std::size_t i = perm[pos];
      RngStream r = stream.child(2 + i);
      const Coalition with = s.with(i);
      const double a = draw(f, with, r);
      const double b = draw(f, s, r);
      contrib[k][i] = a - b;
      if (pos == 0) empty[k] = b;
      s = with;
    }
  }
  Attribution out;
  out.phi.assign(d, 0.0);
  Summarize(contrib, out);
  out.value_empty = PairwiseSum(empty) / static_cast<double>(m);
  out.value_full = f(x);
  out.n_samples = draw.draws;
  return out;
}

}  // namespace manifoldshap
