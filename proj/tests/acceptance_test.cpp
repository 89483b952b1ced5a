// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails. argv[1], when given, is the CLI binary used by
// criterion 10.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "manifoldshap/discrete.hpp"
#include "manifoldshap/engine.hpp"
#include "manifoldshap/experiments.hpp"
#include "manifoldshap/manifold.hpp"
#include "manifoldshap/robustness.hpp"
#include "manifoldshap/scm.hpp"
#include "manifoldshap/values.hpp"

namespace ms = manifoldshap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[miss] " << what << "; ";
    }
  }
  void Note(const std::string& what) { detail << what << "; "; }
};

std::string Fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

double Top(const ms::SettingResult& s, const std::string& method, std::size_t feature) {
  return s.method(method).TopPercentages(s.feature_names.size())[feature];
}

/// Normalized phi_j over the evaluated points of one method.
std::vector<double> NormalizedPhi(const ms::SettingResult& s, const std::string& method, std::size_t j) {
  std::vector<double> out;
  for (const auto& p : s.method(method).points) {
    if (p.attribution) out.push_back(ms::NormalizeL1(*p.attribution).phi[j]);
  }
  return out;
}

double MedianAbs(std::vector<double> v) {
  for (auto& x : v) x = std::abs(x);
  return ms::Quartiles(std::move(v))[1];
}

// 1 ---------------------------------------------------------------------------

/// v(S) for the confounded binary model by enumerating (Z, X1, X2):
/// Z ~ Bern(1/2), X1 = Z, X2 = Z with probability p else 1 - Z, f = X1.
double BruteForceValue(double p, std::uint64_t mask, const ms::Instance& x, bool interventional) {
  double num = 0.0, den = 0.0;
  for (int z = 0; z <= 1; ++z)
    for (int x1 = 0; x1 <= 1; ++x1)
      for (int x2 = 0; x2 <= 1; ++x2) {
        const double pz = 0.5;
        const double p1 = x1 == z ? 1.0 : 0.0;
        const double p2 = x2 == z ? p : 1.0 - p;
        const bool fix1 = mask & 1, fix2 = mask & 2;
        if (interventional) {
          // Truncated factorization: drop the factors of intervened nodes.
          if ((fix1 && x1 != x[0]) || (fix2 && x2 != x[1])) continue;
          const double w = pz * (fix1 ? 1.0 : p1) * (fix2 ? 1.0 : p2);
          num += w * x1;
          den += w;
        } else {
          if ((fix1 && x1 != x[0]) || (fix2 && x2 != x[1])) continue;
          const double w = pz * p1 * p2;
          num += w * x1;
          den += w;
        }
      }
  return num / den;
}

Outcome Criterion1() {
  Outcome o;
  double worst = 0.0;
  for (double p : {0.6, 0.9}) {
    auto joint = std::make_shared<const ms::DiscreteJoint>(ms::MakeConfoundedBinary(p));
    auto f = [](std::span<const double> x) { return x[0]; };
    ms::DiscreteValue is(f, joint, ms::DiscreteValue::Kind::kInterventional);
    ms::DiscreteValue ces(f, joint, ms::DiscreteValue::Kind::kConditional);
    for (double a : {0.0, 1.0})
      for (double b : {0.0, 1.0}) {
        const ms::Instance x{a, b};
        auto phi_is = ms::ExactShapley(is, x, ms::RngStream(1)).phi;
        auto phi_ces = ms::ExactShapley(ces, x, ms::RngStream(1)).phi;
        const double formula = 0.5 * (p * (b == 1.0) + (1 - p) * (b == 0.0) - 0.5);
        o.Require(std::abs(phi_is[1]) <= 1e-9, "IS phi2 = 0 at p=" + Fmt(p));
        o.Require(std::abs(phi_ces[1] - formula) <= 1e-9, "CES phi2 formula at p=" + Fmt(p));
        for (bool itv : {true, false}) {
          std::vector<double> t(4);
          for (std::uint64_t m = 0; m < 4; ++m) t[m] = BruteForceValue(p, m, x, itv);
          auto oracle = ms::ExactShapleyFromTable(t, 2).phi;
          const auto& got = itv ? phi_is : phi_ces;
          for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(oracle[i] - got[i]));
        }
      }
  }
  o.Require(worst <= 1e-9, "brute-force enumeration agreement");
  o.Note("max |engine - enumeration| = " + Fmt(worst));
  return o;
}

// 2, 3 ------------------------------------------------------------------------

std::vector<ms::ExperimentResult> dag_runs;

Outcome Criterion2() {
  Outcome o;
  double ces_mean = 0.0, is5_mean = 0.0;
  for (auto seed : kSeeds) {
    auto cfg = ms::ExperimentConfig::Defaults("synthetic_dag");
    cfg.seed = seed;
    dag_runs.push_back(ms::RunExperiment(cfg));
    const auto& r = dag_runs.back();
    const auto& s0 = r.setting("delta=0");
    const auto& s5 = r.setting("delta=5");
    const double gt = Top(s0, "gt-is", 0), man0 = Top(s0, "manifold", 1), ces0 = Top(s0, "ces-analytic", 1),
                 rjb0 = Top(s0, "rjb", 1);
    const double is5 = Top(s5, "is", 1), man5 = Top(s5, "manifold", 1), ces5 = Top(s5, "ces-analytic", 1),
                 rjb5 = Top(s5, "rjb", 1);
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    o.Require(gt == 100.0, tag + "gt-IS feature-1-top = 100%");
    o.Require(std::abs(man0 - 4) <= 10, tag + "MAN feature-2-top ~ 4% at delta 0");
    o.Require(ces0 > 30 - 10, tag + "CES feature-2-top > 30% at delta 0");
    o.Require(std::abs(rjb0 - 20) <= 10, tag + "RJB feature-2-top ~ 20% at delta 0");
    o.Require(is5 > 50 - 10, tag + "IS feature-2-top > 50% at delta 5");
    o.Require(std::abs(man5 - 10) <= 10, tag + "MAN feature-2-top ~ 10% at delta 5");
    o.Require(man5 < is5 && man5 < ces5 && man5 < rjb5, tag + "MAN strictly lowest at delta 5");
    ces_mean += ces0 / kSeeds.size();
    is5_mean += is5 / kSeeds.size();
    o.Note(tag + "d0 gt=" + Fmt(gt) + " man=" + Fmt(man0) + " ces=" + Fmt(ces0) + " rjb=" + Fmt(rjb0) +
           " | d5 is=" + Fmt(is5) + " man=" + Fmt(man5) + " ces=" + Fmt(ces5) + " rjb=" + Fmt(rjb5));
  }
  o.Require(ces_mean > 30, "3-seed mean CES feature-2-top > 30%");
  o.Require(is5_mean > 50, "3-seed mean IS feature-2-top > 50% at delta 5");
  o.Note("mean CES d0 = " + Fmt(ces_mean) + ", mean IS d5 = " + Fmt(is5_mean));
  return o;
}

bool SamePhi(const ms::MethodResult& a, const ms::MethodResult& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].attribution.has_value() != b.points[i].attribution.has_value()) return false;
    if (a.points[i].attribution && a.points[i].attribution->phi != b.points[i].attribution->phi) return false;
  }
  return true;
}

Outcome Criterion3() {
  Outcome o;
  if (dag_runs.empty()) {
    auto cfg = ms::ExperimentConfig::Defaults("synthetic_dag");
    cfg.seed = kSeeds[0];
    dag_runs.push_back(ms::RunExperiment(cfg));
  }
  for (const auto& r : dag_runs) {
    o.Require(SamePhi(r.setting("delta=0").method("manifold"), r.setting("delta=5").method("manifold")),
              "MAN g0 vs g5 bit-identical (seed " + std::to_string(r.config.seed) + ")");
  }
  for (auto seed : kSeeds) {
    auto cfg = ms::ExperimentConfig::Defaults("classification_perturbation");
    cfg.seed = seed;
    cfg.methods = {"manifold"};
    auto r = ms::RunExperiment(cfg);
    o.Require(SamePhi(r.setting("delta=0").method("manifold"), r.setting("delta=10").method("manifold")),
              "MAN classifier g0 vs g10 bit-identical (seed " + std::to_string(seed) + ")");
  }
  o.Note("bit-identity checked over " + std::to_string(2 * kSeeds.size()) + " runs x 500 points");

  // K-family under IS at S = {}.
  auto scm = ms::MakeDagScm(0.85);
  ms::RngStream cal_rng(11);
  auto cal = ms::SampleObservational(*scm, 10000, cal_rng);
  std::shared_ptr<const ms::Manifold> z = ms::MakeMassManifold(scm->oracle_density, cal, 0.9);
  ms::RngStream ref_rng(12);
  const double p_out = 1.0 - ms::InFraction(*z, ms::SampleObservational(*scm, 100000, ref_rng));
  auto sampler = ms::MakeInterventionalSampler(scm, ms::Interventional::kMarginal);
  const std::size_t m = 4000;
  auto f = scm->GroundTruthModel();
  std::vector<double> diffs;
  for (double K : {1.0, 10.0, 100.0}) {
    ms::PerturbationSpec spec;
    spec.K = K;
    ms::RobustnessInputs in{[&](ms::Model g) { return std::make_shared<ms::SampledValue>(g, sampler, m, "is"); },
                            f, ms::BuildPerturbed(f, z, spec), {0.3, 0.4}, {ms::Coalition(2)}, 13};
    auto rep = ms::CheckSubspaceRobustness(in, *z, cal);
    const double d = rep.rows[0].absdiff;
    const double se = K * std::sqrt(p_out * (1 - p_out) / double(m));
    o.Require(std::abs(d - K * p_out) <= 3 * se, "IS |dv({})| = K P(X not in Z) within 3 SE at K=" + Fmt(K));
    diffs.push_back(d);
  }
  o.Require(std::abs(diffs[1] / diffs[0] / 10 - 1) <= 0.2 && std::abs(diffs[2] / diffs[0] / 100 - 1) <= 0.2,
            "linear scaling in K within 20%");
  o.Note("P(out) = " + Fmt(p_out) + ", |dv| at K=1,10,100: " + Fmt(diffs[0]) + ", " + Fmt(diffs[1]) + ", " +
         Fmt(diffs[2]));
  return o;
}

// 4 ---------------------------------------------------------------------------

Outcome Criterion4() {
  Outcome o;
  auto scm = ms::MakeDagScm(0.85);
  auto density = scm->oracle_density;
  auto sampler = ms::MakeInterventionalSampler(scm, ms::Interventional::kMarginal);
  auto f = scm->GroundTruthModel();
  ms::RngStream probe_rng(21);
  const auto probes = ms::SampleObservational(*scm, 2000, probe_rng);
  for (auto [eps, delta] : {std::pair{1e-2, 1e-3}, std::pair{1e-1, 1e-2}}) {
    auto z = std::make_shared<ms::DensityManifold>(density, eps);
    ms::RngStream rng(22, {static_cast<std::uint64_t>(std::round(1 / eps))});
    double worst_ratio = 0.0, worst = 0.0;
    std::size_t violations = 0;
    for (int k = 0; k < 100; ++k) {
      // Direction c(x) = cos(w.x + b) keeps |f2 - f1| p <= delta everywhere.
      const double w0 = rng.normal(0, 2), w1 = rng.normal(0, 2), b = rng.uniform() * 2 * std::numbers::pi;
      ms::PerturbationSpec spec;
      spec.kind = ms::PerturbationKind::kDensityScaled;
      spec.delta = delta;
      spec.density = density;
      spec.direction = [=](std::span<const double> x) { return std::cos(w0 * x[0] + w1 * x[1] + b); };
      ms::Instance x(2);
      do {
        x = {rng.normal(), rng.normal()};
        x[1] = 0.85 * x[0] + std::sqrt(1 - 0.85 * 0.85) * x[1];
      } while (!z->Contains(x));
      ms::RobustnessInputs in{[&](ms::Model g) { return std::make_shared<ms::ManifoldValue>(g, z, sampler, 500); },
                              f, ms::BuildPerturbed(f, nullptr, spec), x, {}, 100 + std::uint64_t(k)};
      auto rep = ms::CheckTRobustness(in, *density, delta, eps, probes);
      if (!rep.pass) ++violations;
      o.Require(rep.delta_hat <= delta * (1 + 1e-12), "constructed perturbation has density-weighted gap <= delta");
      worst = std::max(worst, rep.MaxAbsDiff());
      worst_ratio = std::max(worst_ratio, rep.MaxAbsDiff() / (delta / eps));
    }
    o.Require(violations == 0, "no |dv| above delta/eps + 3 SE at eps=" + Fmt(eps));
    o.Note("eps=" + Fmt(eps) + " delta=" + Fmt(delta) + ": max |dv| = " + Fmt(worst) + " (" + Fmt(worst_ratio) +
           " of delta/eps), violations " + std::to_string(violations) + "/100");
  }
  return o;
}

// 5 ---------------------------------------------------------------------------

Outcome Criterion5() {
  Outcome o;
  for (auto seed : kSeeds) {
    auto cfg = ms::ExperimentConfig::Defaults("rjb_counterexample");
    cfg.seed = seed;
    auto r = ms::RunExperiment(cfg);
    const auto& s = r.settings.front();
    const double rjb = Top(s, "rjb", 1), man = Top(s, "manifold", 0);
    double dev = 0.0;
    auto p1 = NormalizedPhi(s, "gt-is", 0), p2 = NormalizedPhi(s, "gt-is", 1);
    for (std::size_t i = 0; i < p1.size(); ++i)
      dev = std::max({dev, std::abs(std::abs(p1[i]) - 1), std::abs(p2[i])});
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    o.Require(rjb == 100.0, tag + "RJB feature-2-top = 100%");
    o.Require(dev <= 0.02, tag + "gt-IS normalized (|phi1|, |phi2|) = (1, 0) +- 0.02");
    o.Require(man >= 95.0, tag + "MAN feature-1-top >= 95%");
    o.Note(tag + "rjb f2-top=" + Fmt(rjb) + " gt-is max dev=" + Fmt(dev) + " man f1-top=" + Fmt(man));
  }
  return o;
}

// 6 ---------------------------------------------------------------------------

Outcome Criterion6() {
  Outcome o;
  ms::RngStream rng(31);
  double eff = 0.0, dummy = 0.0, lin = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    // Random Gaussian SCM and random smooth models.
    const std::size_t d = 2 + rng.index(5);
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(d, d);
    Eigen::MatrixXd cov = a * a.transpose() + 0.3 * Eigen::MatrixXd::Identity(d, d);
    auto scm = ms::MakeGaussianScm(Eigen::VectorXd::Zero(d), cov);
    const std::size_t j = rng.index(d);
    std::vector<double> c1(d), c2(d);
    for (auto& c : c1) c = rng.normal();
    for (auto& c : c2) c = rng.normal();
    c1[j] = 0.0;
    c2[j] = 0.0;
    auto f1 = [=](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += c1[i] * std::sin(x[i]) + c1[i] * c2[i] * x[i] * x[(i + 1) % x.size()] * (i != j && (i + 1) % x.size() != j);
      return s;
    };
    auto f2 = [=](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += c2[i] * std::tanh(x[i]);
      return s;
    };
    auto mix = [=](std::span<const double> x) { return 1.5 * f1(x) - 0.5 * f2(x); };
    const bool marginal = rep % 2;
    auto sem = marginal ? ms::Interventional::kMarginal : ms::Interventional::kScm;
    ms::Instance x(d);
    for (auto& v : x) v = rng.normal();
    const ms::RngStream base(32, {std::uint64_t(rep)});
    auto v1 = ms::MakeIsValue(f1, scm, 64, sem);
    auto v2 = ms::MakeIsValue(f2, scm, 64, sem);
    auto vm = ms::MakeIsValue(mix, scm, 64, sem);
    ms::EvalCache cache(d);
    auto a1 = ms::ExactShapley(*v1, x, base, {}, &cache);
    auto a2 = ms::ExactShapley(*v2, x, base);
    auto am = ms::ExactShapley(*vm, x, base);
    double sum = 0.0;
    for (double p : a1.phi) sum += p;
    eff = std::max(eff, std::abs(sum - (a1.value_full - a1.value_empty)));
    for (std::size_t i = 0; i < d; ++i) lin = std::max(lin, std::abs(am.phi[i] - (1.5 * a1.phi[i] - 0.5 * a2.phi[i])));
    // Dummy only holds exactly when fixing x_j cannot move other features.
    if (marginal) dummy = std::max({dummy, std::abs(a1.phi[j]), std::abs(a2.phi[j])});
  }
  o.Require(eff <= 1e-9, "efficiency to 1e-9");
  o.Require(dummy <= 1e-12, "dummy feature phi = 0 to 1e-12");
  o.Require(lin <= 1e-9, "linearity to 1e-9");
  o.Note("max efficiency gap " + Fmt(eff) + ", dummy " + Fmt(dummy) + ", linearity " + Fmt(lin));

  // Permutation vs exact on random d=4 discrete instances.
  std::size_t checks = 0, within = 0;
  double worst_z = 0.0;
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    ms::RngStream r(33, {inst});
    ms::Pmf pmf;
    double total = 0.0;
    for (int k = 0; k < 16; ++k) {
      pmf.outcomes.push_back({double(k & 1), double(k >> 1 & 1), double(k >> 2 & 1), double(k >> 3 & 1)});
      pmf.probs.push_back(0.05 + r.uniform());
      total += pmf.probs.back();
    }
    for (auto& q : pmf.probs) q /= total;
    std::vector<double> table(16);
    for (auto& t : table) t = r.normal(0, 2);
    auto f = [table](std::span<const double> x) {
      return table[std::size_t(x[0] > .5) | std::size_t(x[1] > .5) << 1 | std::size_t(x[2] > .5) << 2 |
                   std::size_t(x[3] > .5) << 3];
    };
    auto joint = std::make_shared<const ms::DiscreteJoint>(pmf);
    for (auto kind : {ms::DiscreteValue::Kind::kInterventional, ms::DiscreteValue::Kind::kConditional}) {
      ms::DiscreteValue v(f, joint, kind);
      ms::Instance x{double(r.index(2)), double(r.index(2)), double(r.index(2)), double(r.index(2))};
      auto exact = ms::ExactShapley(v, x, ms::RngStream(1));
      auto perm = ms::PermutationShapley(v, x, ms::RngStream(34, {inst}), {2000});
      for (std::size_t i = 0; i < 4; ++i) {
        const double se = (*perm.std_errors)[i];
        const double diff = std::abs(perm.phi[i] - exact.phi[i]);
        ++checks;
        if (diff <= 3 * se + 1e-12) ++within;
        if (se > 0) worst_z = std::max(worst_z, diff / se);
      }
    }
  }
  o.Require(within == checks, "permutation engine within 3 SE of exact on d=4 discrete instances");
  o.Note("permutation vs exact: " + std::to_string(within) + "/" + std::to_string(checks) +
         " within 3 SE, max |z| = " + Fmt(worst_z));
  return o;
}

// 7 ---------------------------------------------------------------------------

Outcome Criterion7() {
  Outcome o;
  auto density = std::make_shared<ms::GaussianDensity>(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  auto scm = ms::MakeCorrGaussian2d(0.0);
  ms::RngStream cal_rng(41), test_rng(42);
  const auto cal = ms::SampleObservational(*scm, 10000, cal_rng);
  const auto test = ms::SampleObservational(*scm, 10000, test_rng);
  for (double alpha : {0.8, 0.9, 0.99}) {
    auto z = ms::MakeMassManifold(density, cal, alpha);
    const double mass = ms::InFraction(*z, test);
    const double expected = (1 - alpha) / (2 * std::numbers::pi);
    const double rel = std::abs(z->epsilon() - expected) / expected;
    o.Require(std::abs(mass - alpha) <= 0.02, "empirical mass within 0.02 at alpha=" + Fmt(alpha));
    o.Require(rel <= 0.15, "threshold within 15% of (1-alpha)/(2 pi) at alpha=" + Fmt(alpha));
    o.Note("alpha=" + Fmt(alpha) + ": mass " + Fmt(mass, 4) + ", eps " + Fmt(z->epsilon()) + " vs " + Fmt(expected) +
           " (" + Fmt(100 * rel, 2) + "%)");
  }

  // Minimal measure: on a grid of equal-area cells, the superlevel set of the
  // cell density reaching mass alpha uses the fewest cells of any set that does.
  const int side = 4;
  const double lo = -2.0, h = 1.0;
  std::vector<double> cell_p, cell_mass;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b) {
      std::vector<double> c{lo + h * (a + 0.5) + 0.13 * b, lo + h * (b + 0.5) - 0.07 * a};
      cell_p.push_back((*density)(c));
    }
  double tot = 0.0;
  for (double p : cell_p) tot += p;
  for (double p : cell_p) cell_mass.push_back(p / tot);
  const int n = side * side;
  int grid_checks = 0, grid_ok = 0;
  for (double alpha : {0.5, 0.8, 0.9, 0.99}) {
    int best = n + 1;
    for (std::uint32_t s = 0; s < (1u << n); ++s) {
      double m = 0.0;
      for (int k = 0; k < n; ++k)
        if (s >> k & 1) m += cell_mass[k];
      if (m >= alpha - 1e-12) best = std::min(best, __builtin_popcount(s));
    }
    // Largest threshold whose strict superlevel set still reaches alpha.
    std::vector<double> levels(cell_p);
    std::sort(levels.begin(), levels.end());
    int chosen = n + 1;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
      ms::FunctionDensity cell_density(1, [&](std::span<const double> k) { return cell_p[std::size_t(k[0])]; });
      ms::DensityManifold z(std::make_shared<ms::FunctionDensity>(cell_density), std::nextafter(*it, 0.0));
      double m = 0.0;
      int count = 0;
      for (int k = 0; k < n; ++k) {
        std::vector<double> idx{double(k)};
        if (z.Contains(idx)) {
          m += cell_mass[k];
          ++count;
        }
      }
      if (m >= alpha - 1e-12) {
        chosen = count;
        break;
      }
    }
    ++grid_checks;
    if (chosen == best) ++grid_ok;
  }
  o.Require(grid_ok == grid_checks, "density superlevel set attains the brute-force minimal cell count");
  o.Note("grid brute force over 2^16 subsets: " + std::to_string(grid_ok) + "/" + std::to_string(grid_checks) +
         " levels minimal");
  return o;
}

// 8 ---------------------------------------------------------------------------

Outcome Criterion8() {
  Outcome o;
  for (auto seed : kSeeds) {
    auto cfg = ms::ExperimentConfig::Defaults("correlation_sweep");
    cfg.seed = seed;
    auto r = ms::RunExperiment(cfg);
    for (const char* label : {"rho=0.33", "rho=0.66"}) {
      const auto& s = r.setting(label);
      const double man = MedianAbs(NormalizedPhi(s, "manifold", 1));
      const double ces = MedianAbs(NormalizedPhi(s, "ces-analytic", 1));
      o.Require(man < ces, "seed " + std::to_string(seed) + " " + label + ": median |phi2| MAN < CES");
      o.Note("seed " + std::to_string(seed) + " " + label + " median |phi2| MAN " + Fmt(man) + " CES " + Fmt(ces));
    }
  }
  for (auto seed : kSeeds) {
    auto cfg = ms::ExperimentConfig::Defaults("manifold_size_sweep");
    cfg.seed = seed;
    cfg.methods = {"is", "manifold"};
    auto r = ms::RunExperiment(cfg);
    // eps = 0: the manifold value equals IS per point within 3 SE.
    const auto& s1 = r.setting("alpha=1");
    const auto& man = s1.method("manifold");
    const auto& is = s1.method("is");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < man.points.size(); ++i) {
      const auto& a = *man.points[i].attribution;
      const auto& b = *is.points[i].attribution;
      bool ok = true;
      for (std::size_t j = 0; j < a.phi.size(); ++j) {
        const double se = std::hypot((*a.std_errors)[j], (*b.std_errors)[j]);
        ok = ok && std::abs(a.phi[j] - b.phi[j]) <= 3 * se + 1e-12;
      }
      agree += ok;
    }
    o.Require(agree == man.points.size(), "seed " + std::to_string(seed) + ": MAN = IS within 3 SE at eps 0");
    std::vector<double> spreads;
    for (const auto& s : r.settings) {
      auto q = ms::Quartiles(NormalizedPhi(s, "manifold", 1));
      spreads.push_back(q[2] - q[0]);
    }
    bool mono = true;
    for (std::size_t k = 1; k < spreads.size(); ++k) mono = mono && spreads[k] >= spreads[k - 1];
    o.Require(mono, "seed " + std::to_string(seed) + ": MAN phi2 spread nondecreasing in eps");
    std::string sp;
    for (double v : spreads) sp += (sp.empty() ? "" : ", ") + Fmt(v);
    o.Note("seed " + std::to_string(seed) + " eps=0 agreement " + std::to_string(agree) + "/" +
           std::to_string(man.points.size()) + ", IQR(phi2) by alpha 1,.9,.85,.8: " + sp);
  }
  return o;
}

// 9 ---------------------------------------------------------------------------

Outcome Criterion9() {
  Outcome o;
  for (auto seed : kSeeds) {
    auto cfg = ms::ExperimentConfig::Defaults("dimension_scaling");
    cfg.seed = seed;
    cfg.dims = {10};
    cfg.methods = {"is", "manifold"};
    auto r = ms::RunExperiment(cfg);
    const auto& s = r.settings.front();
    const double man = Top(s, "manifold", 0), is = Top(s, "is", 0);
    const std::string tag = "seed " + std::to_string(seed);
    o.Require(man >= is, tag + ": MAN feature-1-top >= IS");
    o.Require(man >= 60, tag + ": MAN feature-1-top >= 60%");
    o.Note(tag + " d=10: MAN " + Fmt(man) + "%, IS " + Fmt(is) + "%");
  }
  return o;
}

// 10 --------------------------------------------------------------------------

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Runs the CLI; returns the exit status and stdout bytes.
std::pair<int, std::string> Shell(const std::string& exe, const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = "\"" + exe + "\" " + args + " > \"" + stdout_file.string() + "\" 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, Slurp(stdout_file)};
}

Outcome Criterion10(const std::string& exe) {
  Outcome o;
  if (exe.empty()) {
    o.Require(false, "CLI binary path not supplied");
    return o;
  }
  const fs::path dir = fs::temp_directory_path() / "manifoldshap_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    ms::RngStream rng(51);
    auto d = ms::SampleObservational(*ms::MakeDagScm(0.85), 2000, rng);
    std::ofstream f(dir / "data.csv");
    f << "X1,X2\n";
    f.precision(17);
    for (std::size_t i = 0; i < d.rows(); ++i) f << d.at(i, 0) << ',' << d.at(i, 1) << '\n';
  }
  {
    std::ofstream(dir / "exp.json") << R"({"n_points": 60, "m": 200})";
  }
  const std::string data = (dir / "data.csv").string();
  struct Cmd {
    std::string name;
    std::string args;  // {out} is replaced per run
    std::vector<std::string> files;
  };
  const std::vector<Cmd> cmds{
      {"attribute", "attribute --data " + data + " --model scm:dag_rho --method manifold --seed 7 --max-points 60 --out {out}",
       {"attributions.csv"}},
      {"attribute-permutation", "attribute --data " + data +
           " --model scm:dag_rho --method is --engine permutation --permutations 200 --samples 20 --seed 7 --max-points 30 --out {out}",
       {"attributions.csv"}},
      {"manifold", "manifold --data " + data + " --kind mass --alpha 0.95 --seed 7 --out {out}/z.txt", {"z.txt"}},
      {"experiment", "experiment run synthetic_dag --seed 1 --config " + (dir / "exp.json").string() + " --out {out}",
       {"summary.csv", "attributions.csv", "errors.csv", "distribution.csv", "skipped.csv", "config.json"}},
      {"robustness", "robustness --family off-manifold-K --K 100 --seed 7 --samples 300 --out {out}/rep.csv", {"rep.csv"}},
  };
  for (const auto& c : cmds) {
    std::vector<std::string> outputs;
    bool ok = true;
    int run = 0;
    for (const char* threads : {"1", "4", "1"}) {
      const fs::path out = dir / (c.name + "_" + std::to_string(run++));
      fs::create_directories(out);
      std::string args = c.args;
      for (std::size_t p; (p = args.find("{out}")) != std::string::npos;) args.replace(p, 5, out.string());
      auto [rc, stdout_text] = Shell(exe, args + " --threads " + threads, out / "stdout.txt");
      ok = ok && rc == 0;
      // The summary line names the output directory; compare it with that removed.
      for (std::size_t p; (p = stdout_text.find(out.string())) != std::string::npos;) stdout_text.replace(p, out.string().size(), "OUT");
      std::string blob = stdout_text;
      for (const auto& f : c.files) blob += "\n--" + f + "\n" + Slurp(out / f);
      outputs.push_back(blob);
    }
    const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2];
    o.Require(ok, c.name + ": exit 0");
    o.Require(same, c.name + ": byte-identical across runs and --threads 1/4");
    o.Note(c.name + (same ? " identical" : " differs") + " (" + std::to_string(outputs[0].size()) + " bytes)");
  }
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string exe = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"discrete oracle exactness", Criterion1},
      {"synthetic DAG reproduction", Criterion2},
      {"perturbation invariance", Criterion3},
      {"density-manifold robustness bound", Criterion4},
      {"RJB counterexample", Criterion5},
      {"engine identities", Criterion6},
      {"manifold calibration", Criterion7},
      {"correlation and manifold-size sweeps", Criterion8},
      {"dimension scaling at d=10", Criterion9},
      {"CLI determinism", [&] { return Criterion10(exe); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << ", "
              << Fmt(secs, 3) << " s): " << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
