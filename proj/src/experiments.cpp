#include "manifoldshap/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "manifoldshap/csv.hpp"
#include "manifoldshap/engine.hpp"
#include "manifoldshap/parallel.hpp"
#include "manifoldshap/robustness.hpp"
#include "manifoldshap/scm.hpp"
#include "manifoldshap/values.hpp"

namespace manifoldshap {

namespace {

// Stream tags; every random quantity hangs off (seed, tag, ...).
constexpr std::uint64_t kPoints = 1;
constexpr std::uint64_t kValues = 2;
constexpr std::uint64_t kCalibration = 3;
constexpr std::uint64_t kReference = 4;
constexpr std::uint64_t kBackground = 5;
constexpr std::uint64_t kSurrogate = 6;
constexpr std::uint64_t kOod = 7;

constexpr const char* kGroundTruth = "gt-is";

struct Setting {
  std::string label;
  std::string parameter;
  double value = 0.0;
  std::shared_ptr<const Scm> scm;
  Model base;
  Model model;
  std::shared_ptr<const Manifold> manifold;
  std::shared_ptr<const Density> density;
  bool filter_points = true;
};

std::string Label(const std::string& parameter, double value) {
  return parameter + "=" + FormatDouble(value);
}

/// Restriction set per the manifold spec, fitted on draws from the SCM.
std::pair<std::shared_ptr<const Manifold>, std::shared_ptr<const Density>> BuildManifold(
    const ExperimentConfig& cfg, const Scm& scm, double alpha) {
  const auto& spec = cfg.manifold;
  const std::size_t d = scm.num_features();
  const std::string& kind = spec.kind;
  std::shared_ptr<const Density> oracle = scm.oracle_density;
  if (kind == "full") return {std::make_shared<FullSupport>(d), oracle};
  if (kind == "oracle-density" || kind == "oracle-mass") {
    if (!oracle) throw ConfigError("scm has no oracle density; use a KDE manifold kind");
    if (kind == "oracle-density") return {std::make_shared<DensityManifold>(oracle, spec.epsilon), oracle};
    RngStream rng(cfg.seed, {kCalibration});
    const Dataset cal = SampleObservational(scm, spec.calibration, rng);
    return {MakeMassManifold(oracle, cal, alpha), oracle};
  }
  RngStream ref_rng(cfg.seed, {kReference});
  const Dataset ref = SampleObservational(scm, spec.reference, ref_rng);
  if (kind == "ood") {
    RngStream rng(cfg.seed, {kOod});
    return {std::make_shared<OodClassifier>(FitOodClassifier(ref, spec.ood, rng)), oracle};
  }
  auto kde = std::make_shared<KdeEstimator>(FitKde(ref));
  if (kind == "density") return {std::make_shared<DensityManifold>(kde, spec.epsilon), kde};
  RngStream rng(cfg.seed, {kCalibration});
  const Dataset cal = SampleObservational(scm, spec.calibration, rng);
  return {MakeMassManifold(kde, cal, alpha), kde};
}

std::vector<Setting> BuildSettings(const ExperimentConfig& cfg) {
  std::vector<Setting> out;
  const std::string& name = cfg.experiment;
  auto finish = [&](Setting s, double alpha) {
    auto [z, dens] = BuildManifold(cfg, *s.scm, alpha);
    s.manifold = z;
    s.density = dens;
    if (!s.model) s.model = s.base;
    return s;
  };
  if (name == "synthetic_dag" || name == "classification_perturbation") {
    const bool cls = name == "classification_perturbation";
    auto scm = cls ? MakeCorrGaussian2d(cfg.rho) : MakeDagScm(cfg.rho);
    Setting proto;
    proto.scm = scm;
    proto.base = scm->GroundTruthModel();
    proto = finish(proto, cfg.manifold.alpha);
    for (double delta : cfg.deltas) {
      Setting s = proto;
      s.parameter = "delta";
      s.value = delta;
      s.label = Label("delta", delta);
      PerturbationSpec spec;
      spec.kind = cls ? PerturbationKind::kClassifier : PerturbationKind::kRegression;
      spec.delta = delta;
      spec.feature = 1;
      s.model = BuildPerturbed(s.base, s.manifold, spec);
      out.push_back(std::move(s));
    }
  } else if (name == "correlation_sweep") {
    for (double rho : cfg.rhos) {
      Setting s;
      s.scm = MakeDagScm(rho);
      s.base = s.scm->GroundTruthModel();
      s.parameter = "rho";
      s.value = rho;
      s.label = Label("rho", rho);
      out.push_back(finish(std::move(s), cfg.manifold.alpha));
    }
  } else if (name == "manifold_size_sweep") {
    auto scm = MakeSineScm();
    for (double alpha : cfg.alphas) {
      Setting s;
      s.scm = scm;
      s.base = scm->GroundTruthModel();
      s.parameter = "alpha";
      s.value = alpha;
      s.label = Label("alpha", alpha);
      s.filter_points = false;  // one point set shared across thresholds
      out.push_back(finish(std::move(s), alpha));
    }
  } else if (name == "rjb_counterexample") {
    Setting s;
    s.scm = MakeIndepGaussian2d();
    s.base = s.scm->GroundTruthModel();
    s.parameter = "alpha";
    s.value = cfg.manifold.alpha;
    s.label = Label("alpha", cfg.manifold.alpha);
    out.push_back(finish(std::move(s), cfg.manifold.alpha));
  } else if (name == "dimension_scaling") {
    for (auto d : cfg.dims) {
      for (double delta : cfg.deltas) {
        Setting s;
        s.scm = MakeEquicorrelated(d, cfg.rho);
        s.base = s.scm->GroundTruthModel();
        s = finish(std::move(s), cfg.manifold.alpha);
        s.parameter = "d";
        s.value = static_cast<double>(d);
        s.label = cfg.deltas.size() > 1 ? Label("d", static_cast<double>(d)) + ";" + Label("delta", delta)
                                        : Label("d", static_cast<double>(d));
        PerturbationSpec spec;
        spec.kind = PerturbationKind::kRegression;
        spec.delta = delta;
        spec.feature = 1;
        s.model = BuildPerturbed(s.base, s.manifold, spec);
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

std::vector<Instance> DrawPoints(const ExperimentConfig& cfg, const Setting& s) {
  RngStream rng(cfg.seed, {kPoints});
  const std::size_t d = s.scm->num_features();
  std::vector<Instance> pts;
  Instance row(d);
  const Coalition none(d);
  const std::size_t cap = 1000 * cfg.n_points + 1000;
  for (std::size_t t = 0; t < cap && pts.size() < cfg.n_points; ++t) {
    s.scm->SampleRow(none, row, rng, row);
    if (!s.filter_points || s.manifold->Contains(row)) pts.push_back(row);
  }
  if (pts.size() < cfg.n_points) {
    throw AcceptanceFailure("evaluation points", cap, s.label);
  }
  return pts;
}

/// Per-setting backends shared by every point.
struct Backends {
  std::shared_ptr<const CoalitionSampler> interventional;
  std::shared_ptr<const CoalitionSampler> marginal;
  std::shared_ptr<const Dataset> background;
  std::shared_ptr<const CesSurrogate> surrogate;
  std::shared_ptr<const FullSupport> full;
};

std::shared_ptr<ValueFunction> MakeValue(const std::string& method, const Model& f,
                                         const Setting& s, const Backends& b,
                                         const ExperimentConfig& cfg) {
  if (method == "is" || method == kGroundTruth) {
    return std::make_shared<SampledValue>(f, b.interventional, cfg.m, "is");
  }
  if (method == "ms") return std::make_shared<SampledValue>(f, std::make_shared<RowMarginalSampler>(b.background), cfg.m, "ms");
  if (method == "manifold") {
    return std::make_shared<ManifoldValue>(
        f, s.manifold, b.interventional, cfg.m,
        cfg.estimator == "ratio" ? ManifoldEstimator::kRatio : ManifoldEstimator::kRejection);
  }
  if (method == "ces-analytic") {
    if (!s.scm->gaussian_joint) {
      throw ConfigError("ces-analytic needs a Gaussian SCM; use ces-surrogate for " + cfg.experiment);
    }
    return std::make_shared<CesAnalyticValue>(f, *s.scm->gaussian_joint, cfg.m);
  }
  if (method == "ces-surrogate") return std::make_shared<CesSurrogateValue>(b.surrogate, f);
  if (!s.density) throw ConfigError(method + " needs a density backend");
  if (method == "jb") return std::make_shared<JbValue>(f, s.density, b.background->ColumnMedians());
  if (method == "rjb") return std::make_shared<RjbValue>(f, s.density, b.marginal, cfg.m);
  throw ConfigError("unknown method '" + method + "'");
}

Attribution Attribute(const std::string& method, const ValueFunction& vf, const Model& f,
                      const Setting& s, const Backends& b, const ExperimentConfig& cfg,
                      const Instance& x, const RngStream& stream) {
  const std::size_t d = x.size();
  std::string engine = cfg.engine;
  if (engine == "auto") engine = d <= 12 ? "exact" : "manifold-permutation";
  if (engine == "exact") return ExactShapley(vf, x, stream);
  const bool rejection_family = method == "manifold" || method == "is" || method == kGroundTruth;
  if (engine == "manifold-permutation" && rejection_family) {
    ManifoldPermutationOptions opt;
    opt.permutations = cfg.permutations;
    opt.max_attempts = cfg.max_attempts;
    opt.literal = cfg.literal;
    const Manifold& z = method == "manifold" ? *s.manifold : static_cast<const Manifold&>(*b.full);
    return ManifoldPermutationShapley(f, z, *b.interventional, x, stream, opt);
  }
  PermutationOptions opt;
  opt.permutations = cfg.permutations;
  return PermutationShapley(vf, x, stream, opt);
}

SettingResult RunSetting(const ExperimentConfig& cfg, const Setting& s, std::size_t threads) {
  SettingResult out;
  out.label = s.label;
  out.parameter = s.parameter;
  out.value = s.value;
  out.feature_names = s.scm->feature_names();
  out.points = DrawPoints(cfg, s);

  Backends b;
  const auto semantics = cfg.interventional == "scm" ? Interventional::kScm : Interventional::kMarginal;
  b.interventional = MakeInterventionalSampler(s.scm, semantics);
  b.marginal = MakeInterventionalSampler(s.scm, Interventional::kMarginal);
  b.full = std::make_shared<FullSupport>(s.scm->num_features());
  RngStream bg_rng(cfg.seed, {kBackground});
  b.background = std::make_shared<Dataset>(SampleObservational(*s.scm, cfg.background, bg_rng));
  std::vector<std::string> methods = {kGroundTruth};
  methods.insert(methods.end(), cfg.methods.begin(), cfg.methods.end());
  if (std::find(methods.begin(), methods.end(), "ces-surrogate") != methods.end()) {
    RngStream rng(cfg.seed, {kSurrogate});
    b.surrogate = std::make_shared<CesSurrogate>(
        FitCesSurrogate(s.model, *b.background, cfg.surrogate_draws, rng));
  }
  std::vector<std::shared_ptr<ValueFunction>> vfs;
  for (const auto& m : methods) vfs.push_back(MakeValue(m, m == kGroundTruth ? s.base : s.model, s, b, cfg));

  const std::size_t n = out.points.size();
  for (const auto& m : methods) out.methods.push_back({m, std::vector<PointResult>(n)});
  ParallelFor(n, threads, [&](std::size_t i) {
    const RngStream stream(cfg.seed, {kValues, i});
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const Model& f = methods[k] == kGroundTruth ? s.base : s.model;
      auto& slot = out.methods[k].points[i];
      try {
        slot.attribution = Attribute(methods[k], *vfs[k], f, s, b, cfg, out.points[i], stream);
      } catch (const OffManifoldPoint&) {
        slot.status = "off-manifold";
      } catch (const AcceptanceFailure& e) {
        if (cfg.on_acceptance_failure != "skip") {
          throw AcceptanceFailure(e.coalition(), e.attempts(),
                                  s.label + ", point " + std::to_string(i) + ", method " + methods[k]);
        }
        slot.status = "acceptance-failure";
      }
    }
  });
  return out;
}

}  // namespace

std::vector<double> MethodResult::TopPercentages(std::size_t d) const {
  std::vector<double> counts(d + 1, 0.0);
  std::size_t n = 0;
  for (const auto& p : points) {
    if (!p.attribution) continue;
    ++n;
    const auto norm = NormalizeL1(*p.attribution);
    if (norm.degenerate) {
      counts[d] += 1.0;
    } else {
      counts[TopFeature(norm)] += 1.0;
    }
  }
  if (n > 0)
    for (double& c : counts) c = 100.0 * c / static_cast<double>(n);
  return counts;
}

std::size_t MethodResult::evaluated() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.attribution.has_value();
  return n;
}

const MethodResult& SettingResult::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return m;
  throw std::out_of_range("no method '" + name + "' in setting " + label);
}

const SettingResult& ExperimentResult::setting(const std::string& label) const {
  for (const auto& s : settings)
    if (s.label == label) return s;
  throw std::out_of_range("no setting '" + label + "'");
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, std::size_t threads) {
  cfg.Validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config = cfg;
  for (const auto& s : BuildSettings(cfg)) result.settings.push_back(RunSetting(cfg, s, threads));
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<double> Quartiles(std::vector<double> v) {
  if (v.empty()) return {NAN, NAN, NAN};
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {q(0.25), q(0.5), q(0.75)};
}

namespace {

std::ofstream Open(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void Close(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void WriteResults(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  const auto summary_path = dir / "summary.csv";
  const auto attr_path = dir / "attributions.csv";
  const auto err_path = dir / "errors.csv";
  const auto dist_path = dir / "distribution.csv";
  const auto skip_path = dir / "skipped.csv";
  const auto cfg_path = dir / "config.json";
  auto summary = Open(summary_path);
  auto attr = Open(attr_path);
  auto err = Open(err_path);
  auto dist = Open(dist_path);
  auto skip = Open(skip_path);
  summary << "setting,method,feature,top_pct\n";
  attr << "setting,point,method,feature,phi,phi_normalized\n";
  err << "setting,point,method,feature,error\n";
  dist << "setting,method,feature,q25,median,q75\n";
  skip << "setting,point,method,status\n";

  for (const auto& s : result.settings) {
    const std::size_t d = s.feature_names.size();
    const auto& gt = s.method(kGroundTruth);
    for (const auto& m : s.methods) {
      const auto pct = m.TopPercentages(d);
      for (std::size_t j = 0; j <= d; ++j) {
        summary << s.label << ',' << m.method << ',' << (j < d ? s.feature_names[j] : "none")
                << ',' << FormatDouble(pct[j]) << '\n';
      }
      std::vector<std::vector<double>> cols(d);
      for (std::size_t i = 0; i < m.points.size(); ++i) {
        const auto& p = m.points[i];
        if (!p.attribution) {
          skip << s.label << ',' << i << ',' << m.method << ',' << p.status << '\n';
          continue;
        }
        const auto norm = NormalizeL1(*p.attribution);
        const auto& g = gt.points[i].attribution;
        const auto gnorm = g ? std::optional<Attribution>(NormalizeL1(*g)) : std::nullopt;
        for (std::size_t j = 0; j < d; ++j) {
          attr << s.label << ',' << i << ',' << m.method << ',' << s.feature_names[j] << ','
               << FormatDouble(p.attribution->phi[j]) << ',' << FormatDouble(norm.phi[j]) << '\n';
          cols[j].push_back(norm.phi[j]);
          if (gnorm && m.method != kGroundTruth) {
            err << s.label << ',' << i << ',' << m.method << ',' << s.feature_names[j] << ','
                << FormatDouble(norm.phi[j] - gnorm->phi[j]) << '\n';
          }
        }
      }
      for (std::size_t j = 0; j < d; ++j) {
        const auto q = Quartiles(cols[j]);
        dist << s.label << ',' << m.method << ',' << s.feature_names[j] << ',' << FormatDouble(q[0])
             << ',' << FormatDouble(q[1]) << ',' << FormatDouble(q[2]) << '\n';
      }
    }
  }
  Close(summary, summary_path);
  Close(attr, attr_path);
  Close(err, err_path);
  Close(dist, dist_path);
  Close(skip, skip_path);
  auto cfg = Open(cfg_path);
  cfg << result.config.ToJson();
  Close(cfg, cfg_path);
}

}  // namespace manifoldshap
