#include "manifoldshap/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "manifoldshap/csv.hpp"
#include "manifoldshap/engine.hpp"
#include "manifoldshap/experiments.hpp"
#include "manifoldshap/manifold.hpp"
#include "manifoldshap/parallel.hpp"
#include "manifoldshap/robustness.hpp"
#include "manifoldshap/scm.hpp"
#include "manifoldshap/values.hpp"

namespace manifoldshap {

Model MakeTabulatedModel(Dataset grid) {
  if (!grid.target()) throw std::invalid_argument("tabulated model needs an output column");
  auto g = std::make_shared<const Dataset>(std::move(grid));
  return [g](std::span<const double> x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g->rows(); ++i) {
      auto r = g->row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) s += (x[j] - r[j]) * (x[j] - r[j]);
      if (s < best_d) {
        best_d = s;
        best = i;
      }
    }
    return (*g->target())[best];
  };
}

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Dataset LoadCsv(const std::string& path, bool has_target) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  return LoadDatasetCsv(path, has_target);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Flags from a JSON object, placed before the user's own flags so the
/// command line wins (last value taken).
std::vector<std::string> ConfigArgs(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else {
      throw ConfigError(path + ": key '" + key + "' must be a string, number or boolean");
    }
  }
  return args;
}

/// Deterministic split of row indices.
std::vector<std::size_t> Shuffled(std::size_t n, std::uint64_t seed, std::uint64_t tag) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  RngStream rng(seed, {tag});
  for (std::size_t t = 0; t + 1 < n; ++t) std::swap(idx[t], idx[t + rng.index(n - t)]);
  return idx;
}

struct ManifoldArgs {
  std::string kind = "mass";
  double alpha = 0.99;
  double epsilon = 0.0;
  std::string file;
  std::size_t ood_k = 5;
  std::size_t ood_perturbed = 1;
  double ood_fraction = 0.5;
  double ood_scale = 3.0;
};

void CheckAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("--alpha must lie in (0, 1], got " + FormatDouble(alpha));
  }
}

/// Fits the manifold on `data`: KDE reference and calibration halves are
/// disjoint.
std::shared_ptr<const Manifold> FitManifold(const Dataset& data, const ManifoldArgs& a,
                                            std::uint64_t seed) {
  if (!a.file.empty()) {
    if (!std::filesystem::exists(a.file)) throw IoError("no such file: " + a.file);
    return LoadManifold(a.file);
  }
  CheckAlpha(a.alpha);
  if (a.kind == "full") return std::make_shared<FullSupport>(data.cols());
  if (a.kind == "ood") {
    OodOptions opt{a.ood_perturbed, a.ood_fraction, a.ood_scale, a.ood_k};
    RngStream rng(seed, {7});
    return std::make_shared<OodClassifier>(FitOodClassifier(data, opt, rng));
  }
  if (a.kind == "density") {
    return std::make_shared<DensityManifold>(std::make_shared<KdeEstimator>(FitKde(data)), a.epsilon);
  }
  if (a.kind == "mass") {
    const auto idx = Shuffled(data.rows(), seed, 11);
    const std::size_t h = data.rows() / 2;
    std::vector<std::size_t> ref(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(h));
    std::vector<std::size_t> cal(idx.begin() + static_cast<std::ptrdiff_t>(h), idx.end());
    std::sort(ref.begin(), ref.end());
    std::sort(cal.begin(), cal.end());
    auto kde = std::make_shared<KdeEstimator>(FitKde(data.Select(ref)));
    return MakeMassManifold(kde, data.Select(cal), a.alpha);
  }
  throw ConfigError("unknown manifold kind '" + a.kind + "' (valid: mass, density, ood, full)");
}

void AddManifoldOptions(CLI::App* cmd, ManifoldArgs& a) {
  cmd->add_option("--manifold", a.kind, "mass | density | ood | full");
  cmd->add_option("--alpha", a.alpha, "target mass for kind=mass");
  cmd->add_option("--epsilon", a.epsilon, "density threshold for kind=density");
  cmd->add_option("--manifold-file", a.file, "load a fitted manifold instead of fitting");
  cmd->add_option("--ood-k", a.ood_k);
  cmd->add_option("--ood-perturbed", a.ood_perturbed);
  cmd->add_option("--ood-fraction", a.ood_fraction);
  cmd->add_option("--ood-scale", a.ood_scale);
}

struct AttributeArgs {
  std::string data;
  bool has_target = false;
  std::string model;
  std::string gate;
  std::string explain;
  std::size_t max_points = 100;
  std::string method = "manifold";
  std::string engine = "auto";
  std::string estimator = "rejection";
  std::size_t samples = 500;
  std::size_t permutations = 2000;
  double rho = 0.85;
  std::uint64_t seed = 0;
  std::string out = ".";
  ManifoldArgs manifold;
};

Model ResolveModel(const AttributeArgs& a, std::size_t d) {
  const auto colon = a.model.find(':');
  const std::string kind = a.model.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : a.model.substr(colon + 1);
  if (kind == "scm") {
    ScmParams p;
    p.rho = a.rho;
    p.d = d;
    auto scm = MakeScmByName(arg, p);
    if (scm->num_features() != d) {
      throw ConfigError("model " + a.model + " has " + std::to_string(scm->num_features()) +
                        " features, data has " + std::to_string(d));
    }
    return scm->GroundTruthModel();
  }
  if (kind == "table") {
    Dataset grid = LoadCsv(arg, true);
    if (grid.cols() != d) throw ConfigError("model table dimension differs from the data");
    return MakeTabulatedModel(std::move(grid));
  }
  throw ConfigError("--model must be scm:<name> or table:<path>, got '" + a.model + "'");
}

int CmdAttribute(const AttributeArgs& a, std::ostream& out, std::ostream& err) {
  if (!IsMethodName(a.method)) {
    std::string valid;
    for (const auto& m : MethodNames()) valid += (valid.empty() ? "" : ", ") + m;
    throw ConfigError("unknown method '" + a.method + "' (valid: " + valid + ")");
  }
  if (a.samples == 0 || a.permutations == 0) throw ConfigError("--samples and --permutations must be >= 1");
  if (a.estimator != "rejection" && a.estimator != "ratio") {
    throw ConfigError("--estimator must be rejection or ratio");
  }
  auto data = std::make_shared<const Dataset>(LoadCsv(a.data, a.has_target));
  const std::size_t d = data->cols();
  Model f = ResolveModel(a, d);
  auto z = FitManifold(*data, a.manifold, a.seed);
  if (z->dim() != d) throw ConfigError("manifold dimension differs from the data");
  if (!a.gate.empty()) {
    PerturbationSpec g;
    g.kind = PerturbationKind::kGate;
    const auto& names = data->feature_names();
    auto it = std::find(names.begin(), names.end(), a.gate);
    if (it == names.end()) throw ConfigError("--gate names unknown column '" + a.gate + "'");
    g.unrelated_column = static_cast<std::size_t>(it - names.begin());
    f = BuildPerturbed(f, z, g);
  }
  const Dataset points = a.explain.empty()
                             ? data->Slice(0, std::min(a.max_points, data->rows()))
                             : LoadCsv(a.explain, false);
  if (points.cols() != d) throw ConfigError("points to explain have the wrong dimension");

  auto sampler = std::make_shared<RowMarginalSampler>(data);
  std::shared_ptr<const Density> density;
  if (auto dm = std::dynamic_pointer_cast<const DensityManifold>(z)) density = dm->density();
  if (!density && (a.method == "jb" || a.method == "rjb")) {
    density = std::make_shared<KdeEstimator>(FitKde(*data));
  }
  std::shared_ptr<ValueFunction> vf;
  if (a.method == "ms" || a.method == "is") {
    vf = std::make_shared<SampledValue>(f, sampler, a.samples, a.method);
  } else if (a.method == "manifold") {
    vf = std::make_shared<ManifoldValue>(
        f, z, sampler, a.samples,
        a.estimator == "ratio" ? ManifoldEstimator::kRatio : ManifoldEstimator::kRejection);
  } else if (a.method == "ces-analytic") {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data->rows()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < data->rows(); ++i)
      for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data->at(i, j);
    const Eigen::VectorXd mu = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
    const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(std::max<std::size_t>(data->rows() - 1, 1));
    vf = std::make_shared<CesAnalyticValue>(f, GaussianDensity(mu, cov), a.samples);
  } else if (a.method == "ces-surrogate") {
    RngStream rng(a.seed, {6});
    vf = std::make_shared<CesSurrogateValue>(
        std::make_shared<CesSurrogate>(FitCesSurrogate(f, *data, 0, rng)), f);
  } else if (a.method == "jb") {
    vf = std::make_shared<JbValue>(f, density, data->ColumnMedians());
  } else {
    vf = std::make_shared<RjbValue>(f, density, sampler, a.samples);
  }

  std::string engine = a.engine;
  if (engine == "auto") engine = d <= 12 ? "exact" : (a.method == "manifold" ? "manifold-permutation" : "permutation");
  if (engine != "exact" && engine != "permutation" && engine != "manifold-permutation") {
    throw ConfigError("--engine must be auto, exact, permutation or manifold-permutation");
  }
  const std::size_t n = points.rows();
  std::vector<std::optional<Attribution>> res(n);
  std::vector<std::string> status(n, "ok");
  ParallelFor(n, 0, [&](std::size_t i) {
    const RngStream stream(a.seed, {2, i});
    const Instance x(points.row(i).begin(), points.row(i).end());
    try {
      if (engine == "exact") {
        res[i] = ExactShapley(*vf, x, stream);
      } else if (engine == "manifold-permutation" && (a.method == "manifold" || a.method == "is")) {
        ManifoldPermutationOptions opt;
        opt.permutations = a.permutations;
        const FullSupport full(d);
        const Manifold& zz = a.method == "manifold" ? *z : static_cast<const Manifold&>(full);
        res[i] = ManifoldPermutationShapley(f, zz, *sampler, x, stream, opt);
      } else {
        PermutationOptions opt;
        opt.permutations = a.permutations;
        res[i] = PermutationShapley(*vf, x, stream, opt);
      }
    } catch (const OffManifoldPoint&) {
      status[i] = "off-manifold";
    } catch (const AcceptanceFailure& e) {
      throw AcceptanceFailure(e.coalition(), e.attempts(), "row " + std::to_string(i));
    }
  });

  std::filesystem::create_directories(a.out);
  const auto path = std::filesystem::path(a.out) / "attributions.csv";
  std::ofstream csv(path);
  if (!csv) throw IoError("cannot write " + path.string());
  csv << "row,status,value_empty,value_full";
  for (const auto& name : points.feature_names()) csv << ",phi_" << name;
  csv << '\n';
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    csv << i << ',' << status[i];
    if (!res[i]) {
      ++skipped;
      csv << ",,";
      for (std::size_t j = 0; j < d; ++j) csv << ',';
      csv << '\n';
      continue;
    }
    csv << ',' << FormatDouble(res[i]->value_empty) << ',' << FormatDouble(res[i]->value_full);
    for (double p : res[i]->phi) csv << ',' << FormatDouble(p);
    csv << '\n';
  }
  csv.close();
  if (!csv) throw IoError("write failed for " + path.string());
  if (skipped) err << "warning: " << skipped << " point(s) outside the restriction set were skipped\n";
  out << "attribute: method=" << a.method << " engine=" << engine << " points=" << n
      << " skipped=" << skipped << " out=" << path.string() << '\n';
  return kExitOk;
}

struct ManifoldCmdArgs {
  std::string data;
  bool has_target = false;
  double holdout = 0.2;
  std::uint64_t seed = 0;
  std::string out;
  ManifoldArgs manifold;
};

int CmdManifold(const ManifoldCmdArgs& a, std::ostream& out, std::ostream&) {
  CheckAlpha(a.manifold.alpha);
  if (!(a.holdout > 0.0 && a.holdout < 1.0)) throw ConfigError("--holdout must lie in (0, 1)");
  const Dataset data = LoadCsv(a.data, a.has_target);
  const auto idx = Shuffled(data.rows(), a.seed, 12);
  const auto n_hold = static_cast<std::size_t>(std::round(a.holdout * static_cast<double>(data.rows())));
  if (n_hold == 0 || n_hold >= data.rows()) throw ConfigError("dataset too small for the holdout split");
  std::vector<std::size_t> hold(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> fit(idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
  std::sort(hold.begin(), hold.end());
  std::sort(fit.begin(), fit.end());
  ManifoldArgs m = a.manifold;
  m.file.clear();
  const auto z = FitManifold(data.Select(fit), m, a.seed);
  const double in_frac = InFraction(*z, data.Select(hold));
  if (!a.out.empty()) SaveManifold(*z, a.out);
  out << "manifold: kind=" << z->kind();
  if (auto dm = std::dynamic_pointer_cast<const DensityManifold>(z)) out << " epsilon=" << FormatDouble(dm->epsilon());
  out << " heldout_in_fraction=" << FormatDouble(in_frac) << " heldout=" << n_hold;
  if (!a.out.empty()) out << " out=" << a.out;
  out << '\n';
  return kExitOk;
}

struct ExperimentArgs {
  std::string name;
  std::string config;
  std::uint64_t seed = 0;
  std::string out = "results";
  std::string method;
  std::string engine;
  std::size_t samples = 0;
  std::size_t permutations = 0;
  double alpha = -1.0;
  double epsilon = -1.0;
  std::size_t n_points = 0;
};

int CmdExperimentRun(const ExperimentArgs& a, bool seed_given, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = a.config.empty() ? ExperimentConfig::Defaults(a.name)
                                          : ExperimentConfig::FromJson(ReadFile(a.config), a.name);
  if (seed_given) cfg.seed = a.seed;
  if (!a.method.empty()) cfg.methods = SplitList(a.method);
  if (!a.engine.empty()) cfg.engine = a.engine;
  if (a.samples) cfg.m = a.samples;
  if (a.permutations) cfg.permutations = a.permutations;
  if (a.n_points) cfg.n_points = a.n_points;
  if (a.alpha >= 0.0) cfg.manifold.alpha = a.alpha;
  if (a.epsilon >= 0.0) cfg.manifold.epsilon = a.epsilon;
  cfg.Validate();
  const auto result = RunExperiment(cfg, 0);
  WriteResults(result, a.out);
  err << "experiment " << cfg.experiment << " finished in " << result.runtime_seconds << " s\n";
  std::size_t skipped = 0;
  for (const auto& s : result.settings)
    for (const auto& m : s.methods) skipped += m.points.size() - m.evaluated();
  out << "experiment " << cfg.experiment << ": settings=" << result.settings.size()
      << " points=" << cfg.n_points << " skipped=" << skipped << " out=" << a.out << '\n';
  return kExitOk;
}

struct RobustnessArgs {
  std::string family = "off-manifold-K";
  std::string method = "manifold";
  std::string scm = "dag_rho";
  double rho = 0.85;
  double K = 1.0;
  double delta = 1e-3;
  double epsilon = 1e-2;
  double alpha = 1.0 - 1e-3;
  std::size_t samples = 500;
  std::size_t probes = 2000;
  std::string point;
  std::uint64_t seed = 0;
  std::string out = "robustness.csv";
};

int CmdRobustness(const RobustnessArgs& a, std::ostream& out, std::ostream&) {
  if (!IsMethodName(a.method) || a.method == "ces-surrogate") {
    throw ConfigError("--method must be one of ms, is, ces-analytic, jb, rjb, manifold");
  }
  if (a.samples == 0 || a.probes == 0) throw ConfigError("--samples and --probes must be >= 1");
  ScmParams params;
  params.rho = a.rho;
  std::shared_ptr<const Scm> scm = MakeScmByName(a.scm, params);
  const std::size_t d = scm->num_features();
  if (!scm->oracle_density) throw ConfigError("scm has no oracle density");
  const auto density = scm->oracle_density;
  RngStream cal_rng(a.seed, {3});
  const Dataset cal = SampleObservational(*scm, 10000, cal_rng);

  std::shared_ptr<const Manifold> z;
  Model f1 = scm->GroundTruthModel();
  Model f2;
  if (a.family == "off-manifold-K") {
    CheckAlpha(a.alpha);
    z = MakeMassManifold(density, cal, a.alpha);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::kAdditive;
    spec.K = a.K;
    f2 = BuildPerturbed(f1, z, spec);
  } else if (a.family == "density-scaled") {
    if (!(a.epsilon > 0.0)) throw ConfigError("--epsilon must be > 0 for density-scaled");
    z = std::make_shared<DensityManifold>(density, a.epsilon);
    PerturbationSpec spec;
    spec.kind = PerturbationKind::kDensityScaled;
    spec.delta = a.delta;
    spec.density = density;
    f2 = BuildPerturbed(f1, nullptr, spec);
  } else {
    throw ConfigError("--family must be off-manifold-K or density-scaled");
  }

  Instance x;
  if (!a.point.empty()) {
    for (const auto& v : SplitList(a.point)) x.push_back(std::stod(v));
    if (x.size() != d) throw ConfigError("--point needs " + std::to_string(d) + " values");
  } else {
    for (std::size_t i = 0; i < cal.rows() && x.empty(); ++i)
      if (z->Contains(cal.row(i))) x.assign(cal.row(i).begin(), cal.row(i).end());
  }
  auto sampler = MakeInterventionalSampler(scm, Interventional::kMarginal);
  auto background = std::make_shared<const Dataset>(cal);
  const std::string method = a.method;
  const std::size_t m = a.samples;
  RobustnessInputs in;
  in.f1 = f1;
  in.f2 = f2;
  in.x = x;
  in.seed = a.seed;
  in.factory = [=](Model f) -> std::shared_ptr<ValueFunction> {
    if (method == "manifold") return std::make_shared<ManifoldValue>(f, z, sampler, m);
    if (method == "is") return std::make_shared<SampledValue>(f, sampler, m, "is");
    if (method == "ms") return MakeMsValue(f, background, m);
    if (method == "ces-analytic") {
      if (!scm->gaussian_joint) throw ConfigError("ces-analytic needs a Gaussian scm");
      return std::make_shared<CesAnalyticValue>(f, *scm->gaussian_joint, m);
    }
    if (method == "jb") return std::make_shared<JbValue>(f, density, background->ColumnMedians());
    return std::make_shared<RjbValue>(f, density, sampler, m);
  };
  RngStream probe_rng(a.seed, {8});
  const Dataset probes = SampleObservational(*scm, a.probes, probe_rng);
  RobustnessReport rep = a.family == "off-manifold-K"
                             ? CheckSubspaceRobustness(in, *z, probes, 1.0)
                             : CheckTRobustness(in, *density, a.delta, a.epsilon, probes);
  WriteRobustnessCsv(rep, a.out);
  out << "robustness: family=" << a.family << " method=" << rep.method
      << " max_absdiff=" << FormatDouble(rep.MaxAbsDiff()) << " delta_hat=" << FormatDouble(rep.delta_hat)
      << " pass=" << (rep.pass ? "true" : "false") << " out=" << a.out << '\n';
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
  CLI::App app{"ManifoldShap attributions, manifolds, experiments and robustness reports"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::size_t threads = 0;
  std::string config;
  app.add_option("--threads", threads, "worker threads (0 = all cores); outputs do not depend on it");

  AttributeArgs attr;
  auto* c_attr = app.add_subcommand("attribute", "attribute rows of a CSV dataset");
  c_attr->add_option("--config", config, "JSON file with the same keys as the flags");
  c_attr->add_option("--data", attr.data, "CSV with header")->required();
  c_attr->add_flag("--has-target", attr.has_target, "last column is a target and is dropped");
  c_attr->add_option("--model", attr.model, "scm:<name> or table:<csv with output column>")->required();
  c_attr->add_option("--gate", attr.gate, "wrap the model: off the manifold output 1(column > 0)");
  c_attr->add_option("--explain", attr.explain, "CSV of points to explain (default: data rows)");
  c_attr->add_option("--max-points", attr.max_points);
  c_attr->add_option("--method", attr.method);
  c_attr->add_option("--engine", attr.engine, "auto | exact | permutation | manifold-permutation");
  c_attr->add_option("--estimator", attr.estimator, "rejection | ratio");
  c_attr->add_option("--samples", attr.samples, "Monte-Carlo samples per value");
  c_attr->add_option("--permutations", attr.permutations);
  c_attr->add_option("--rho", attr.rho, "correlation for scm models");
  c_attr->add_option("--seed", attr.seed);
  c_attr->add_option("--out", attr.out, "output directory");
  c_attr->add_option("--threads", threads);
  AddManifoldOptions(c_attr, attr.manifold);

  ManifoldCmdArgs man;
  auto* c_man = app.add_subcommand("manifold", "fit a manifold and report its threshold");
  c_man->add_option("--config", config);
  c_man->add_option("--data", man.data)->required();
  c_man->add_flag("--has-target", man.has_target);
  c_man->add_option("--kind", man.manifold.kind, "mass | density | ood | full");
  c_man->add_option("--alpha", man.manifold.alpha);
  c_man->add_option("--epsilon", man.manifold.epsilon);
  c_man->add_option("--ood-k", man.manifold.ood_k);
  c_man->add_option("--ood-perturbed", man.manifold.ood_perturbed);
  c_man->add_option("--ood-fraction", man.manifold.ood_fraction);
  c_man->add_option("--ood-scale", man.manifold.ood_scale);
  c_man->add_option("--holdout", man.holdout);
  c_man->add_option("--seed", man.seed);
  c_man->add_option("--out", man.out, "write the fitted manifold here");
  c_man->add_option("--threads", threads);

  ExperimentArgs ex;
  auto* c_exp = app.add_subcommand("experiment", "run or list registered experiments");
  c_exp->require_subcommand(1);
  auto* c_list = c_exp->add_subcommand("list", "print registered experiment names");
  auto* c_run = c_exp->add_subcommand("run", "run one experiment");
  c_run->add_option("name", ex.name)->required();
  c_run->add_option("--config", ex.config, "experiment JSON config");
  auto* seed_opt = c_run->add_option("--seed", ex.seed);
  c_run->add_option("--out", ex.out);
  c_run->add_option("--method", ex.method, "comma-separated method list");
  c_run->add_option("--engine", ex.engine);
  c_run->add_option("--samples", ex.samples);
  c_run->add_option("--permutations", ex.permutations);
  c_run->add_option("--alpha", ex.alpha);
  c_run->add_option("--epsilon", ex.epsilon);
  c_run->add_option("--points", ex.n_points);
  c_run->add_option("--threads", threads);

  RobustnessArgs rob;
  auto* c_rob = app.add_subcommand("robustness", "compare v(f1) and v(f2) for a perturbation family");
  c_rob->add_option("--config", config);
  c_rob->add_option("--family", rob.family, "off-manifold-K | density-scaled");
  c_rob->add_option("--method", rob.method);
  c_rob->add_option("--scm", rob.scm);
  c_rob->add_option("--rho", rob.rho);
  c_rob->add_option("--K", rob.K);
  c_rob->add_option("--delta", rob.delta);
  c_rob->add_option("--epsilon", rob.epsilon);
  c_rob->add_option("--alpha", rob.alpha);
  c_rob->add_option("--samples", rob.samples);
  c_rob->add_option("--probes", rob.probes);
  c_rob->add_option("--point", rob.point, "comma-separated point (default: first in-manifold draw)");
  c_rob->add_option("--seed", rob.seed);
  c_rob->add_option("--out", rob.out, "CSV report path");
  c_rob->add_option("--threads", threads);

  // Splice flags from a --config JSON (non-experiment commands) ahead of the
  // user's flags so explicit flags take precedence.
  std::vector<std::string> args(raw.begin() + (raw.empty() ? 0 : 1), raw.end());
  try {
    if (!args.empty() && args[0] != "experiment") {
      for (std::size_t i = 1; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") {
          auto extra = ConfigArgs(args[i + 1]);
          args.insert(args.begin() + 1, extra.begin(), extra.end());
          break;
        }
      }
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  SetDefaultThreads(threads);
  try {
    if (c_attr->parsed()) return CmdAttribute(attr, out, err);
    if (c_man->parsed()) return CmdManifold(man, out, err);
    if (c_rob->parsed()) return CmdRobustness(rob, out, err);
    if (c_list->parsed()) {
      std::string names;
      for (const auto& n : ExperimentNames()) names += (names.empty() ? "" : " ") + n;
      out << names << '\n';
      return kExitOk;
    }
    if (c_run->parsed()) return CmdExperimentRun(ex, seed_opt->count() > 0, out, err);
  } catch (const AcceptanceFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitAcceptance;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CsvError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace manifoldshap
