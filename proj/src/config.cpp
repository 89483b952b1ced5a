#include <cmath>
#include <set>

#include "json.hpp"
#include "manifoldshap/experiments.hpp"
#include "manifoldshap/values.hpp"

namespace manifoldshap {

using nlohmann::ordered_json;

const std::vector<std::string>& ExperimentNames() {
  static const std::vector<std::string> names = {
      "synthetic_dag",       "classification_perturbation", "correlation_sweep",
      "manifold_size_sweep", "rjb_counterexample",          "dimension_scaling"};
  return names;
}

namespace {

std::string Join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

void RequireOneOf(const std::string& key, const std::string& value,
                  const std::vector<std::string>& valid) {
  for (const auto& v : valid)
    if (v == value) return;
  throw ConfigError(key + " = '" + value + "' is not one of: " + Join(valid));
}

void RejectUnknown(const ordered_json& obj, const std::set<std::string>& known,
                   const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void Read(const ordered_json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::Defaults(const std::string& name) {
  RequireOneOf("experiment", name, ExperimentNames());
  ExperimentConfig c;
  c.experiment = name;
  if (name == "synthetic_dag") {
    c.rho = 0.85;
    c.deltas = {0.0, 5.0};
    c.methods = {"is", "manifold", "ces-analytic", "rjb"};
  } else if (name == "classification_perturbation") {
    c.rho = 0.9;
    c.deltas = {0.0, 10.0};
    c.methods = {"is", "manifold", "ces-analytic", "rjb"};
  } else if (name == "correlation_sweep") {
    c.rhos = {0.0, 0.33, 0.66, 0.99};
    c.manifold.alpha = 0.99;
    c.methods = {"is", "manifold", "ces-analytic"};
  } else if (name == "manifold_size_sweep") {
    c.alphas = {1.0, 0.9, 0.85, 0.8};
    c.methods = {"is", "manifold", "ces-surrogate"};
  } else if (name == "rjb_counterexample") {
    c.methods = {"is", "manifold", "rjb"};
  } else if (name == "dimension_scaling") {
    c.rho = 0.9;
    c.dims = {10, 20};
    c.deltas = {10.0};
    c.n_points = 100;
    c.m = 1;
    c.engine = "manifold-permutation";
    c.methods = {"is", "manifold", "ces-analytic", "rjb"};
  }
  return c;
}

void ExperimentConfig::Validate() const {
  RequireOneOf("experiment", experiment, ExperimentNames());
  if (methods.empty()) throw ConfigError("methods must list at least one method");
  for (const auto& m : methods) RequireOneOf("method", m, MethodNames());
  if (n_points == 0) throw ConfigError("n_points must be >= 1");
  if (m == 0) throw ConfigError("m must be >= 1");
  if (permutations == 0) throw ConfigError("permutations must be >= 1");
  if (max_attempts == 0) throw ConfigError("max_attempts must be >= 1");
  if (background < 10) throw ConfigError("background must be >= 10");
  RequireOneOf("engine", engine, {"auto", "exact", "permutation", "manifold-permutation"});
  RequireOneOf("interventional", interventional, {"marginal", "scm"});
  RequireOneOf("estimator", estimator, {"rejection", "ratio"});
  RequireOneOf("on_acceptance_failure", on_acceptance_failure, {"error", "skip"});
  RequireOneOf("manifold.kind", manifold.kind,
               {"full", "density", "mass", "ood", "oracle-density", "oracle-mass"});
  auto check_alpha = [](double a) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("alpha must lie in (0, 1], got " + std::to_string(a));
  };
  auto check_rho = [](double r) {
    if (!(std::abs(r) < 1.0)) throw ConfigError("rho must satisfy |rho| < 1, got " + std::to_string(r));
  };
  check_alpha(manifold.alpha);
  for (double a : alphas) check_alpha(a);
  check_rho(rho);
  for (double r : rhos) check_rho(r);
  for (double d : deltas)
    if (!std::isfinite(d)) throw ConfigError("deltas must be finite");
  for (auto d : dims)
    if (d < 2 || d > 64) throw ConfigError("dims must lie in [2, 64]");
  if (!(manifold.epsilon >= 0.0)) throw ConfigError("manifold.epsilon must be >= 0");
  if (manifold.calibration == 0 || manifold.reference < 2) {
    throw ConfigError("manifold.calibration must be >= 1 and manifold.reference >= 2");
  }
  if (manifold.ood.k == 0 || manifold.ood.n_perturbed == 0) {
    throw ConfigError("manifold.ood.k and manifold.ood.n_perturbed must be >= 1");
  }
  if (experiment == "correlation_sweep" && rhos.empty()) throw ConfigError("rhos must be nonempty");
  if (experiment == "manifold_size_sweep" && alphas.empty()) throw ConfigError("alphas must be nonempty");
  if (experiment == "dimension_scaling" && dims.empty()) throw ConfigError("dims must be nonempty");
  if ((experiment == "synthetic_dag" || experiment == "classification_perturbation" ||
       experiment == "dimension_scaling") &&
      deltas.empty()) {
    throw ConfigError("deltas must be nonempty");
  }
}

ExperimentConfig ExperimentConfig::FromJson(const std::string& text,
                                            const std::string& experiment_override) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RejectUnknown(j,
                {"experiment", "seed", "n_points", "m", "permutations", "engine", "methods",
                 "manifold", "rho", "deltas", "rhos", "alphas", "dims", "interventional",
                 "estimator", "on_acceptance_failure", "background", "surrogate_draws",
                 "max_attempts", "literal"},
                "experiment config");
  std::string name = experiment_override;
  if (name.empty()) Read(j, "experiment", name);
  if (name.empty()) throw ConfigError("config does not name an experiment");
  ExperimentConfig c = Defaults(name);
  Read(j, "seed", c.seed);
  Read(j, "n_points", c.n_points);
  Read(j, "m", c.m);
  Read(j, "permutations", c.permutations);
  Read(j, "engine", c.engine);
  Read(j, "methods", c.methods);
  Read(j, "rho", c.rho);
  Read(j, "deltas", c.deltas);
  Read(j, "rhos", c.rhos);
  Read(j, "alphas", c.alphas);
  Read(j, "dims", c.dims);
  Read(j, "interventional", c.interventional);
  Read(j, "estimator", c.estimator);
  Read(j, "on_acceptance_failure", c.on_acceptance_failure);
  Read(j, "background", c.background);
  Read(j, "surrogate_draws", c.surrogate_draws);
  Read(j, "max_attempts", c.max_attempts);
  Read(j, "literal", c.literal);
  if (j.contains("manifold")) {
    const auto& mj = j.at("manifold");
    if (!mj.is_object()) throw ConfigError("manifold must be an object");
    RejectUnknown(mj, {"kind", "epsilon", "alpha", "calibration", "reference", "ood"}, "manifold");
    Read(mj, "kind", c.manifold.kind);
    Read(mj, "epsilon", c.manifold.epsilon);
    Read(mj, "alpha", c.manifold.alpha);
    Read(mj, "calibration", c.manifold.calibration);
    Read(mj, "reference", c.manifold.reference);
    if (mj.contains("ood")) {
      const auto& oj = mj.at("ood");
      if (!oj.is_object()) throw ConfigError("manifold.ood must be an object");
      RejectUnknown(oj, {"k", "n_perturbed", "perturb_fraction", "perturb_scale"}, "manifold.ood");
      Read(oj, "k", c.manifold.ood.k);
      Read(oj, "n_perturbed", c.manifold.ood.n_perturbed);
      Read(oj, "perturb_fraction", c.manifold.ood.perturb_fraction);
      Read(oj, "perturb_scale", c.manifold.ood.perturb_scale);
    }
  }
  c.Validate();
  return c;
}

std::string ExperimentConfig::ToJson() const {
  ordered_json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["n_points"] = n_points;
  j["m"] = m;
  j["permutations"] = permutations;
  j["engine"] = engine;
  j["methods"] = methods;
  j["manifold"] = {{"kind", manifold.kind},
                   {"epsilon", manifold.epsilon},
                   {"alpha", manifold.alpha},
                   {"calibration", manifold.calibration},
                   {"reference", manifold.reference},
                   {"ood",
                    {{"k", manifold.ood.k},
                     {"n_perturbed", manifold.ood.n_perturbed},
                     {"perturb_fraction", manifold.ood.perturb_fraction},
                     {"perturb_scale", manifold.ood.perturb_scale}}}};
  j["rho"] = rho;
  j["deltas"] = deltas;
  j["rhos"] = rhos;
  j["alphas"] = alphas;
  j["dims"] = dims;
  j["interventional"] = interventional;
  j["estimator"] = estimator;
  j["on_acceptance_failure"] = on_acceptance_failure;
  j["background"] = background;
  j["surrogate_draws"] = surrogate_draws;
  j["max_attempts"] = max_attempts;
  j["literal"] = literal;
  return j.dump(2) + "\n";
}

}  // namespace manifoldshap
