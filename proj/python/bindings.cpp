#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "manifoldshap/cli.hpp"
#include "manifoldshap/core.hpp"
#include "manifoldshap/engine.hpp"
#include "manifoldshap/experiments.hpp"
#include "manifoldshap/manifold.hpp"
#include "manifoldshap/rng.hpp"
#include "manifoldshap/scm.hpp"

namespace py = pybind11;
namespace ms = manifoldshap;

namespace {

py::dict AttributionToDict(const ms::Attribution& a) {
  py::dict d;
  d["phi"] = a.phi;
  d["value_empty"] = a.value_empty;
  d["value_full"] = a.value_full;
  d["degenerate"] = a.degenerate;
  if (a.std_errors) d["std_errors"] = *a.std_errors;
  return d;
}

// Per setting and method: top-feature percentages plus the raw attributions
// (None for skipped points).
py::dict ResultToDict(const ms::ExperimentResult& r) {
  py::dict out;
  out["config"] = r.config.ToJson();
  out["runtime_seconds"] = r.runtime_seconds;
  py::list settings;
  for (const auto& s : r.settings) {
    py::dict sd;
    sd["label"] = s.label;
    sd["parameter"] = s.parameter;
    sd["value"] = s.value;
    sd["feature_names"] = s.feature_names;
    sd["points"] = s.points;
    py::dict methods;
    for (const auto& m : s.methods) {
      py::dict md;
      md["top_percentages"] = m.TopPercentages(s.feature_names.size());
      md["evaluated"] = m.evaluated();
      py::list status, phi;
      for (const auto& p : m.points) {
        status.append(p.status);
        if (p.attribution) {
          phi.append(py::cast(p.attribution->phi));
        } else {
          phi.append(py::none());
        }
      }
      md["status"] = status;
      md["phi"] = phi;
      methods[py::str(m.method)] = md;
    }
    sd["methods"] = methods;
    settings.append(sd);
  }
  out["settings"] = settings;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Manifold-restricted Shapley values";

  py::register_exception<ms::AcceptanceFailure>(m, "AcceptanceFailure", PyExc_RuntimeError);
  py::register_exception<ms::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("shapley_weight", &ms::ShapleyWeight, py::arg("s_size"), py::arg("d"));
  m.def(
      "top_feature", [](const std::vector<double>& phi) { return ms::TopFeature(phi); },
      py::arg("phi"));
  m.def(
      "normalize_l1",
      [](const std::vector<double>& phi) {
        ms::Attribution a;
        a.phi = phi;
        return AttributionToDict(ms::NormalizeL1(a));
      },
      py::arg("phi"));
  m.def(
      "exact_shapley_from_table",
      [](const std::vector<double>& v_by_mask, std::size_t d) {
        return AttributionToDict(ms::ExactShapleyFromTable(v_by_mask, d));
      },
      py::arg("v_by_mask"), py::arg("d"));

  m.def("scm_names", &ms::ScmNames);
  m.def(
      "sample_scm",
      [](const std::string& name, std::size_t n, std::uint64_t seed, double rho,
         std::size_t d) {
        ms::ScmParams params;
        params.rho = rho;
        params.d = d;
        auto scm = ms::MakeScmByName(name, params);
        ms::RngStream rng(seed);
        const ms::Dataset data = ms::SampleObservational(*scm, n, rng);
        std::vector<std::vector<double>> rows(data.rows());
        for (std::size_t i = 0; i < data.rows(); ++i) {
          auto r = data.row(i);
          rows[i].assign(r.begin(), r.end());
        }
        return py::make_tuple(rows, data.feature_names());
      },
      py::arg("name"), py::arg("n"), py::arg("seed") = 0, py::arg("rho") = 0.85,
      py::arg("d") = 10);

  m.def(
      "threshold_for_mass",
      [](std::vector<double> densities, double alpha) {
        return ms::ThresholdForMass(std::move(densities), alpha);
      },
      py::arg("calibration_densities"), py::arg("alpha"));

  m.def("experiment_names", &ms::ExperimentNames);
  m.def(
      "default_config",
      [](const std::string& name) { return ms::ExperimentConfig::Defaults(name).ToJson(); },
      py::arg("name"));
  m.def(
      "run_experiment",
      [](const std::string& name, const std::string& config_json, std::size_t threads,
         std::optional<std::filesystem::path> out_dir) {
        const auto cfg = config_json.empty() ? ms::ExperimentConfig::Defaults(name)
                                             : ms::ExperimentConfig::FromJson(config_json, name);
        ms::ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = ms::RunExperiment(cfg, threads);
          if (out_dir) ms::WriteResults(result, *out_dir);
        }
        return ResultToDict(result);
      },
      py::arg("name"), py::arg("config_json") = "", py::arg("threads") = 0,
      py::arg("out_dir") = py::none());

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "manifoldshap");
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = ms::RunCli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
