#include "manifoldshap/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "manifoldshap/csv.hpp"

namespace manifoldshap {

Model BuildPerturbed(Model f, std::shared_ptr<const Manifold> z, const PerturbationSpec& spec) {
  const bool needs_z = spec.kind != PerturbationKind::kDensityScaled;
  if (needs_z && !z) throw std::invalid_argument("BuildPerturbed: restriction set required");
  if (!std::isfinite(spec.delta) || !std::isfinite(spec.K)) {
    throw std::invalid_argument("BuildPerturbed: perturbation parameters must be finite");
  }
  switch (spec.kind) {
    case PerturbationKind::kRegression:
      return [f, z, delta = spec.delta, j = spec.feature](std::span<const double> x) {
        const double y = f(x);
        return z->Contains(x) ? y : y + delta * x[j];
      };
    case PerturbationKind::kClassifier:
      return [f, z, delta = spec.delta](std::span<const double> x) {
        if (z->Contains(x)) return f(x);
        return (1.0 - delta) * x[0] > 0.5 ? 1.0 : 0.0;
      };
    case PerturbationKind::kGate:
      return [f, z, j = spec.unrelated_column](std::span<const double> x) {
        if (z->Contains(x)) return f(x);
        return x[j] > 0.0 ? 1.0 : 0.0;
      };
    case PerturbationKind::kAdditive:
      return [f, z, K = spec.K](std::span<const double> x) {
        return z->Contains(x) ? f(x) : f(x) + K;
      };
    case PerturbationKind::kDensityScaled:
      break;
  }
  if (!spec.density) throw std::invalid_argument("BuildPerturbed: density-scaled spec needs a density");
  return [f, spec](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double y = f(x);
    if (r2 > spec.radius * spec.radius) return y;
    const double c = spec.direction ? std::clamp(spec.direction(x), -1.0, 1.0) : 1.0;
    return y + spec.delta * c / std::max((*spec.density)(x), spec.density_floor);
  };
}

double RobustnessReport::MaxAbsDiff() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.absdiff);
  return m;
}

namespace {

std::vector<Coalition> AllCoalitions(std::size_t d) {
  if (d > 20) throw std::invalid_argument("robustness: list coalitions explicitly for d > 20");
  std::vector<Coalition> out;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << d); ++s) out.push_back(Coalition::FromMask(s, d));
  return out;
}

RobustnessReport Compare(const RobustnessInputs& in, double bound) {
  if (!in.factory || !in.f1 || !in.f2) throw std::invalid_argument("robustness: incomplete inputs");
  const auto v1 = in.factory(in.f1);
  const auto v2 = in.factory(in.f2);
  RobustnessReport rep;
  rep.method = v1->name();
  const auto coalitions = in.coalitions.empty() ? AllCoalitions(in.x.size()) : in.coalitions;
  // Both models see the same stream: common random numbers.
  const RngStream base(in.seed, {0x726f62});
  for (const auto& s : coalitions) {
    RngStream r1 = base, r2 = base;
    const auto a = v1->Evaluate(s, in.x, r1);
    const auto b = v2->Evaluate(s, in.x, r2);
    CoalitionDiff row;
    row.coalition = s;
    row.v1 = a.value;
    row.v2 = b.value;
    row.se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    row.absdiff = std::abs(a.value - b.value);
    row.bound = bound;
    row.pass = row.absdiff <= bound + 3.0 * row.se;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace

RobustnessReport CheckSubspaceRobustness(const RobustnessInputs& in, const Manifold& z_prime,
                                         const Dataset& probes, double T) {
  if (probes.empty()) throw std::invalid_argument("robustness: empty probe set");
  double delta_hat = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < probes.rows(); ++i) {
    auto p = probes.row(i);
    if (!z_prime.Contains(p)) continue;
    delta_hat = std::max(delta_hat, std::abs(in.f1(p) - in.f2(p)));
    ++used;
  }
  if (used == 0) throw std::invalid_argument("robustness: no probe lies inside the subspace");
  auto rep = Compare(in, T * delta_hat);
  rep.delta_hat = delta_hat;
  rep.T = T;
  rep.n_probes = used;
  return rep;
}

RobustnessReport CheckTRobustness(const RobustnessInputs& in, const Density& density,
                                  double delta, double epsilon, const Dataset& probes) {
  if (probes.empty()) throw std::invalid_argument("robustness: empty probe set");
  if (!(epsilon > 0.0)) throw std::invalid_argument("robustness: epsilon must be > 0");
  double delta_hat = 0.0;
  for (std::size_t i = 0; i < probes.rows(); ++i) {
    auto p = probes.row(i);
    delta_hat = std::max(delta_hat, std::abs(in.f1(p) - in.f2(p)) * density(p));
  }
  auto rep = Compare(in, delta / epsilon);
  rep.delta_hat = delta_hat;
  rep.T = 1.0 / epsilon;
  rep.n_probes = probes.rows();
  return rep;
}

void WriteRobustnessCsv(const RobustnessReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "coalition,v1,v2,absdiff,bound,pass\n";
  for (const auto& r : report.rows) {
    out << r.coalition.ToBitString() << ',' << FormatDouble(r.v1) << ',' << FormatDouble(r.v2)
        << ',' << FormatDouble(r.absdiff) << ',' << FormatDouble(r.bound) << ','
        << (r.pass ? "true" : "false") << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace manifoldshap
