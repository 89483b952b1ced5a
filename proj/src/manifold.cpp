#include "manifoldshap/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "manifoldshap/csv.hpp"
#include "manifoldshap/parallel.hpp"

namespace manifoldshap {

DensityManifold::DensityManifold(std::shared_ptr<const Density> density, double epsilon)
    : density_(std::move(density)), epsilon_(epsilon) {
  if (!density_) throw std::invalid_argument("DensityManifold: null density");
  if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) {
    throw std::invalid_argument("DensityManifold: epsilon must be finite and >= 0");
  }
}

KdeEstimator::KdeEstimator(Dataset reference, std::vector<double> bandwidth)
    : reference_(std::move(reference)), bandwidth_(std::move(bandwidth)) {
  if (reference_.empty()) throw std::invalid_argument("KDE: no reference points");
  if (bandwidth_.size() != reference_.cols()) {
    throw std::invalid_argument("KDE: one bandwidth per feature required");
  }
  double log_h = 0.0;
  for (double h : bandwidth_) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("KDE: bandwidths must be > 0");
    log_h += std::log(h);
  }
  const double d = static_cast<double>(reference_.cols());
  log_norm_ = std::log(static_cast<double>(reference_.rows())) + log_h +
              0.5 * d * std::log(2.0 * std::numbers::pi);
}

double KdeEstimator::operator()(std::span<const double> x) const {
  const std::size_t d = reference_.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < reference_.rows(); ++i) {
    auto r = reference_.row(i);
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = (x[j] - r[j]) / bandwidth_[j];
      q += z * z;
    }
    total += std::exp(-0.5 * q);
  }
  return total * std::exp(-log_norm_);
}

std::vector<double> KdeEstimator::Evaluate(const Dataset& points, std::size_t threads) const {
  std::vector<double> out(points.rows());
  ParallelFor(points.rows(), threads, [&](std::size_t i) { out[i] = (*this)(points.row(i)); });
  return out;
}

std::vector<double> SelectBandwidth(const Dataset& data, BandwidthRule rule) {
  if (data.rows() < 2) throw std::invalid_argument("KDE: need at least 2 rows");
  const auto sd = data.ColumnStdDevs();
  const double d = static_cast<double>(data.cols());
  const double n = static_cast<double>(data.rows());
  double factor = std::pow(n, -1.0 / (d + 4.0));
  if (rule == BandwidthRule::kSilverman) factor *= std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0));
  std::vector<double> h(sd.size());
  for (std::size_t j = 0; j < sd.size(); ++j) {
    if (!(sd[j] > 0.0)) {
      throw std::invalid_argument("KDE: feature '" + data.feature_names()[j] +
                                  "' has zero variance; add small jitter or drop it");
    }
    h[j] = sd[j] * factor;
  }
  return h;
}

KdeEstimator FitKde(const Dataset& data, BandwidthRule rule) {
  return KdeEstimator(data, SelectBandwidth(data, rule));
}

KdeEstimator FitKde(const Dataset& data, std::vector<double> bandwidth) {
  if (data.empty()) throw std::invalid_argument("KDE: empty reference set");
  return KdeEstimator(data, std::move(bandwidth));
}

double ThresholdForMass(std::vector<double> dens, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (dens.empty()) throw std::invalid_argument("ThresholdForMass: empty calibration set");
  const auto k = static_cast<std::size_t>(
      std::floor((1.0 - alpha) * static_cast<double>(dens.size()) + 1e-9));
  if (k == 0) return 0.0;
  std::nth_element(dens.begin(), dens.begin() + static_cast<std::ptrdiff_t>(k - 1), dens.end());
  return dens[k - 1];
}

double ThresholdForMass(const Density& density, const Dataset& calibration, double alpha) {
  if (calibration.empty()) throw std::invalid_argument("ThresholdForMass: empty calibration set");
  std::vector<double> dens(calibration.rows());
  for (std::size_t i = 0; i < calibration.rows(); ++i) dens[i] = density(calibration.row(i));
  return ThresholdForMass(std::move(dens), alpha);
}

std::shared_ptr<MassManifold> MakeMassManifold(std::shared_ptr<const Density> density,
                                               const Dataset& calibration, double alpha) {
  const double eps = ThresholdForMass(*density, calibration, alpha);
  return std::make_shared<MassManifold>(std::move(density), eps, alpha);
}

OodClassifier::OodClassifier(Dataset points, std::vector<int> labels, std::vector<double> center,
                             std::vector<double> scale, std::size_t k)
    : points_(std::move(points)), labels_(std::move(labels)), center_(std::move(center)),
      scale_(std::move(scale)), k_(k) {
  if (labels_.size() != points_.rows()) throw std::invalid_argument("OOD: one label per point");
  if (center_.size() != points_.cols() || scale_.size() != points_.cols()) {
    throw std::invalid_argument("OOD: center/scale dimension mismatch");
  }
  if (k_ == 0 || k_ > points_.rows()) {
    throw std::invalid_argument("OOD: k must be in [1, " + std::to_string(points_.rows()) + "]");
  }
}

bool OodClassifier::Contains(std::span<const double> x) const {
  const std::size_t d = points_.cols();
  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) z[j] = (x[j] - center_[j]) / scale_[j];
  std::vector<std::pair<double, std::size_t>> dist(points_.rows());
  for (std::size_t i = 0; i < points_.rows(); ++i) {
    auto r = points_.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += (z[j] - r[j]) * (z[j] - r[j]);
    dist[i] = {s, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  std::size_t real = 0;
  for (std::size_t t = 0; t < k_; ++t) real += labels_[dist[t].second] == 1;
  return 2 * real > k_;
}

OodClassifier FitOodClassifier(const Dataset& data, const OodOptions& opt, RngStream& rng) {
  if (opt.n_perturbed == 0) {
    throw std::invalid_argument("OOD: n_perturbed must be >= 1 (no out-of-manifold class otherwise)");
  }
  if (!(opt.perturb_fraction > 0.0 && opt.perturb_fraction <= 1.0)) {
    throw std::invalid_argument("OOD: perturb_fraction must lie in (0, 1]");
  }
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  const std::size_t total = n * (1 + opt.n_perturbed);
  if (opt.k == 0 || opt.k > total) {
    throw std::invalid_argument("OOD: k = " + std::to_string(opt.k) +
                                " exceeds the training set size " + std::to_string(total));
  }
  const auto center = data.ColumnMeans();
  auto scale = data.ColumnStdDevs();
  for (std::size_t j = 0; j < d; ++j) {
    if (!(scale[j] > 0.0)) {
      throw std::invalid_argument("OOD: feature '" + data.feature_names()[j] + "' has zero variance");
    }
  }
  const auto n_shift = std::min<std::size_t>(
      d, static_cast<std::size_t>(std::ceil(opt.perturb_fraction * static_cast<double>(d) - 1e-12)));
  std::vector<double> values;
  values.reserve(total * d);
  std::vector<int> labels;
  labels.reserve(total);
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) values.push_back((r[j] - center[j]) / scale[j]);
    labels.push_back(1);
    for (std::size_t c = 0; c < opt.n_perturbed; ++c) {
      std::vector<double> p(r.begin(), r.end());
      for (std::size_t j = 0; j < d; ++j) order[j] = j;
      for (std::size_t t = 0; t < n_shift; ++t) {
        std::swap(order[t], order[t + rng.index(d - t)]);
        const std::size_t j = order[t];
        p[j] += rng.normal(0.0, opt.perturb_scale * scale[j]);
      }
      for (std::size_t j = 0; j < d; ++j) values.push_back((p[j] - center[j]) / scale[j]);
      labels.push_back(0);
    }
  }
  Dataset pts(total, d, std::move(values), data.feature_names());
  return OodClassifier(std::move(pts), std::move(labels), center, std::move(scale), opt.k);
}

double InFraction(const Manifold& manifold, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t in = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) in += manifold.Contains(data.row(i));
  return static_cast<double>(in) / static_cast<double>(data.rows());
}

namespace {

std::string JoinDoubles(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += "," + FormatDouble(x);
  return s;
}

std::vector<double> ParseDoubles(const std::vector<std::string>& cells, std::size_t from) {
  std::vector<double> v;
  for (std::size_t i = from; i < cells.size(); ++i) v.push_back(std::stod(cells[i]));
  return v;
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void SaveManifold(const Manifold& manifold, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "manifoldshap-manifold,1\n";
  if (auto* ood = dynamic_cast<const OodClassifier*>(&manifold)) {
    out << "kind,ood\nk," << ood->k() << "\ncenter" << JoinDoubles(ood->center()) << "\nscale"
        << JoinDoubles(ood->scale()) << "\ndata\n";
    const auto& pts = ood->points();
    for (const auto& name : pts.feature_names()) out << name << ',';
    out << "label\n";
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      for (std::size_t j = 0; j < pts.cols(); ++j) out << FormatDouble(pts.at(i, j)) << ',';
      out << ood->labels()[i] << '\n';
    }
  } else if (auto* dm = dynamic_cast<const DensityManifold*>(&manifold)) {
    auto* kde = dynamic_cast<const KdeEstimator*>(dm->density().get());
    if (!kde) throw std::invalid_argument("SaveManifold: only KDE-backed density manifolds can be saved");
    out << "kind," << dm->kind() << "\nepsilon," << FormatDouble(dm->epsilon()) << '\n';
    if (auto* mm = dynamic_cast<const MassManifold*>(dm)) out << "alpha," << FormatDouble(mm->alpha()) << '\n';
    out << "bandwidth" << JoinDoubles(kde->bandwidth()) << "\ndata\n";
    const auto& ref = kde->reference();
    for (std::size_t j = 0; j < ref.cols(); ++j) out << (j ? "," : "") << ref.feature_names()[j];
    out << '\n';
    for (std::size_t i = 0; i < ref.rows(); ++i) {
      for (std::size_t j = 0; j < ref.cols(); ++j) out << (j ? "," : "") << FormatDouble(ref.at(i, j));
      out << '\n';
    }
  } else if (dynamic_cast<const FullSupport*>(&manifold)) {
    out << "kind,full\ndim," << manifold.dim() << '\n';
  } else {
    throw std::invalid_argument("SaveManifold: unsupported manifold kind '" + manifold.kind() + "'");
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::shared_ptr<Manifold> LoadManifold(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("manifoldshap-manifold", 0) != 0) {
    throw std::runtime_error(path + ": not a manifold file");
  }
  std::string kind;
  double epsilon = 0.0, alpha = 1.0;
  std::size_t k = 0, dim = 0;
  std::vector<double> bandwidth, center, scale;
  while (std::getline(in, line) && line != "data") {
    auto cells = Split(line);
    if (cells.empty()) continue;
    const auto& key = cells[0];
    if (key == "kind") kind = cells.at(1);
    else if (key == "epsilon") epsilon = std::stod(cells.at(1));
    else if (key == "alpha") alpha = std::stod(cells.at(1));
    else if (key == "k") k = std::stoul(cells.at(1));
    else if (key == "dim") dim = std::stoul(cells.at(1));
    else if (key == "bandwidth") bandwidth = ParseDoubles(cells, 1);
    else if (key == "center") center = ParseDoubles(cells, 1);
    else if (key == "scale") scale = ParseDoubles(cells, 1);
    else throw std::runtime_error(path + ": unknown key '" + key + "'");
  }
  if (kind == "full") return std::make_shared<FullSupport>(dim);
  std::stringstream rest;
  rest << in.rdbuf();
  if (kind == "ood") {
    Dataset pts = ParseDatasetCsv(rest.str(), true);
    std::vector<int> labels;
    for (double v : *pts.target()) labels.push_back(v > 0.5 ? 1 : 0);
    Dataset bare(pts.rows(), pts.cols(), pts.values(), pts.feature_names());
    return std::make_shared<OodClassifier>(std::move(bare), std::move(labels), std::move(center),
                                           std::move(scale), k);
  }
  if (kind == "density" || kind == "mass") {
    auto kde = std::make_shared<KdeEstimator>(ParseDatasetCsv(rest.str(), false), bandwidth);
    if (kind == "mass") return std::make_shared<MassManifold>(kde, epsilon, alpha);
    return std::make_shared<DensityManifold>(kde, epsilon);
  }
  throw std::runtime_error(path + ": unknown manifold kind '" + kind + "'");
}

}  // namespace manifoldshap
