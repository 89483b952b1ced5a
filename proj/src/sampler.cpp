#include "manifoldshap/sampler.hpp"

#include <stdexcept>

namespace manifoldshap {

RowMarginalSampler::RowMarginalSampler(std::shared_ptr<const Dataset> data)
    : data_(std::move(data)) {
  if (!data_ || data_->empty()) throw std::invalid_argument("RowMarginalSampler: empty dataset");
}

void RowMarginalSampler::Sample(const Coalition& coalition, std::span<const double> x,
                                RngStream& rng, std::span<double> out) const {
  auto r = data_->row(rng.index(data_->rows()));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = coalition.contains(j) ? x[j] : r[j];
}

}  // namespace manifoldshap
