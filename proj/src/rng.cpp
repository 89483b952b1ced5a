#include "manifoldshap/rng.hpp"

namespace manifoldshap {

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t StreamKey(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
  std::uint64_t h = Mix64(seed);
  for (std::uint64_t p : path) h = Mix64(h ^ Mix64(p + 0x632be59bd9b4e019ULL));
  // Path length participates so (a) and (a, 0) differ.
  return Mix64(h + path.size());
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> path)
    : seed_(seed), path_(std::move(path)), engine_(StreamKey(seed_, path_)) {}

RngStream RngStream::child(std::uint64_t index) const {
  auto p = path_;
  p.push_back(index);
  return RngStream(seed_, std::move(p));
}

}  // namespace manifoldshap
