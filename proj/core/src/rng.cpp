// SPDX-License-Identifier: Apache-2.0
#include "flowcond/rng.hpp"

namespace flowcond {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng make_rng(std::uint64_t seed) { return Rng(seed); }

Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(mix_seed(seed, stream)); }

void fill_standard_normal(std::span<double> out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(rng);
}

void fill_uniform(std::span<double> out, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> uniform(lo, hi);
  for (double& v : out) v = uniform(rng);
}

}  // namespace flowcond
