// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace flowcond {

using Rng = std::mt19937_64;

/// splitmix64 step; good enough to decorrelate derived stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

Rng make_rng(std::uint64_t seed);
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

void fill_standard_normal(std::span<double> out, Rng& rng);
void fill_uniform(std::span<double> out, double lo, double hi, Rng& rng);

}  // namespace flowcond
