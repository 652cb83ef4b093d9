// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "flowcond/sample_batch.hpp"

namespace flowcond::io {

struct ScatterLayer {
  const SampleBatch* points = nullptr;
  std::string color = "#888888";
  double radius = 2.0;
  double opacity = 0.6;
};

/// Minimal hand-rolled SVG scatter plot; diagnostic output only.
void write_svg_scatter(const std::filesystem::path& path, std::span<const ScatterLayer> layers,
                       const std::string& title);

}  // namespace flowcond::io
