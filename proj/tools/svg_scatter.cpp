// SPDX-License-Identifier: Apache-2.0
#include "svg_scatter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "flowcond/csv.hpp"

namespace flowcond::io {

void write_svg_scatter(const std::filesystem::path& path, std::span<const ScatterLayer> layers,
                       const std::string& title) {
  constexpr double kSize = 640.0;
  constexpr double kPad = 40.0;

  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const auto& layer : layers) {
    if (!layer.points) continue;
    for (std::size_t r = 0; r < layer.points->rows; ++r) {
      lo_x = std::min(lo_x, layer.points->at(r, 0));
      hi_x = std::max(hi_x, layer.points->at(r, 0));
      lo_y = std::min(lo_y, layer.points->at(r, 1));
      hi_y = std::max(hi_y, layer.points->at(r, 1));
    }
  }
  if (lo_x > hi_x) {
    lo_x = lo_y = -1.0;
    hi_x = hi_y = 1.0;
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  const double scale = (kSize - 2.0 * kPad) / span;
  const double cx = 0.5 * (lo_x + hi_x);
  const double cy = 0.5 * (lo_y + hi_y);

  auto px = [&](double x) { return kSize / 2.0 + (x - cx) * scale; };
  auto py = [&](double y) { return kSize / 2.0 - (y - cy) * scale; };

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                kSize, kSize, kSize, kSize);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& layer : layers) {
    if (!layer.points) continue;
    std::snprintf(buf, sizeof(buf), "<g fill=\"%s\" fill-opacity=\"%.2f\">\n",
                  layer.color.c_str(), layer.opacity);
    svg += buf;
    for (std::size_t r = 0; r < layer.points->rows; ++r) {
      std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\"/>\n",
                    px(layer.points->at(r, 0)), py(layer.points->at(r, 1)), layer.radius);
      svg += buf;
    }
    svg += "</g>\n";
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">",
                kPad);
  svg += buf;
  svg += title;
  svg += "</text>\n</svg>\n";
  write_file_atomic(path, svg);
}

}  // namespace flowcond::io
