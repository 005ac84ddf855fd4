#include "editvec/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "editvec/data.hpp"

namespace editvec::eval {

namespace {

const char* kPalette[] = {
    "#7b2d8b", "#1f77b4", "#2ca02c", "#d62728", "#ff7f0e", "#000000",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8",
    "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5",
};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string scatter_svg(const std::vector<std::array<double, 2>>& points,
                        const std::vector<std::string>& labels) {
  if (points.size() != labels.size())
    throw std::invalid_argument("points/labels size mismatch");

  std::map<std::string, std::size_t> color_of;
  for (const auto& l : labels) color_of.try_emplace(l, 0);
  std::size_t next = 0;
  for (auto& [label, idx] : color_of) idx = next++ % kPaletteSize;

  const double width = 640.0, height = 480.0, margin = 40.0;
  const double legend_width = 220.0;

  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
  if (!points.empty()) {
    min_x = max_x = points[0][0];
    min_y = max_y = points[0][1];
    for (const auto& p : points) {
      min_x = std::min(min_x, p[0]);
      max_x = std::max(max_x, p[0]);
      min_y = std::min(min_y, p[1]);
      max_y = std::max(max_y, p[1]);
    }
    if (max_x == min_x) max_x = min_x + 1.0;
    if (max_y == min_y) max_y = min_y + 1.0;
  }
  auto sx = [&](double x) {
    return margin + (x - min_x) / (max_x - min_x) * (width - 2.0 * margin);
  };
  auto sy = [&](double y) {
    return height - margin - (y - min_y) / (max_y - min_y) * (height - 2.0 * margin);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         fmt(width + legend_width) + "\" height=\"" + fmt(height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width + legend_width) + "\" height=\"" +
         fmt(height) + "\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out += "<circle cx=\"" + fmt(sx(points[i][0])) + "\" cy=\"" + fmt(sy(points[i][1])) +
           "\" r=\"3\" fill=\"" + kPalette[color_of[labels[i]]] + "\" fill-opacity=\"0.8\"/>\n";
  }
  double ly = 20.0;
  for (const auto& [label, idx] : color_of) {
    out += "<rect x=\"" + fmt(width + 10.0) + "\" y=\"" + fmt(ly - 9.0) +
           "\" width=\"12\" height=\"12\" fill=\"" + kPalette[idx] + "\"/>\n";
    out += "<text x=\"" + fmt(width + 28.0) + "\" y=\"" + fmt(ly + 1.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + label + "</text>\n";
    ly += 18.0;
  }
  out += "</svg>\n";
  return out;
}

void emit_scatter(const std::vector<std::array<double, 2>>& points,
                  const std::vector<std::string>& labels,
                  const std::filesystem::path& output_path) {
  std::ofstream out(output_path, std::ios::binary);
  if (!out) throw data::IoError("cannot open " + output_path.string() + " for writing");
  out << scatter_svg(points, labels);
  if (!out) throw data::IoError("write failed for " + output_path.string());
}

}  // namespace editvec::eval
