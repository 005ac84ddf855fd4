#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace editvec::eval {

// Deterministic scatter plot: one colored marker per point, a legend
// mapping each distinct label to its color. Same inputs produce
// byte-identical SVG.
std::string scatter_svg(const std::vector<std::array<double, 2>>& points,
                        const std::vector<std::string>& labels);

void emit_scatter(const std::vector<std::array<double, 2>>& points,
                  const std::vector<std::string>& labels,
                  const std::filesystem::path& output_path);

}  // namespace editvec::eval
