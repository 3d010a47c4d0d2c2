#pragma once

#include <string>
#include <vector>

namespace cmflow::svg {

// Self-contained SVG heatmap of a row-major mesh x mesh grid on [0,1]^2.
// NaN cells are drawn grey; the legend shows the value range.
void render_heatmap(const std::string& path, int mesh, const std::vector<double>& values,
                    const std::string& title = "");

// Line plot of (x, y) with optional logarithmic y-axis (non-positive values
// are dropped on the log scale).
void render_curve(const std::string& path, const std::vector<double>& x,
                  const std::vector<double>& y, bool log_y,
                  const std::string& title = "");

}  // namespace cmflow::svg
