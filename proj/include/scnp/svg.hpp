#pragma once

#include <string>
#include <vector>

namespace scnp {

// One plotted series. For line charts x/y are point coordinates; for bar
// charts y holds one value per group and x is ignored. `err` (when not
// empty) gives a symmetric error bar per point.
struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> err;
};

// Standalone SVG documents with fixed size and palette; identical inputs
// yield identical bytes.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series);

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& groups,
                          const std::vector<SvgSeries>& series);

}  // namespace scnp
