// Small SVG renderers for result previews (line charts and heatmaps).
#pragma once

#include <string>
#include <vector>

namespace projhead {

struct Series {
    std::string name;
    std::vector<double> xs;
    std::vector<double> ys;
    bool dashed = false;
};

std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series, bool log_x = false);

// values[row][col]; rows are drawn bottom-up.
std::string render_heatmap(const std::string& title, const std::vector<std::string>& col_labels,
                           const std::vector<std::string>& row_labels,
                           const std::vector<std::vector<double>>& values, double vmin, double vmax);

}  // namespace projhead
