#include "projhead/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace projhead {

namespace {

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 160, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series, bool log_x) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.ys[i]) || !std::isfinite(s.xs[i]) || (log_x && s.xs[i] <= 0)) continue;
            xmin = std::min(xmin, tx(s.xs[i]));
            xmax = std::max(xmax, tx(s.xs[i]));
            ymin = std::min(ymin, s.ys[i]);
            ymax = std::max(ymax, s.ys[i]);
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (tx(x) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        const double xs = kLeft + pw * k / 4.0;
        const double ys = kTop + ph * (1.0 - k / 4.0);
        os << "<text x=\"" << xs << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
           << fmt(log_x ? std::pow(10.0, xv) : xv) << "</text>\n";
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << ys + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\" font-size=\"13\">"
       << escape(x_label) << "</text>\n";
    os << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
       << kTop + ph / 2 << ")\">" << escape(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % 8];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
           << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.ys[i]) || (log_x && s.xs[i] <= 0)) continue;
            os << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
        }
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.ys[i]) || (log_x && s.xs[i] <= 0)) continue;
            os << "<circle cx=\"" << px(s.xs[i]) << "\" cy=\"" << py(s.ys[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 30 << "\" y2=\""
           << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << kWidth - kRight + 34 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << escape(s.name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string render_heatmap(const std::string& title, const std::vector<std::string>& col_labels,
                           const std::vector<std::string>& row_labels,
                           const std::vector<std::vector<double>>& values, double vmin, double vmax) {
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const double cw = col_labels.empty() ? pw : pw / static_cast<double>(col_labels.size());
    const double ch = row_labels.empty() ? ph : ph / static_cast<double>(row_labels.size());
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    for (std::size_t r = 0; r < values.size(); ++r) {
        for (std::size_t c = 0; c < values[r].size(); ++c) {
            double s = (values[r][c] - vmin) / (vmax - vmin);
            if (!std::isfinite(s)) s = 0.0;
            s = std::clamp(s, 0.0, 1.0);
            // White-to-blue ramp.
            const int red = static_cast<int>(255 * (1.0 - 0.85 * s));
            const int green = static_cast<int>(255 * (1.0 - 0.6 * s));
            const double x = kLeft + cw * static_cast<double>(c);
            const double y = kTop + ph - ch * static_cast<double>(r + 1);
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch
               << "\" fill=\"rgb(" << red << ',' << green << ",255)\"/>\n";
            os << "<text x=\"" << x + cw / 2 << "\" y=\"" << y + ch / 2 + 4 << "\" text-anchor=\"middle\" font-size=\"9\">"
               << fmt(values[r][c]) << "</text>\n";
        }
    }
    for (std::size_t c = 0; c < col_labels.size(); ++c)
        os << "<text x=\"" << kLeft + cw * (static_cast<double>(c) + 0.5) << "\" y=\"" << kTop + ph + 16
           << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(col_labels[c]) << "</text>\n";
    for (std::size_t r = 0; r < row_labels.size(); ++r)
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + ph - ch * (static_cast<double>(r) + 0.5) + 4
           << "\" text-anchor=\"end\" font-size=\"10\">" << escape(row_labels[r]) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace projhead
