#include "scnp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "scnp/error.hpp"

namespace scnp {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 560.0;  // legend sits to the right of this
constexpr double kTop = 46.0;
constexpr double kBottom = 390.0;

const char* const kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                "#66ccee", "#aa3377", "#999933", "#222222"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Tick step of the form {1,2,5}*10^k giving roughly `target` divisions.
double nice_step(double range, int target) {
    if (range <= 0.0) return 1.0;
    const double raw = range / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (const double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw) return mag * m;
    }
    return mag * 10.0;
}

struct Scale {
    double lo = 0.0, hi = 1.0, out_lo = 0.0, out_hi = 1.0;
    double operator()(double v) const {
        return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
    }
};

void open_doc(std::ostringstream& s, const std::string& title) {
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
    s << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
    s << "<text x=\"" << (kLeft + kRight) / 2.0
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\" fill=\"#222\">"
      << esc(title) << "</text>\n";
}

void draw_frame_and_y_axis(std::ostringstream& s, const Scale& ys,
                           const std::string& y_label) {
    s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kBottom << "\" stroke=\"#444\"/>\n";
    s << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
      << "\" y2=\"" << kBottom << "\" stroke=\"#444\"/>\n";
    const double step = nice_step(ys.hi - ys.lo, 5);
    for (double v = std::ceil(ys.lo / step) * step; v <= ys.hi + 1e-12; v += step) {
        const double y = ys(v);
        s << "<line x1=\"" << kLeft << "\" y1=\"" << num(y) << "\" x2=\"" << kRight
          << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
        s << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
             "fill=\"#333\">"
          << tick_label(v) << "</text>\n";
    }
    s << "<text x=\"18\" y=\"" << (kTop + kBottom) / 2.0
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#222\" transform=\"rotate(-90 18 "
      << (kTop + kBottom) / 2.0 << ")\">" << esc(y_label) << "</text>\n";
}

void draw_legend(std::ostringstream& s, const std::vector<SvgSeries>& series) {
    double y = kTop + 8;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        s << "<rect x=\"" << kRight + 14 << "\" y=\"" << num(y - 9)
          << "\" width=\"14\" height=\"10\" fill=\"" << color << "\"/>\n";
        s << "<text x=\"" << kRight + 32 << "\" y=\"" << num(y)
          << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">"
          << esc(series[i].label) << "</text>\n";
        y += 18;
    }
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series) {
    if (series.empty()) throw ConfigError("line chart needs at least one series");
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& sr : series) {
        if (sr.x.size() != sr.y.size() || (!sr.err.empty() && sr.err.size() != sr.y.size())) {
            throw LengthMismatch("series coordinate lengths disagree");
        }
        for (std::size_t i = 0; i < sr.x.size(); ++i) {
            const double e = sr.err.empty() ? 0.0 : sr.err[i];
            if (first) {
                xmin = xmax = sr.x[i];
                ymin = sr.y[i] - e;
                ymax = sr.y[i] + e;
                first = false;
            } else {
                xmin = std::min(xmin, sr.x[i]);
                xmax = std::max(xmax, sr.x[i]);
                ymin = std::min(ymin, sr.y[i] - e);
                ymax = std::max(ymax, sr.y[i] + e);
            }
        }
    }
    if (first) throw ConfigError("line chart needs at least one point");
    if (xmax == xmin) xmax = xmin + 1.0;
    const double ypad = (ymax - ymin) * 0.06 + 1e-9;
    ymin -= ypad;
    ymax += ypad;

    const Scale xs{xmin, xmax, kLeft, kRight};
    const Scale ys{ymin, ymax, kBottom, kTop};

    std::ostringstream s;
    open_doc(s, title);
    draw_frame_and_y_axis(s, ys, y_label);
    const double xstep = nice_step(xmax - xmin, 7);
    for (double v = std::ceil(xmin / xstep) * xstep; v <= xmax + 1e-12; v += xstep) {
        const double x = xs(v);
        s << "<line x1=\"" << num(x) << "\" y1=\"" << kBottom << "\" x2=\"" << num(x)
          << "\" y2=\"" << kBottom + 5 << "\" stroke=\"#444\"/>\n";
        s << "<text x=\"" << num(x) << "\" y=\"" << kBottom + 19
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
             "fill=\"#333\">"
          << tick_label(v) << "</text>\n";
    }
    s << "<text x=\"" << (kLeft + kRight) / 2.0 << "\" y=\"" << kBottom + 38
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#222\">"
      << esc(x_label) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& sr = series[i];
        const char* color = kPalette[i % kPaletteSize];
        if (!sr.err.empty()) {
            for (std::size_t k = 0; k < sr.x.size(); ++k) {
                if (sr.err[k] <= 0.0) continue;
                const double x = xs(sr.x[k]);
                s << "<line x1=\"" << num(x) << "\" y1=\""
                  << num(ys(sr.y[k] - sr.err[k])) << "\" x2=\"" << num(x)
                  << "\" y2=\"" << num(ys(sr.y[k] + sr.err[k])) << "\" stroke=\""
                  << color << "\" stroke-opacity=\"0.45\"/>\n";
            }
        }
        s << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t k = 0; k < sr.x.size(); ++k) {
            if (k) s << ' ';
            s << num(xs(sr.x[k])) << ',' << num(ys(sr.y[k]));
        }
        s << "\"/>\n";
        if (sr.x.size() <= 40) {
            for (std::size_t k = 0; k < sr.x.size(); ++k) {
                s << "<circle cx=\"" << num(xs(sr.x[k])) << "\" cy=\""
                  << num(ys(sr.y[k])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
            }
        }
    }
    draw_legend(s, series);
    s << "</svg>\n";
    return s.str();
}

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& groups,
                          const std::vector<SvgSeries>& series) {
    if (groups.empty() || series.empty()) {
        throw ConfigError("bar chart needs groups and series");
    }
    double ymax = 0.0;
    for (const auto& sr : series) {
        if (sr.y.size() != groups.size() ||
            (!sr.err.empty() && sr.err.size() != groups.size())) {
            throw LengthMismatch("bar series length does not match group count");
        }
        for (std::size_t i = 0; i < sr.y.size(); ++i) {
            ymax = std::max(ymax, sr.y[i] + (sr.err.empty() ? 0.0 : sr.err[i]));
        }
    }
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.08;

    const Scale ys{0.0, ymax, kBottom, kTop};
    std::ostringstream s;
    open_doc(s, title);
    draw_frame_and_y_axis(s, ys, y_label);

    const double slot = (kRight - kLeft) / static_cast<double>(groups.size());
    const double band = slot * 0.8;
    const double bar = band / static_cast<double>(series.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double x0 = kLeft + slot * static_cast<double>(g) + slot * 0.1;
        for (std::size_t i = 0; i < series.size(); ++i) {
            const double v = series[i].y[g];
            const double x = x0 + bar * static_cast<double>(i);
            const double top = ys(v);
            s << "<rect x=\"" << num(x) << "\" y=\"" << num(top) << "\" width=\""
              << num(bar * 0.92) << "\" height=\"" << num(kBottom - top)
              << "\" fill=\"" << kPalette[i % kPaletteSize] << "\"/>\n";
            if (!series[i].err.empty() && series[i].err[g] > 0.0) {
                const double cx = x + bar * 0.46;
                const double e = series[i].err[g];
                s << "<line x1=\"" << num(cx) << "\" y1=\"" << num(ys(v - e))
                  << "\" x2=\"" << num(cx) << "\" y2=\"" << num(ys(v + e))
                  << "\" stroke=\"#333\"/>\n";
                s << "<line x1=\"" << num(cx - 3) << "\" y1=\"" << num(ys(v + e))
                  << "\" x2=\"" << num(cx + 3) << "\" y2=\"" << num(ys(v + e))
                  << "\" stroke=\"#333\"/>\n";
                s << "<line x1=\"" << num(cx - 3) << "\" y1=\"" << num(ys(v - e))
                  << "\" x2=\"" << num(cx + 3) << "\" y2=\"" << num(ys(v - e))
                  << "\" stroke=\"#333\"/>\n";
            }
        }
        s << "<text x=\"" << num(kLeft + slot * (static_cast<double>(g) + 0.5))
          << "\" y=\"" << kBottom + 19
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
             "fill=\"#333\">"
          << esc(groups[g]) << "</text>\n";
    }
    draw_legend(s, series);
    s << "</svg>\n";
    return s.str();
}

}  // namespace scnp
