#pragma once

// Report rendering: histogram / dot-and-interval / line charts as
// self-contained SVG, plus the collated CSV tables behind them. CSV is the
// canonical output; SVG is derived from the same numbers.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "serpaudit/csv.hpp"

namespace serpaudit::report {

struct Margins {
    double left = 55, right = 15, top = 30, bottom = 40;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline void text(std::ostringstream& os, double x, double y, const std::string& s, const char* anchor = "middle",
                 int size = 11) {
    os << "<text x='" << fmt(x) << "' y='" << fmt(y) << "' font-size='" << size
       << "' font-family='sans-serif' text-anchor='" << anchor << "'>" << s << "</text>\n";
}

inline void line(std::ostringstream& os, double x1, double y1, double x2, double y2, const char* stroke,
                 double width = 1.0, const char* dash = nullptr) {
    os << "<line x1='" << fmt(x1) << "' y1='" << fmt(y1) << "' x2='" << fmt(x2) << "' y2='" << fmt(y2)
       << "' stroke='" << stroke << "' stroke-width='" << fmt(width) << "'";
    if (dash) os << " stroke-dasharray='" << dash << "'";
    os << "/>\n";
}

struct Scale {
    double lo = 0, hi = 1, px_lo = 0, px_hi = 1;
    double operator()(double v) const {
        if (hi == lo) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

inline void axes(std::ostringstream& os, const Scale& xs, const Scale& ys, double w, double h, const Margins& m,
                 const std::string& xlabel, const std::string& ylabel) {
    line(os, m.left, h - m.bottom, w - m.right, h - m.bottom, "#333");
    line(os, m.left, m.top, m.left, h - m.bottom, "#333");
    for (int i = 0; i <= 4; ++i) {
        const double vx = xs.lo + (xs.hi - xs.lo) * i / 4.0;
        text(os, xs(vx), h - m.bottom + 16, fmt(vx));
        const double vy = ys.lo + (ys.hi - ys.lo) * i / 4.0;
        text(os, m.left - 6, ys(vy) + 4, fmt(vy), "end", 10);
    }
    text(os, (m.left + w - m.right) / 2, h - 6, xlabel);
    os << "<text x='14' y='" << fmt((m.top + h - m.bottom) / 2)
       << "' font-size='11' font-family='sans-serif' text-anchor='middle' transform='rotate(-90 14 "
       << fmt((m.top + h - m.bottom) / 2) << ")'>" << ylabel << "</text>\n";
}

}  // namespace detail

struct Histogram {
    std::vector<double> bin_edges;  // size bins+1
    std::vector<std::size_t> counts;
    double mean = 0.0;
    double median = 0.0;
    std::size_t n = 0;
};

inline Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
    Histogram h;
    h.n = values.size();
    h.counts.assign(bins, 0);
    for (std::size_t i = 0; i <= bins; ++i) h.bin_edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
    if (values.empty()) return h;
    double sum = 0.0;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    for (double v : values) {
        sum += v;
        auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;
        ++h.counts[b];
    }
    h.mean = sum / static_cast<double>(values.size());
    const std::size_t mid = sorted.size() / 2;
    h.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return h;
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
    csv::write_row(os, {"bin_lo", "bin_hi", "count"});
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        csv::write_row(os, {csv::format_double(h.bin_edges[i]), csv::format_double(h.bin_edges[i + 1]),
                            std::to_string(h.counts[i])});
    }
}

// Histogram with a dotted median line and a dashed mean line.
inline std::string svg_histogram(const Histogram& h, const std::string& title, const std::string& xlabel) {
    const double w = 460, ht = 300;
    const Margins m;
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << ht << "'>\n";
    detail::text(os, w / 2, 18, title, "middle", 13);
    std::size_t max_count = 1;
    for (auto c : h.counts) max_count = std::max(max_count, c);
    detail::Scale xs{h.bin_edges.front(), h.bin_edges.back(), m.left, w - m.right};
    detail::Scale ys{0.0, static_cast<double>(max_count), ht - m.bottom, m.top};
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double x0 = xs(h.bin_edges[i]);
        const double x1 = xs(h.bin_edges[i + 1]);
        const double y = ys(static_cast<double>(h.counts[i]));
        os << "<rect x='" << detail::fmt(x0) << "' y='" << detail::fmt(y) << "' width='" << detail::fmt(x1 - x0)
           << "' height='" << detail::fmt(ht - m.bottom - y) << "' fill='#7aa6c2' stroke='#40657e'/>\n";
    }
    if (h.n > 0) {
        detail::line(os, xs(h.median), m.top, xs(h.median), ht - m.bottom, "#000", 1.5, "2,3");
        detail::line(os, xs(h.mean), m.top, xs(h.mean), ht - m.bottom, "#e07b39", 1.5, "7,4");
    }
    detail::axes(os, xs, ys, w, ht, m, xlabel, "count");
    os << "</svg>\n";
    return os.str();
}

struct DotCi {
    std::string label;
    double x = 0.0;  // horizontal position (e.g. visit level)
    double estimate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Marginal-effect chart: one dot with a vertical 95% bar per entry.
inline std::string svg_dot_ci(std::span<const DotCi> points, const std::string& title, const std::string& xlabel,
                              const std::string& ylabel) {
    const double w = 520, ht = 320;
    const Margins m;
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << ht << "'>\n";
    detail::text(os, w / 2, 18, title, "middle", 13);
    if (!points.empty()) {
        double xlo = points.front().x, xhi = points.front().x, ylo = 0.0, yhi = 0.0;
        for (const auto& p : points) {
            xlo = std::min(xlo, p.x);
            xhi = std::max(xhi, p.x);
            ylo = std::min(ylo, p.ci_lo);
            yhi = std::max(yhi, p.ci_hi);
        }
        if (xhi == xlo) xhi = xlo + 1.0;
        const double pad = 0.08 * (yhi - ylo + 1e-9);
        detail::Scale xs{xlo - 0.5, xhi + 0.5, m.left, w - m.right};
        detail::Scale ys{ylo - pad, yhi + pad, ht - m.bottom, m.top};
        detail::line(os, m.left, ys(0.0), w - m.right, ys(0.0), "#999", 1.0, "3,3");
        for (const auto& p : points) {
            detail::line(os, xs(p.x), ys(p.ci_lo), xs(p.x), ys(p.ci_hi), "#40657e", 1.6);
            os << "<circle cx='" << detail::fmt(xs(p.x)) << "' cy='" << detail::fmt(ys(p.estimate))
               << "' r='3.2' fill='#1f4e79'/>\n";
        }
        detail::axes(os, xs, ys, w, ht, m, xlabel, ylabel);
    }
    os << "</svg>\n";
    return os.str();
}

// Line chart with one series per label (threshold sweeps).
inline std::string svg_lines(const std::vector<double>& x,
                             const std::map<std::string, std::vector<double>>& series, const std::string& title,
                             const std::string& xlabel, const std::string& ylabel) {
    const double w = 520, ht = 320;
    const Margins m;
    static const char* palette[] = {"#1f4e79", "#e07b39", "#2e8b57", "#8b3a62"};
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << ht << "'>\n";
    detail::text(os, w / 2, 18, title, "middle", 13);
    if (!x.empty() && !series.empty()) {
        double ylo = 1e300, yhi = -1e300;
        for (const auto& [_, ys] : series) {
            for (double v : ys) {
                if (std::isnan(v)) continue;
                ylo = std::min(ylo, v);
                yhi = std::max(yhi, v);
            }
        }
        if (ylo > yhi) {
            ylo = 0;
            yhi = 1;
        }
        const double pad = 0.08 * (yhi - ylo + 1e-9);
        detail::Scale xs{x.front(), x.back() == x.front() ? x.front() + 1 : x.back(), m.left, w - m.right};
        detail::Scale ys{ylo - pad, yhi + pad, ht - m.bottom, m.top};
        std::size_t si = 0;
        double legend_y = m.top + 4;
        for (const auto& [name, vals] : series) {
            const char* color = palette[si++ % 4];
            std::ostringstream path;
            bool pen_down = false;
            for (std::size_t i = 0; i < x.size() && i < vals.size(); ++i) {
                if (std::isnan(vals[i])) {
                    pen_down = false;
                    continue;
                }
                path << (pen_down ? " L " : " M ") << detail::fmt(xs(x[i])) << ' ' << detail::fmt(ys(vals[i]));
                pen_down = true;
            }
            os << "<path d='" << path.str() << "' fill='none' stroke='" << color << "' stroke-width='1.8'/>\n";
            os << "<rect x='" << detail::fmt(w - m.right - 150) << "' y='" << detail::fmt(legend_y - 8)
               << "' width='10' height='10' fill='" << color << "'/>\n";
            detail::text(os, w - m.right - 136, legend_y, name, "start", 10);
            legend_y += 14;
        }
        detail::axes(os, xs, ys, w, ht, m, xlabel, ylabel);
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace serpaudit::report
