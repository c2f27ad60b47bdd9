// Copyright 2026 The tsavg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TSAVG_SVG_HPP
#define TSAVG_SVG_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace tsavg {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Fixed 800x600 line plot, log-scaled y (and optionally x).
struct SvgPlot {
    std::string title;
    std::string x_label = "s";
    std::string y_label;
    bool log_x = false;
    std::vector<SvgSeries> series;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace detail

/// Renders the plot. Nonpositive y values sit on the bottom edge, so an
/// identically zero series shows as a flat line.
inline std::string render_svg(const SvgPlot& plot) {
    constexpr double W = 800, H = 600, L = 90, R = 170, T = 50, B = 60;
    constexpr std::array<const char*, 8> palette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const auto& s : plot.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double x = s.x[i], y = s.y[i];
            if (!std::isfinite(x) || (plot.log_x && x <= 0.0)) continue;
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            if (std::isfinite(y) && y > 0.0) {
                ylo = std::min(ylo, y);
                yhi = std::max(yhi, y);
            }
        }
    }
    if (!(xlo < xhi)) {
        xlo = std::isfinite(xlo) ? xlo - 1.0 : 0.0;
        xhi = xlo + 2.0;
        if (plot.log_x) xlo = std::max(xlo, 1.0);
    }
    double dlo = std::isfinite(ylo) ? std::floor(std::log10(ylo)) : -16.0;
    double dhi = std::isfinite(yhi) ? std::ceil(std::log10(yhi)) : 0.0;
    if (dhi <= dlo) dhi = dlo + 1.0;
    const double lxlo = plot.log_x ? std::log10(xlo) : xlo;
    const double lxhi = plot.log_x ? std::log10(xhi) : xhi;

    auto px = [&](double x) {
        const double v = plot.log_x ? std::log10(x) : x;
        return L + (W - L - R) * (v - lxlo) / (lxhi - lxlo);
    };
    auto py = [&](double y) {
        const double v = (std::isfinite(y) && y > 0.0) ? std::clamp(std::log10(y), dlo, dhi) : dlo;
        return T + (H - T - B) * (dhi - v) / (dhi - dlo);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
          "viewBox=\"0 0 800 600\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    os << "<text x=\"" << detail::svg_num(W / 2) << "\" y=\"28\" text-anchor=\"middle\" "
       << "font-size=\"16\">" << detail::svg_escape(plot.title) << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (W - L - R) << "\" height=\""
       << (H - T - B) << "\" fill=\"none\" stroke=\"black\"/>\n";

    // Decade grid on y; at most ~10 labels.
    const int span = static_cast<int>(dhi - dlo);
    const int every = std::max(1, (span + 9) / 10);
    for (int d = static_cast<int>(dlo); d <= static_cast<int>(dhi); ++d) {
        if ((d - static_cast<int>(dlo)) % every != 0) continue;
        const double y = py(std::pow(10.0, d));
        os << "<line x1=\"" << L << "\" y1=\"" << detail::svg_num(y) << "\" x2=\"" << (W - R)
           << "\" y2=\"" << detail::svg_num(y) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << (L - 6) << "\" y=\"" << detail::svg_num(y + 4)
           << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double v = lxlo + (lxhi - lxlo) * i / 5.0;
        const double x = plot.log_x ? std::pow(10.0, v) : v;
        const double X = px(x);
        os << "<text x=\"" << detail::svg_num(X) << "\" y=\"" << (H - B + 18)
           << "\" text-anchor=\"middle\">" << detail::tick_label(x) << "</text>\n";
    }
    os << "<text x=\"" << detail::svg_num(L + (W - L - R) / 2) << "\" y=\"" << (H - 18)
       << "\" text-anchor=\"middle\">" << detail::svg_escape(plot.x_label) << "</text>\n";
    os << "<text x=\"22\" y=\"" << detail::svg_num(T + (H - T - B) / 2)
       << "\" text-anchor=\"middle\" transform=\"rotate(-90 22 "
       << detail::svg_num(T + (H - T - B) / 2) << ")\">" << detail::svg_escape(plot.y_label)
       << "</text>\n";

    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        const char* color = palette[k % palette.size()];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        const std::size_t stride = std::max<std::size_t>(1, n / 1500);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (i % stride != 0 && i + 1 != n) continue;
            if (!std::isfinite(s.x[i]) || (plot.log_x && s.x[i] <= 0.0)) continue;
            if (!first) os << ' ';
            os << detail::svg_num(px(s.x[i])) << ',' << detail::svg_num(py(s.y[i]));
            first = false;
        }
        os << "\"/>\n";
        const double ly = T + 12 + 20.0 * static_cast<double>(k);
        os << "<line x1=\"" << (W - R + 12) << "\" y1=\"" << detail::svg_num(ly) << "\" x2=\""
           << (W - R + 36) << "\" y2=\"" << detail::svg_num(ly) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << (W - R + 42) << "\" y=\"" << detail::svg_num(ly + 4) << "\">"
           << detail::svg_escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace tsavg

#endif  // TSAVG_SVG_HPP
