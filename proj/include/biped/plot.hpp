/*
 Copyright 2026 The thruster-biped Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef BIPED_PLOT_HPP
#define BIPED_PLOT_HPP

// Bare-bones SVG line plots. Good enough to eyeball a run.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace biped {

struct Series {
    std::string name;
    std::vector<double> x, y;
};

namespace detail {

inline std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

}  // namespace detail

/// One panel. `points` draws markers instead of joining samples (useful for
/// phase portraits, where the steps are disjoint curves).
inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series, bool points) {
    constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(W) + "\" height=\"" + detail::num(H) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + detail::num(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::escape(title) + "</text>\n";
    o += "<rect x=\"" + detail::num(L) + "\" y=\"" + detail::num(T) + "\" width=\"" + detail::num(W - L - R) +
         "\" height=\"" + detail::num(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
        o += "<text x=\"" + detail::num(px(xv)) + "\" y=\"" + detail::num(H - B + 16) +
             "\" text-anchor=\"middle\">" + detail::num(xv) + "</text>\n";
        o += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(py(yv) + 4) + "\" text-anchor=\"end\">" +
             detail::num(yv) + "</text>\n";
    }
    o += "<text x=\"" + detail::num(W / 2) + "\" y=\"" + detail::num(H - 12) + "\" text-anchor=\"middle\">" +
         detail::escape(xlabel) + "</text>\n";
    o += "<text transform=\"translate(16," + detail::num(H / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(ylabel) + "</text>\n";
    for (size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* c = colors[k % 4];
        if (points) {
            const size_t stride = std::max<size_t>(1, s.x.size() / 4000);
            for (size_t i = 0; i < s.x.size(); i += stride)
                o += "<circle cx=\"" + detail::num(px(s.x[i])) + "\" cy=\"" + detail::num(py(s.y[i])) +
                     "\" r=\"0.8\" fill=\"" + c + "\"/>\n";
        } else {
            o += "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" + std::string(c) + "\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) o += detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i])) + " ";
            o += "\"/>\n";
        }
        o += "<text x=\"" + detail::num(W - R - 6) + "\" y=\"" + detail::num(T + 16 + 14 * k) +
             "\" text-anchor=\"end\" fill=\"" + c + "\">" + detail::escape(s.name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

}  // namespace biped

#endif  // BIPED_PLOT_HPP
