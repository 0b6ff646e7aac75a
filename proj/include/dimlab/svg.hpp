#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace dimlab {

struct SvgSeries {
  std::string label;
  std::string color = "#1f6f8b";
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline void svg_num(std::string& s, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  s += buf;
}

inline std::string svg_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

// Single-file line plot: axes, five ticks per axis, one polyline per series.
// Non-finite samples break the polyline instead of distorting the range.
inline std::string svg_plot(const std::vector<SvgSeries>& series, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            int width = 640, int height = 420) {
  const double ml = 62, mr = 18, mt = 34, mb = 46;
  const double pw = width - ml - mr, ph = height - mt - mb;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool seen = false;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!seen) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        seen = true;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
       "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
       " " + std::to_string(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(width / 2) +
       "\" y=\"20\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">" +
       title + "</text>\n";

  char line[256];
  std::snprintf(line, sizeof line,
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                ml, mt + ph, ml + pw, mt + ph);
  s += line;
  std::snprintf(line, sizeof line,
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                ml, mt, ml, mt + ph);
  s += line;
  for (int t = 0; t <= 4; ++t) {
    double xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
    std::snprintf(line, sizeof line,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                  px(xv), mt + ph, px(xv), mt + ph + 5);
    s += line;
    std::snprintf(line, sizeof line,
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" font-family=\"monospace\" "
                  "font-size=\"11\">%s</text>\n",
                  px(xv), mt + ph + 18, detail::svg_tick(xv).c_str());
    s += line;
    std::snprintf(line, sizeof line,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                  ml - 5, py(yv), ml, py(yv));
    s += line;
    std::snprintf(line, sizeof line,
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\" font-family=\"monospace\" "
                  "font-size=\"11\">%s</text>\n",
                  ml - 8, py(yv) + 4, detail::svg_tick(yv).c_str());
    s += line;
  }
  std::snprintf(line, sizeof line,
                "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" font-family=\"monospace\" "
                "font-size=\"12\">%s</text>\n",
                ml + pw / 2, mt + ph + 38, xlabel.c_str());
  s += line;
  std::snprintf(line, sizeof line,
                "<text x=\"16\" y=\"%.2f\" text-anchor=\"middle\" font-family=\"monospace\" "
                "font-size=\"12\" transform=\"rotate(-90 16 %.2f)\">%s</text>\n",
                mt + ph / 2, mt + ph / 2, ylabel.c_str());
  s += line;

  int li = 0;
  for (const auto& sr : series) {
    std::string pts;
    bool open = false;
    auto flush = [&] {
      if (!pts.empty())
        s += "<polyline fill=\"none\" stroke=\"" + sr.color + "\" stroke-width=\"1.5\" points=\"" +
             pts + "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < sr.x.size() && i < sr.y.size(); ++i) {
      if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) {
        flush();
        open = false;
        continue;
      }
      if (open) pts += ' ';
      detail::svg_num(pts, px(sr.x[i]));
      pts += ',';
      detail::svg_num(pts, py(sr.y[i]));
      open = true;
    }
    flush();
    if (!sr.label.empty()) {
      std::snprintf(line, sizeof line,
                    "<text x=\"%.2f\" y=\"%.2f\" font-family=\"monospace\" font-size=\"11\" "
                    "fill=\"%s\">%s</text>\n",
                    ml + pw - 150.0, mt + 14.0 + 14.0 * li, sr.color.c_str(), sr.label.c_str());
      s += line;
      ++li;
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace dimlab
