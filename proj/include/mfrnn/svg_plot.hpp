#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "mfrnn/common.hpp"

namespace mfrnn {

// Minimal standalone SVG line charts (linear or log axes, legend, optional
// straight-line overlay). Data fidelity lives in the CSV files; these are
// convenience figures, emitted without timestamps or other volatile metadata.

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false;
  bool logy = false;
  bool overlay = false;  // y = overlay_a + overlay_b * x in axis coordinates
  double overlay_a = 0.0, overlay_b = 0.0;
  std::string overlay_label;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

inline bool usable(double v, bool logscale) {
  return std::isfinite(v) && (!logscale || v > 0.0);
}

inline void axis_range(std::vector<double>& lo_hi, bool logscale) {
  double& lo = lo_hi[0];
  double& hi = lo_hi[1];
  if (!(lo < hi)) {
    lo -= 1.0;
    hi += 1.0;
  }
  if (logscale) return;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

}  // namespace detail

inline void render_line_chart(const PlotSpec& spec,
                              const std::vector<Series>& series,
                              const std::string& path) {
  const double W = 860, H = 560, ml = 80, mr = 180, mt = 50, mb = 60;
  const double pw = W - ml - mr, ph = H - mt - mb;

  std::vector<double> xr{1e300, -1e300}, yr{1e300, -1e300};
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!detail::usable(s.x[i], spec.logx) || !detail::usable(s.y[i], spec.logy))
        continue;
      const double xv = spec.logx ? std::log10(s.x[i]) : s.x[i];
      const double yv = spec.logy ? std::log10(s.y[i]) : s.y[i];
      xr[0] = std::min(xr[0], xv);
      xr[1] = std::max(xr[1], xv);
      yr[0] = std::min(yr[0], yv);
      yr[1] = std::max(yr[1], yv);
    }
  if (xr[0] > xr[1]) xr = {0.0, 1.0};
  if (yr[0] > yr[1]) yr = {0.0, 1.0};
  detail::axis_range(xr, spec.logx);
  detail::axis_range(yr, spec.logy);

  auto px = [&](double xv) { return ml + (xv - xr[0]) / (xr[1] - xr[0]) * pw; };
  auto py = [&](double yv) { return mt + ph - (yv - yr[0]) / (yr[1] - yr[0]) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                                  "#bcbd22", "#e377c2"};

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("render_line_chart: cannot open " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"28\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"17\">"
     << spec.title << "</text>\n";

  // frame
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  auto emit_ticks = [&](bool horizontal, bool logscale,
                        const std::vector<double>& range) {
    std::vector<double> ticks;
    if (logscale) {
      for (double e = std::ceil(range[0] - 1e-9); e <= range[1] + 1e-9; e += 1.0)
        ticks.push_back(e);
      while (ticks.size() > 12) {  // thin out dense decade grids
        std::vector<double> t2;
        for (size_t i = 0; i < ticks.size(); i += 2) t2.push_back(ticks[i]);
        ticks = t2;
      }
    } else {
      const double span = range[1] - range[0];
      double step = std::pow(10.0, std::floor(std::log10(span / 5.0)));
      if (span / step > 10) step *= 2;
      if (span / step > 10) step *= 2.5;
      for (double v = std::ceil(range[0] / step) * step; v <= range[1] + 1e-12 * span;
           v += step)
        ticks.push_back(v);
    }
    for (double tv : ticks) {
      char lbl[32];
      if (logscale)
        std::snprintf(lbl, sizeof(lbl), "1e%g", tv);
      else
        std::snprintf(lbl, sizeof(lbl), "%.4g", tv);
      if (horizontal) {
        const double x = px(tv);
        os << "<line x1=\"" << detail::svg_num(x) << "\" y1=\"" << mt + ph
           << "\" x2=\"" << detail::svg_num(x) << "\" y2=\"" << mt + ph + 5
           << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << detail::svg_num(x) << "\" y=\"" << mt + ph + 20
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"12\">"
           << lbl << "</text>\n";
      } else {
        const double y = py(tv);
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::svg_num(y)
           << "\" x2=\"" << ml << "\" y2=\"" << detail::svg_num(y)
           << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << ml - 8 << "\" y=\"" << detail::svg_num(y + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
              "font-size=\"12\">"
           << lbl << "</text>\n";
      }
    }
  };
  emit_ticks(true, spec.logx, xr);
  emit_ticks(false, spec.logy, yr);

  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 15
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << spec.xlabel << "</text>\n"
     << "<text x=\"20\" y=\"" << mt + ph / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
        "transform=\"rotate(-90 20 "
     << mt + ph / 2 << ")\">" << spec.ylabel << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % 10];
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!detail::usable(s.x[i], spec.logx) || !detail::usable(s.y[i], spec.logy))
        continue;
      const double xv = spec.logx ? std::log10(s.x[i]) : s.x[i];
      const double yv = spec.logy ? std::log10(s.y[i]) : s.y[i];
      pts += detail::svg_num(px(xv)) + "," + detail::svg_num(py(yv)) + " ";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
    const double ly = mt + 18 + 18 * static_cast<double>(si);
    os << "<line x1=\"" << W - mr + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
       << W - mr + 36 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << W - mr + 42 << "\" y=\"" << ly
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
       << "</text>\n";
  }

  if (spec.overlay) {
    const double y0 = spec.overlay_a + spec.overlay_b * xr[0];
    const double y1 = spec.overlay_a + spec.overlay_b * xr[1];
    os << "<line x1=\"" << detail::svg_num(px(xr[0])) << "\" y1=\""
       << detail::svg_num(py(std::clamp(y0, yr[0], yr[1]))) << "\" x2=\""
       << detail::svg_num(px(xr[1])) << "\" y2=\""
       << detail::svg_num(py(std::clamp(y1, yr[0], yr[1])))
       << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
    if (!spec.overlay_label.empty()) {
      const double ly = mt + 18 + 18 * static_cast<double>(series.size());
      os << "<text x=\"" << W - mr + 12 << "\" y=\"" << ly
         << "\" font-family=\"sans-serif\" font-size=\"12\">"
         << spec.overlay_label << "</text>\n";
    }
  }
  os << "</svg>\n";
  if (!os) throw IoError("render_line_chart: write failed " + path);
}

}  // namespace mfrnn
