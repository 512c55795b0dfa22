#include "cpt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace cpt {

namespace {

constexpr int kWidth = 640, kHeight = 480;
constexpr int kMarginLeft = 60, kMarginRight = 20, kMarginTop = 40, kMarginBottom = 50;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void include(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad() {
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
  }
};

}  // namespace

std::string render_curves_svg(const std::string& title, const std::string& x_label,
                              const std::string& y_label, std::span<const SvgSeries> series,
                              bool with_diagonal) {
  Range rx, ry;
  for (const auto& s : series) {
    for (double v : s.x) rx.include(v);
    for (double v : s.y) ry.include(v);
  }
  if (!std::isfinite(rx.lo)) rx = {0.0, 1.0};
  if (!std::isfinite(ry.lo)) ry = {0.0, 1.0};
  rx.pad();
  ry.pad();

  auto px = [&](double v) {
    return kMarginLeft + (v - rx.lo) / (rx.hi - rx.lo) * (kWidth - kMarginLeft - kMarginRight);
  };
  auto py = [&](double v) {
    return kHeight - kMarginBottom -
           (v - ry.lo) / (ry.hi - ry.lo) * (kHeight - kMarginTop - kMarginBottom);
  };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
                    "\" height=\"" + std::to_string(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\">" +
         title + "</text>\n";
  // axes
  out += "<line x1=\"" + num(px(rx.lo)) + "\" y1=\"" + num(py(ry.lo)) + "\" x2=\"" +
         num(px(rx.hi)) + "\" y2=\"" + num(py(ry.lo)) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(px(rx.lo)) + "\" y1=\"" + num(py(ry.lo)) + "\" x2=\"" +
         num(px(rx.lo)) + "\" y2=\"" + num(py(ry.hi)) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"" + std::to_string(kHeight - 12) +
         "\" text-anchor=\"middle\">" + x_label + "</text>\n";
  out += "<text x=\"16\" y=\"" + std::to_string(kHeight / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + std::to_string(kHeight / 2) +
         ")\">" + y_label + "</text>\n";
  for (double f : {0.0, 0.5, 1.0}) {
    const double xv = rx.lo + f * (rx.hi - rx.lo);
    const double yv = ry.lo + f * (ry.hi - ry.lo);
    out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(py(ry.lo) + 16) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + num(xv) + "</text>\n";
    out += "<text x=\"" + num(px(rx.lo) - 6) + "\" y=\"" + num(py(yv) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + num(yv) + "</text>\n";
  }
  if (with_diagonal) {
    const double lo = std::max(rx.lo, ry.lo), hi = std::min(rx.hi, ry.hi);
    out += "<line x1=\"" + num(px(lo)) + "\" y1=\"" + num(py(lo)) + "\" x2=\"" + num(px(hi)) +
           "\" y2=\"" + num(py(hi)) + "\" stroke=\"#999\" stroke-dasharray=\"4\"/>\n";
  }
  int legend_y = kMarginTop;
  for (const auto& s : series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"/>\n";
    if (!s.label.empty()) {
      out += "<text x=\"" + std::to_string(kWidth - kMarginRight - 4) + "\" y=\"" +
             std::to_string(legend_y) + "\" text-anchor=\"end\" font-size=\"12\" fill=\"" +
             s.color + "\">" + s.label + "</text>\n";
      legend_y += 16;
    }
  }
  out += "</svg>\n";
  return out;
}

std::string render_matrix_svg(const std::string& title, const Eigen::MatrixXd& m, double vmin,
                              double vmax) {
  const int h = int(m.rows()), w = int(m.cols());
  const double cell_w = double(kWidth - kMarginLeft - kMarginRight) / std::max(1, w);
  const double cell_h = double(kHeight - kMarginTop - kMarginBottom) / std::max(1, h);

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
                    "\" height=\"" + std::to_string(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\">" +
         title + "</text>\n";
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double v = m(i, j);
      if (std::isnan(v)) continue;
      double f = (v - vmin) / (vmax - vmin);
      f = std::clamp(f, 0.0, 1.0);
      const int r = int(255 * f);
      const int b = int(255 * (1.0 - f));
      char color[8];
      std::snprintf(color, sizeof(color), "#%02x40%02x", r, b);
      // row 0 drawn at the bottom (ascending latitude upward)
      const double x = kMarginLeft + j * cell_w;
      const double y = kHeight - kMarginBottom - (i + 1) * cell_h;
      out += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell_w) +
             "\" height=\"" + num(cell_h) + "\" fill=\"" + color + "\"/>\n";
    }
  out += "</svg>\n";
  return out;
}

}  // namespace cpt
