#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

namespace cpt {

/// Minimal static SVG output for quick inspection of the verification
/// figures; one x/y plot with optional multiple labelled series.
struct SvgSeries {
  std::vector<double> x, y;
  std::string label;
  std::string color = "#1f6fb2";
};

std::string render_curves_svg(const std::string& title, const std::string& x_label,
                              const std::string& y_label, std::span<const SvgSeries> series,
                              bool with_diagonal = false);

/// Heat map of a matrix (NaN cells left blank); used for correlation maps and
/// log-frequency histograms.
std::string render_matrix_svg(const std::string& title, const Eigen::MatrixXd& m, double vmin,
                              double vmax);

}  // namespace cpt
