#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pct/grid.hpp"

namespace pct {

struct MetricReport {
  double relative_error = 0.0;
  double segmentation_error = 0.0;
  std::vector<double> thresholds;
  std::vector<std::size_t> class_counts;
};

/// ||u - u*|| / ||u*||. Throws when u* is zero.
double relative_error(std::span<const double> u, std::span<const double> u_star);

/// Multi-level Otsu on a 256-bin histogram over [min(u), max(u)]:
/// exhaustive search over n_classes - 1 bin cuts maximizing the
/// between-class variance, ties resolved toward the lexicographically
/// smallest cut tuple. Returns increasing thresholds in image units.
std::vector<double> otsu_multilevel(std::span<const double> u, int n_classes);

/// Class index (0 .. thresholds.size()) of every pixel.
std::vector<int> apply_thresholds(std::span<const double> u,
                                  std::span<const double> thresholds);

/// Fraction of pixels whose Otsu class, mapped to true labels by increasing
/// class order vs increasing true beta, differs from labels_true.
/// label_beta[l] is the true beta of label l; n_classes = label_beta.size().
double segmentation_error(std::span<const double> u, const LabelImage& labels_true,
                          std::span<const double> label_beta);

MetricReport evaluate(std::span<const double> u, std::span<const double> u_star,
                      const LabelImage& labels_true,
                      std::span<const double> label_beta);

}  // namespace pct
