#include "pct/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pct {

double relative_error(std::span<const double> u,
                      std::span<const double> u_star) {
  require_same_size(u.size(), u_star.size(), "relative_error");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - u_star[i];
    num += d * d;
    den += u_star[i] * u_star[i];
  }
  if (den == 0.0) throw std::invalid_argument("relative_error: zero ground truth");
  return std::sqrt(num / den);
}

namespace {

constexpr int kBins = 256;

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::array<double, kBins> count{};
  std::array<double, kBins> sum{};  // count * bin center
};

int bin_of(double v, double lo, double width) {
  const auto b = static_cast<int>(std::floor((v - lo) / width));
  return std::clamp(b, 0, kBins - 1);
}

// Recursive exhaustive search over cut tuples in lexicographic order.
struct CutSearch {
  const std::array<double, kBins + 1>* cw;  // prefix counts
  const std::array<double, kBins + 1>* cs;  // prefix sums
  int cuts;
  std::vector<int> current;
  std::vector<int> best;
  double best_score = -1.0;

  double score() const {
    double s = 0.0;
    int start = 0;
    for (int c = 0; c <= cuts; ++c) {
      const int end = c < cuts ? current[c] + 1 : kBins;
      const double w = (*cw)[end] - (*cw)[start];
      if (w <= 0.0) return -1.0;
      const double m = (*cs)[end] - (*cs)[start];
      s += m * m / w;
      start = end;
    }
    return s;
  }

  void run(int level, int first) {
    if (level == cuts) {
      const double s = score();
      if (s > best_score) {
        best_score = s;
        best = current;
      }
      return;
    }
    for (int k = first; k <= kBins - 1 - (cuts - level); ++k) {
      current[level] = k;
      run(level + 1, k + 1);
    }
  }
};

}  // namespace

std::vector<double> otsu_multilevel(std::span<const double> u, int n_classes) {
  if (n_classes < 2 || n_classes > 4)
    throw std::invalid_argument("otsu_multilevel: n_classes must be 2, 3 or 4");
  if (u.empty()) throw std::invalid_argument("otsu_multilevel: empty image");
  const auto [mn, mx] = std::ranges::minmax_element(u);
  const double lo = *mn;
  const double hi = *mx;
  if (!(hi > lo)) throw std::invalid_argument("otsu_multilevel: constant image");

  Histogram h;
  h.lo = lo;
  h.width = (hi - lo) / kBins;
  for (double v : u) {
    const int b = bin_of(v, lo, h.width);
    h.count[b] += 1.0;
  }
  int occupied = 0;
  for (int b = 0; b < kBins; ++b) {
    h.sum[b] = h.count[b] * (lo + (b + 0.5) * h.width);
    if (h.count[b] > 0) ++occupied;
  }
  if (occupied < n_classes)
    throw std::invalid_argument("otsu_multilevel: fewer distinct levels than classes");

  std::array<double, kBins + 1> cw{};
  std::array<double, kBins + 1> cs{};
  for (int b = 0; b < kBins; ++b) {
    cw[b + 1] = cw[b] + h.count[b];
    cs[b + 1] = cs[b] + h.sum[b];
  }
  CutSearch search{&cw, &cs, n_classes - 1,
                   std::vector<int>(static_cast<std::size_t>(n_classes - 1)), {}};
  search.run(0, 0);

  std::vector<double> thresholds;
  for (int k : search.best) thresholds.push_back(lo + (k + 1) * h.width);
  return thresholds;
}

std::vector<int> apply_thresholds(std::span<const double> u,
                                  std::span<const double> thresholds) {
  std::vector<int> cls(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    int c = 0;
    while (c < static_cast<int>(thresholds.size()) && u[i] >= thresholds[c]) ++c;
    cls[i] = c;
  }
  return cls;
}

namespace {

std::vector<int> labels_by_beta(std::span<const double> label_beta) {
  std::vector<int> order(label_beta.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](int a, int b) {
    return label_beta[static_cast<std::size_t>(a)] <
           label_beta[static_cast<std::size_t>(b)];
  });
  return order;
}

double misclassified_fraction(const std::vector<int>& cls,
                              const LabelImage& labels,
                              const std::vector<int>& order) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < cls.size(); ++i)
    if (order[static_cast<std::size_t>(cls[i])] != labels.values[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(cls.size());
}

}  // namespace

double segmentation_error(std::span<const double> u, const LabelImage& labels_true,
                          std::span<const double> label_beta) {
  require_same_size(u.size(), labels_true.size(), "segmentation_error");
  const int n_classes = static_cast<int>(label_beta.size());
  const auto thresholds = otsu_multilevel(u, n_classes);
  return misclassified_fraction(apply_thresholds(u, thresholds), labels_true,
                                labels_by_beta(label_beta));
}

MetricReport evaluate(std::span<const double> u, std::span<const double> u_star,
                      const LabelImage& labels_true,
                      std::span<const double> label_beta) {
  require_same_size(u.size(), labels_true.size(), "evaluate");
  MetricReport r;
  r.relative_error = relative_error(u, u_star);
  r.thresholds = otsu_multilevel(u, static_cast<int>(label_beta.size()));
  const auto cls = apply_thresholds(u, r.thresholds);
  r.class_counts.assign(label_beta.size(), 0);
  for (int c : cls) ++r.class_counts[static_cast<std::size_t>(c)];
  r.segmentation_error =
      misclassified_fraction(cls, labels_true, labels_by_beta(label_beta));
  return r;
}

}  // namespace pct
