#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "pct/geometry.hpp"
#include "pct/operators.hpp"

namespace pct::test {

inline ScanGeometry small_geometry(int n, int n_angles, double distance = 0.5) {
  ScanGeometry g = desk_geometry();
  g.n_pixels = n;
  g.n_detector = default_detector_pixels(n);
  g.angles_deg = uniform_angles(n_angles);
  g.distance = distance;
  return g;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng,
                                         double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline double plain_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

inline double plain_norm(const std::vector<double>& a) { return std::sqrt(plain_dot(a, a)); }

/// |<A x, y> - <x, A^T y>| / (||A x|| ||y||) for random x, y.
inline double adjoint_gap(const LinearOperator& op, std::mt19937_64& rng) {
  const auto x = random_vector(op.domain_size(), rng);
  const auto y = random_vector(op.range_size(), rng);
  const auto ax = op.apply(x);
  const auto aty = op.apply_adjoint(y);
  const double denom = std::max(plain_norm(ax) * plain_norm(y),
                                plain_norm(x) * plain_norm(aty));
  return std::abs(plain_dot(ax, y) - plain_dot(x, aty)) / denom;
}

/// Dense matrix of a real-storage operator, one column per basis vector.
inline Eigen::MatrixXd dense(const LinearOperator& op) {
  Eigen::MatrixXd m(op.range_size(), op.domain_size());
  std::vector<double> e(op.domain_size(), 0.0);
  for (std::size_t j = 0; j < e.size(); ++j) {
    e[j] = 1.0;
    const auto col = op.apply(e);
    for (std::size_t i = 0; i < col.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    e[j] = 0.0;
  }
  return m;
}

/// Real dense matrix as an operator on n x n images.
class MatrixOperator final : public LinearOperator {
 public:
  MatrixOperator(Eigen::MatrixXd m, std::size_t side)
      : LinearOperator({side, side, false}, {static_cast<std::size_t>(m.rows()), 1, false}),
        m_(std::move(m)) {}
  void apply(std::span<const double> x, std::span<double> y) const override {
    check_apply(x, y);
    Eigen::Map<Eigen::VectorXd>(y.data(), m_.rows()) =
        m_ * Eigen::Map<const Eigen::VectorXd>(x.data(), m_.cols());
  }
  void apply_adjoint(std::span<const double> y, std::span<double> x) const override {
    check_adjoint(y, x);
    Eigen::Map<Eigen::VectorXd>(x.data(), m_.cols()) =
        m_.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), m_.rows());
  }
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Length of the line {(t cos a, t sin a) + l (-sin a, cos a)} inside the
/// box [x0, x1] x [y0, y1] (Liang-Barsky clipping).
inline double clip_length(double angle_rad, double t, double x0, double x1,
                          double y0, double y1) {
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  const double ox = t * c, oy = t * s, dx = -s, dy = c;
  double lo = -1e300, hi = 1e300;
  auto clip = [&](double o, double d, double a, double b) {
    if (std::abs(d) < 1e-15) return o >= a && o <= b;
    double l1 = (a - o) / d, l2 = (b - o) / d;
    if (l1 > l2) std::swap(l1, l2);
    lo = std::max(lo, l1);
    hi = std::min(hi, l2);
    return true;
  };
  if (!clip(ox, dx, x0, x1) || !clip(oy, dy, y0, y1)) return 0.0;
  return std::max(0.0, hi - lo);
}

/// Independent dense Radon matrix: every ray clipped against every pixel box.
inline Eigen::MatrixXd radon_oracle(const ScanGeometry& g) {
  const int n = g.n_pixels;
  const double p = g.object_pixel_size;
  const double half = 0.5 * n * p;
  const int m = g.n_detector;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.angles_deg.size()) * m,
                                            static_cast<Eigen::Index>(n) * n);
  for (std::size_t k = 0; k < g.angles_deg.size(); ++k) {
    const double th = g.angles_deg[k] * std::numbers::pi / 180.0;
    for (int b = 0; b < m; ++b) {
      const double t = (b - 0.5 * (m - 1)) * g.detector_pixel_size;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          a(static_cast<Eigen::Index>(k) * m + b, r * n + c) =
              clip_length(th, t, -half + c * p, -half + (c + 1) * p,
                          -half + r * p, -half + (r + 1) * p);
    }
  }
  return a;
}

/// Unitary DFT matrix of length m, native order.
inline Eigen::MatrixXcd dft_matrix(int m) {
  Eigen::MatrixXcd f(m, m);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      f(k, j) = std::polar(1.0 / std::sqrt(static_cast<double>(m)),
                           -2.0 * std::numbers::pi * k * j / m);
  return f;
}

}  // namespace pct::test
