#include "pct/operators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "pct/kernels.hpp"

namespace pct {

// ---------------------------------------------------------------------------
// LinearOperator

std::vector<double> LinearOperator::apply(std::span<const double> x) const {
  std::vector<double> y(range_size());
  apply(x, y);
  return y;
}

std::vector<double> LinearOperator::apply_adjoint(
    std::span<const double> y) const {
  std::vector<double> x(domain_size());
  apply_adjoint(y, x);
  return x;
}

double LinearOperator::norm_estimate() const {
  std::call_once(norm_once_, [this] { norm_ = estimate_norm(*this, 100, 0); });
  return norm_;
}

void LinearOperator::check_apply(std::span<const double> x,
                                 std::span<double> y) const {
  require_same_size(x.size(), domain_size(), "operator domain");
  require_same_size(y.size(), range_size(), "operator range");
}

void LinearOperator::check_adjoint(std::span<const double> y,
                                   std::span<double> x) const {
  require_same_size(y.size(), range_size(), "operator range");
  require_same_size(x.size(), domain_size(), "operator domain");
}

double estimate_norm(const LinearOperator& op, int iters, std::uint64_t seed) {
  if (iters < 10) throw std::invalid_argument("estimate_norm: iters must be >= 10");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(op.domain_size());
  for (double& v : x) v = normal(rng);
  double nx = std::sqrt(kernels::sq_norm(x));
  if (nx == 0.0) return 0.0;
  for (double& v : x) v /= nx;

  std::vector<double> y(op.range_size());
  std::vector<double> z(op.domain_size());
  double best = 0.0;
  for (int k = 0; k < iters; ++k) {
    op.apply(x, y);
    op.apply_adjoint(y, z);
    const double nz = std::sqrt(kernels::sq_norm(z));
    if (nz == 0.0) return 0.0;
    best = std::max(best, std::sqrt(nz));
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] / nz;
  }
  return 1.05 * best;
}

// ---------------------------------------------------------------------------
// Radon

namespace {

constexpr double kCacheBudget = 8e6;  // upper bound on stored entries

}  // namespace

RadonOperator::RadonOperator(const ScanGeometry& geometry, Storage storage)
    : LinearOperator(
          Shape{static_cast<std::size_t>(geometry.n_pixels),
                static_cast<std::size_t>(geometry.n_pixels), false},
          Shape{static_cast<std::size_t>(geometry.n_angles()),
                static_cast<std::size_t>(geometry.n_detector), false}),
      n_(static_cast<std::size_t>(geometry.n_pixels)),
      n_angles_(static_cast<std::size_t>(geometry.n_angles())),
      n_det_(static_cast<std::size_t>(geometry.n_detector)),
      pixel_(geometry.object_pixel_size),
      det_pixel_(geometry.detector_pixel_size) {
  geometry.validate();
  cos_.reserve(n_angles_);
  sin_.reserve(n_angles_);
  for (double a : geometry.angles_deg) {
    const double th = a * std::numbers::pi / 180.0;
    cos_.push_back(std::cos(th));
    sin_.push_back(std::sin(th));
  }
  const double bound = static_cast<double>(n_angles_ * n_det_) * 2.0 * n_;
  const bool cache = storage == Storage::cached ||
                     (storage == Storage::automatic && bound <= kCacheBudget);
  if (cache) build_cache();
}

double RadonOperator::bin_offset(std::size_t bin) const {
  return (static_cast<double>(bin) - 0.5 * (static_cast<double>(n_det_) - 1.0)) *
         det_pixel_;
}

template <class Visit>
void RadonOperator::walk(std::size_t angle, std::size_t bin,
                         Visit&& visit) const {
  const double c = cos_[angle];
  const double s = sin_[angle];
  const double t = bin_offset(bin);
  // Ray: (ox, oy) + l * (dx, dy), unit direction.
  const double ox = t * c;
  const double oy = t * s;
  const double dx = -s;
  const double dy = c;
  const double half = 0.5 * static_cast<double>(n_) * pixel_;
  constexpr double tiny = 1e-14;

  double l_in = -std::numeric_limits<double>::infinity();
  double l_out = std::numeric_limits<double>::infinity();
  auto slab = [&](double o, double d) {
    if (std::abs(d) < tiny) return o >= -half && o <= half;
    const double a = (-half - o) / d;
    const double b = (half - o) / d;
    l_in = std::max(l_in, std::min(a, b));
    l_out = std::min(l_out, std::max(a, b));
    return true;
  };
  if (!slab(ox, dx) || !slab(oy, dy)) return;
  if (!(l_out - l_in > 1e-12 * pixel_)) return;

  // Grid-plane crossings strictly inside (l_in, l_out), generated in order of
  // increasing arc length for each axis and merged.
  struct Planes {
    double o, d;
    long long i, step, last;
    bool active;
  };
  const long long nn = static_cast<long long>(n_);
  auto make_planes = [&](double o, double d) {
    Planes p{o, d, 0, 1, -1, false};
    if (std::abs(d) < tiny) return p;
    const double a = (o + l_in * d + half) / pixel_;
    const double b = (o + l_out * d + half) / pixel_;
    if (d > 0) {
      p.i = static_cast<long long>(std::floor(a)) + 1;
      p.last = static_cast<long long>(std::ceil(b)) - 1;
      p.step = 1;
      p.active = p.i <= p.last;
    } else {
      p.i = static_cast<long long>(std::ceil(a)) - 1;
      p.last = static_cast<long long>(std::floor(b)) + 1;
      p.step = -1;
      p.active = p.i >= p.last;
    }
    p.i = std::clamp(p.i, 0LL, nn);
    return p;
  };
  auto next_l = [&](Planes& p) {
    while (p.active) {
      const double l = (-half + static_cast<double>(p.i) * pixel_ - p.o) / p.d;
      if (l > l_in && l < l_out) return l;
      // Rounding put this plane on the boundary; skip it.
      p.i += p.step;
      p.active = p.step > 0 ? p.i <= p.last : p.i >= p.last;
    }
    return l_out;
  };
  auto advance = [](Planes& p) {
    p.i += p.step;
    p.active = p.step > 0 ? p.i <= p.last : p.i >= p.last;
  };

  Planes px = make_planes(ox, dx);
  Planes py = make_planes(oy, dy);
  double prev = l_in;
  while (true) {
    const double lx = next_l(px);
    const double ly = next_l(py);
    const double next = std::min({lx, ly, l_out});
    const double seg = next - prev;
    if (seg > 1e-12 * pixel_) {
      const double mid = prev + 0.5 * seg;
      const long long ix = std::clamp(
          static_cast<long long>(std::floor((ox + mid * dx + half) / pixel_)),
          0LL, nn - 1);
      const long long iy = std::clamp(
          static_cast<long long>(std::floor((oy + mid * dy + half) / pixel_)),
          0LL, nn - 1);
      visit(static_cast<std::size_t>(iy * nn + ix), seg);
    }
    if (next >= l_out) break;
    if (lx == next) advance(px);
    if (ly == next) advance(py);
    prev = next;
  }
}

void RadonOperator::traverse_ray(
    std::size_t angle, std::size_t bin,
    const std::function<void(std::size_t, double)>& visit) const {
  if (angle >= n_angles_ || bin >= n_det_)
    throw std::out_of_range("traverse_ray: ray index out of range");
  walk(angle, bin, visit);
}

void RadonOperator::build_cache() {
  const std::size_t rays = n_angles_ * n_det_;
  const std::size_t pixels = n_ * n_;
  row_ptr_.assign(rays + 1, 0);
  std::vector<std::int64_t> per_pixel(pixels + 1, 0);
  for (std::size_t a = 0; a < n_angles_; ++a)
    for (std::size_t b = 0; b < n_det_; ++b)
      walk(a, b, [&](std::size_t p, double) {
        ++row_ptr_[a * n_det_ + b + 1];
        ++per_pixel[p + 1];
      });
  for (std::size_t r = 0; r < rays; ++r) row_ptr_[r + 1] += row_ptr_[r];
  for (std::size_t p = 0; p < pixels; ++p) per_pixel[p + 1] += per_pixel[p];
  col_.resize(static_cast<std::size_t>(row_ptr_.back()));
  val_.resize(col_.size());
  t_row_ptr_ = per_pixel;
  t_col_.resize(col_.size());
  t_val_.resize(col_.size());
  std::vector<std::int64_t> fill(per_pixel.begin(), per_pixel.end() - 1);
  for (std::size_t a = 0; a < n_angles_; ++a) {
    for (std::size_t b = 0; b < n_det_; ++b) {
      const std::size_t ray = a * n_det_ + b;
      std::int64_t k = row_ptr_[ray];
      walk(a, b, [&](std::size_t p, double len) {
        col_[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(p);
        val_[static_cast<std::size_t>(k)] = len;
        ++k;
        const auto slot = static_cast<std::size_t>(fill[p]++);
        t_col_[slot] = static_cast<std::int32_t>(ray);
        t_val_[slot] = len;
      });
    }
  }
}

void RadonOperator::apply(std::span<const double> x,
                          std::span<double> y) const {
  check_apply(x, y);
  if (is_cached()) {
    kernels::active().csr_spmv(row_ptr_.data(), col_.data(), val_.data(),
                               x.data(), y.data(), n_angles_ * n_det_, 1.0);
    return;
  }
  for (std::size_t a = 0; a < n_angles_; ++a)
    for (std::size_t b = 0; b < n_det_; ++b) {
      double s = 0.0;
      walk(a, b, [&](std::size_t p, double len) { s += len * x[p]; });
      y[a * n_det_ + b] = s;
    }
}

void RadonOperator::apply_adjoint(std::span<const double> y,
                                  std::span<double> x) const {
  check_adjoint(y, x);
  if (is_cached()) {
    kernels::active().csr_spmv(t_row_ptr_.data(), t_col_.data(), t_val_.data(),
                               y.data(), x.data(), n_ * n_, 1.0);
    return;
  }
  std::ranges::fill(x, 0.0);
  for (std::size_t a = 0; a < n_angles_; ++a)
    for (std::size_t b = 0; b < n_det_; ++b) {
      const double v = y[a * n_det_ + b];
      if (v == 0.0) continue;
      walk(a, b, [&](std::size_t p, double len) { x[p] += len * v; });
    }
}

// ---------------------------------------------------------------------------
// Gradient

GradientOperator::GradientOperator(std::size_t n)
    : LinearOperator(Shape{n, n, false}, Shape{2 * n, n, false}), n_(n) {
  if (n < 2) throw std::invalid_argument("gradient: image side must be >= 2");
}

void GradientOperator::apply(std::span<const double> x,
                             std::span<double> y) const {
  check_apply(x, y);
  kernels::active().gradient(x.data(), y.data(), y.data() + n_ * n_, n_);
}

void GradientOperator::apply_adjoint(std::span<const double> y,
                                     std::span<double> x) const {
  check_adjoint(y, x);
  kernels::active().gradient_adjoint(y.data(), y.data() + n_ * n_, x.data(),
                                     n_);
}

// ---------------------------------------------------------------------------
// Per-projection DFT

ProjectionDftOperator::ProjectionDftOperator(std::size_t n_angles,
                                             std::size_t n_detector)
    : LinearOperator(Shape{n_angles, n_detector, false},
                     Shape{n_angles, n_detector, true}),
      fft_(std::make_shared<BatchedFft>(n_detector, n_angles)) {}

namespace {

std::span<std::complex<double>> as_complex(std::span<double> v) {
  return {reinterpret_cast<std::complex<double>*>(v.data()), v.size() / 2};
}

}  // namespace

void ProjectionDftOperator::apply(std::span<const double> x,
                                  std::span<double> y) const {
  check_apply(x, y);
  auto z = as_complex(y);
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = {x[i], 0.0};
  fft_->forward(z);
}

void ProjectionDftOperator::apply_adjoint(std::span<const double> y,
                                          std::span<double> x) const {
  check_adjoint(y, x);
  std::vector<double> buf(y.begin(), y.end());
  auto z = as_complex(buf);
  fft_->inverse(z);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i].real();
}

// ---------------------------------------------------------------------------
// CTF filter

double CtfFilter::max_abs_weight() const {
  double m = 0.0;
  for (double w : weights) m = std::max(m, std::abs(w));
  return m;
}

CtfFilter ctf_filter(const ScanGeometry& geometry, double sigma) {
  if (!(geometry.distance >= 0.0))
    throw std::invalid_argument("ctf_filter: distance must be >= 0");
  CtfFilter f;
  f.sigma = sigma;
  f.frequency = dft_frequencies(static_cast<std::size_t>(geometry.n_detector),
                                geometry.detector_pixel_size);
  f.psi.resize(f.frequency.size());
  f.weights.resize(f.frequency.size());
  const double k = std::numbers::pi * geometry.wavelength * geometry.distance;
  for (std::size_t m = 0; m < f.frequency.size(); ++m) {
    const double w = f.frequency[m];
    f.psi[m] = k * w * w;
    f.weights[m] = -2.0 * std::cos(f.psi[m]) + 2.0 * sigma * std::sin(f.psi[m]);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Diagonal-type operators

SpectralWeightOperator::SpectralWeightOperator(std::size_t n_angles,
                                               std::vector<double> weights,
                                               double scale)
    : LinearOperator(Shape{n_angles, weights.size(), true},
                     Shape{n_angles, weights.size(), true}),
      weights_(std::move(weights)),
      scale_(scale) {}

void SpectralWeightOperator::apply(std::span<const double> x,
                                   std::span<double> y) const {
  check_apply(x, y);
  std::ranges::copy(x, y.begin());
  const std::size_t m = weights_.size();
  const std::size_t rows = domain_shape().rows;
  for (std::size_t r = 0; r < rows; ++r)
    kernels::active().cmul_real(weights_.data(), y.data() + 2 * m * r, m,
                                scale_);
}

void SpectralWeightOperator::apply_adjoint(std::span<const double> y,
                                           std::span<double> x) const {
  // Real weights: self-adjoint.
  check_adjoint(y, x);
  std::ranges::copy(y, x.begin());
  const std::size_t m = weights_.size();
  const std::size_t rows = domain_shape().rows;
  for (std::size_t r = 0; r < rows; ++r)
    kernels::active().cmul_real(weights_.data(), x.data() + 2 * m * r, m,
                                scale_);
}

DiagonalOperator::DiagonalOperator(std::vector<double> diag)
    : LinearOperator(Shape{diag.size(), 1, false}, Shape{diag.size(), 1, false}),
      diag_(std::move(diag)) {}

void DiagonalOperator::apply(std::span<const double> x,
                             std::span<double> y) const {
  check_apply(x, y);
  for (std::size_t i = 0; i < diag_.size(); ++i) y[i] = diag_[i] * x[i];
}

void DiagonalOperator::apply_adjoint(std::span<const double> y,
                                     std::span<double> x) const {
  check_adjoint(y, x);
  for (std::size_t i = 0; i < diag_.size(); ++i) x[i] = diag_[i] * y[i];
}

ScaledOperator::ScaledOperator(OperatorPtr op, double scale)
    : LinearOperator(op->domain_shape(), op->range_shape()),
      op_(std::move(op)),
      scale_(scale) {}

void ScaledOperator::apply(std::span<const double> x,
                           std::span<double> y) const {
  op_->apply(x, y);
  for (double& v : y) v *= scale_;
}

void ScaledOperator::apply_adjoint(std::span<const double> y,
                                   std::span<double> x) const {
  op_->apply_adjoint(y, x);
  for (double& v : x) v *= scale_;
}

namespace {

Shape stacked_range(const std::vector<OperatorPtr>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("StackedOperator: no blocks");
  std::size_t total = 0;
  for (const auto& b : blocks) {
    require_same_size(b->domain_size(), blocks.front()->domain_size(),
                      "StackedOperator domain");
    total += b->range_size();
  }
  return Shape{total, 1, false};
}

}  // namespace

StackedOperator::StackedOperator(std::vector<OperatorPtr> blocks)
    : LinearOperator(blocks.at(0)->domain_shape(), stacked_range(blocks)),
      blocks_(std::move(blocks)) {}

void StackedOperator::apply(std::span<const double> x,
                            std::span<double> y) const {
  check_apply(x, y);
  std::size_t off = 0;
  for (const auto& b : blocks_) {
    b->apply(x, y.subspan(off, b->range_size()));
    off += b->range_size();
  }
}

void StackedOperator::apply_adjoint(std::span<const double> y,
                                    std::span<double> x) const {
  check_adjoint(y, x);
  std::ranges::fill(x, 0.0);
  std::vector<double> part(x.size());
  std::size_t off = 0;
  for (const auto& b : blocks_) {
    b->apply_adjoint(y.subspan(off, b->range_size()), part);
    kernels::axpy(1.0, part, x);
    off += b->range_size();
  }
}

// ---------------------------------------------------------------------------
// ACD composition

AcdOperator::AcdOperator(std::shared_ptr<const RadonOperator> radon,
                         const ScanGeometry& geometry, double sigma)
    : LinearOperator(radon->domain_shape(),
                     Shape{radon->range_shape().rows, radon->range_shape().cols,
                           true}),
      radon_(std::move(radon)),
      dft_(radon_->range_shape().rows, radon_->range_shape().cols),
      filter_(ctf_filter(geometry, sigma)),
      scale_(geometry.wavenumber()) {
  require_same_size(filter_.weights.size(), radon_->range_shape().cols,
                    "AcdOperator detector bins");
}

void AcdOperator::apply(std::span<const double> x, std::span<double> y) const {
  check_apply(x, y);
  std::vector<double> sino(radon_->range_size());
  radon_->apply(x, sino);
  dft_.apply(sino, y);
  const std::size_t m = filter_.weights.size();
  const std::size_t rows = range_shape().rows;
  for (std::size_t r = 0; r < rows; ++r)
    kernels::active().cmul_real(filter_.weights.data(), y.data() + 2 * m * r,
                                m, scale_);
}

void AcdOperator::apply_adjoint(std::span<const double> y,
                                std::span<double> x) const {
  check_adjoint(y, x);
  std::vector<double> spec(y.begin(), y.end());
  const std::size_t m = filter_.weights.size();
  const std::size_t rows = range_shape().rows;
  for (std::size_t r = 0; r < rows; ++r)
    kernels::active().cmul_real(filter_.weights.data(), spec.data() + 2 * m * r,
                                m, scale_);
  std::vector<double> sino(radon_->range_size());
  dft_.apply_adjoint(spec, sino);
  radon_->apply_adjoint(sino, x);
}

}  // namespace pct
