#pragma once

// Matrix-free linear operators with adjoints.
//
// All vectors are flat spans of doubles. A complex-valued space is stored as
// interleaved (re, im) pairs, so the plain real dot product on the storage is
// the real part of the Hermitian inner product; adjoints are taken with
// respect to that inner product.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "pct/fft.hpp"
#include "pct/geometry.hpp"

namespace pct {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool is_complex = false;

  std::size_t elements() const { return rows * cols; }
  /// Number of doubles in the flat storage.
  std::size_t reals() const { return elements() * (is_complex ? 2 : 1); }
  bool operator==(const Shape&) const = default;
};

class LinearOperator {
 public:
  LinearOperator(Shape domain, Shape range) : domain_(domain), range_(range) {}
  virtual ~LinearOperator() = default;

  const Shape& domain_shape() const { return domain_; }
  const Shape& range_shape() const { return range_; }
  std::size_t domain_size() const { return domain_.reals(); }
  std::size_t range_size() const { return range_.reals(); }

  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  virtual void apply_adjoint(std::span<const double> y,
                             std::span<double> x) const = 0;

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_adjoint(std::span<const double> y) const;

  /// Cached estimate_norm(*this, 100, 0), computed on first call.
  double norm_estimate() const;

 protected:
  void check_apply(std::span<const double> x, std::span<double> y) const;
  void check_adjoint(std::span<const double> y, std::span<double> x) const;

 private:
  Shape domain_;
  Shape range_;
  mutable std::once_flag norm_once_;
  mutable double norm_ = 0.0;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

/// Power-iteration estimate of the operator 2-norm times a 1.05 safety
/// factor. Non-decreasing in `iters` for a fixed seed; 0 for the zero
/// operator.
double estimate_norm(const LinearOperator& op, int iters, std::uint64_t seed);

/// Parallel-beam discrete Radon transform. Entry (ray, pixel) is the exact
/// intersection length in meters of the ray with the pixel. Rays are indexed
/// angle-major: ray = angle * n_detector + bin.
class RadonOperator final : public LinearOperator {
 public:
  enum class Storage { automatic, cached, on_the_fly };

  explicit RadonOperator(const ScanGeometry& geometry,
                         Storage storage = Storage::automatic);

  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  /// Visits the pixels crossed by one ray in order of increasing arc length.
  void traverse_ray(std::size_t angle, std::size_t bin,
                    const std::function<void(std::size_t pixel, double length)>&
                        visit) const;

  bool is_cached() const { return !row_ptr_.empty(); }
  std::size_t nonzeros() const { return col_.size(); }
  /// Detector coordinate t of a bin center, meters.
  double bin_offset(std::size_t bin) const;

 private:
  template <class Visit>
  void walk(std::size_t angle, std::size_t bin, Visit&& visit) const;
  void build_cache();

  std::size_t n_;
  std::size_t n_angles_;
  std::size_t n_det_;
  double pixel_;
  double det_pixel_;
  std::vector<double> cos_;
  std::vector<double> sin_;

  // Ray-major CSR and its transpose (pixel-major), filled when cached.
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::int32_t> col_;
  std::vector<double> val_;
  std::vector<std::int64_t> t_row_ptr_;
  std::vector<std::int32_t> t_col_;
  std::vector<double> t_val_;
};

/// Forward differences per pixel with Neumann boundary. Range is two n x n
/// planes: horizontal differences, then vertical differences.
class GradientOperator final : public LinearOperator {
 public:
  explicit GradientOperator(std::size_t n);
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  std::size_t side() const { return n_; }

 private:
  std::size_t n_;
};

/// Unitary DFT of every projection of a real sinogram (rows = angles).
/// The adjoint is the real part of the inverse transform.
class ProjectionDftOperator final : public LinearOperator {
 public:
  ProjectionDftOperator(std::size_t n_angles, std::size_t n_detector);
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  const BatchedFft& fft() const { return *fft_; }

 private:
  std::shared_ptr<BatchedFft> fft_;
};

/// CTF-duality weights on the DFT grid of the detector.
struct CtfFilter {
  double sigma = 0.0;
  std::vector<double> frequency;  // omega_m, 1/m, native DFT order
  std::vector<double> psi;        // pi * lambda * R * omega_m^2
  std::vector<double> weights;    // -2 cos(psi) + 2 sigma sin(psi)

  double max_abs_weight() const;
};

CtfFilter ctf_filter(const ScanGeometry& geometry, double sigma);

/// Multiplies every projection spectrum by the same real weight vector.
/// Complex domain and range.
class SpectralWeightOperator final : public LinearOperator {
 public:
  SpectralWeightOperator(std::size_t n_angles, std::vector<double> weights,
                         double scale = 1.0);
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

 private:
  std::vector<double> weights_;
  double scale_;
};

/// Real diagonal operator.
class DiagonalOperator final : public LinearOperator {
 public:
  explicit DiagonalOperator(std::vector<double> diag);
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

 private:
  std::vector<double> diag_;
};

/// c * op.
class ScaledOperator final : public LinearOperator {
 public:
  ScaledOperator(OperatorPtr op, double scale);
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  double scale() const { return scale_; }
  const OperatorPtr& inner() const { return op_; }

 private:
  OperatorPtr op_;
  double scale_;
};

/// Vertical stack [op_1; op_2; ...] sharing one domain. The range is the
/// concatenation of the blocks' flat storage.
class StackedOperator final : public LinearOperator {
 public:
  explicit StackedOperator(std::vector<OperatorPtr> blocks);
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

 private:
  std::vector<OperatorPtr> blocks_;
};

/// (2 pi / lambda) W F A: real beta image to the complex per-projection
/// spectrum of the linearized intensity contrast.
class AcdOperator final : public LinearOperator {
 public:
  AcdOperator(std::shared_ptr<const RadonOperator> radon,
              const ScanGeometry& geometry, double sigma);
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;

  const CtfFilter& filter() const { return filter_; }
  double scale() const { return scale_; }

 private:
  std::shared_ptr<const RadonOperator> radon_;
  ProjectionDftOperator dft_;
  CtfFilter filter_;
  double scale_;
};

}  // namespace pct
