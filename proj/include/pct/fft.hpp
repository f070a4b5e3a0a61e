#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

struct fftw_plan_s;

namespace pct {

/// In-place unitary 1D DFTs of `batch` contiguous rows of `length` samples.
/// Plans are built once with FFTW_ESTIMATE so the transform sequence, and
/// therefore the rounding, is the same on every run.
class BatchedFft {
 public:
  BatchedFft(std::size_t length, std::size_t batch);
  ~BatchedFft();
  BatchedFft(const BatchedFft&) = delete;
  BatchedFft& operator=(const BatchedFft&) = delete;

  std::size_t length() const { return length_; }
  std::size_t batch() const { return batch_; }

  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  void run(fftw_plan_s* plan, std::span<std::complex<double>> data) const;

  std::size_t length_;
  std::size_t batch_;
  fftw_plan_s* forward_plan_ = nullptr;
  fftw_plan_s* inverse_plan_ = nullptr;
};

/// Spatial frequency of each DFT bin in native order, omega_m in
/// [-F_s/2, F_s/2) with F_s = 1 / pixel_size.
std::vector<double> dft_frequencies(std::size_t length, double pixel_size);

}  // namespace pct
