#include "pct/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace pct {
namespace {

// The FFTW planner is not re-entrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

BatchedFft::BatchedFft(std::size_t length, std::size_t batch)
    : length_(length), batch_(batch) {
  if (length == 0 || batch == 0)
    throw std::invalid_argument("BatchedFft: empty transform");
  std::lock_guard lock(planner_mutex());
  const int n = static_cast<int>(length);
  const int howmany = static_cast<int>(batch);
  auto* buf = fftw_alloc_complex(length * batch);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_many_dft(1, &n, howmany, buf, nullptr, 1, n, buf,
                                     nullptr, 1, n, FFTW_FORWARD, flags);
  inverse_plan_ = fftw_plan_many_dft(1, &n, howmany, buf, nullptr, 1, n, buf,
                                     nullptr, 1, n, FFTW_BACKWARD, flags);
  fftw_free(buf);
  if (!forward_plan_ || !inverse_plan_)
    throw std::runtime_error("BatchedFft: FFTW planning failed");
}

BatchedFft::~BatchedFft() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(forward_plan_);
  if (inverse_plan_) fftw_destroy_plan(inverse_plan_);
}

void BatchedFft::run(fftw_plan_s* plan,
                     std::span<std::complex<double>> data) const {
  if (data.size() != length_ * batch_)
    throw std::invalid_argument("BatchedFft: buffer size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
  const double s = 1.0 / std::sqrt(static_cast<double>(length_));
  for (auto& z : data) z *= s;
}

void BatchedFft::forward(std::span<std::complex<double>> data) const {
  run(forward_plan_, data);
}

void BatchedFft::inverse(std::span<std::complex<double>> data) const {
  run(inverse_plan_, data);
}

std::vector<double> dft_frequencies(std::size_t length, double pixel_size) {
  std::vector<double> w(length);
  const double df = 1.0 / (static_cast<double>(length) * pixel_size);
  for (std::size_t m = 0; m < length; ++m) {
    const auto k = static_cast<long long>(m);
    const auto n = static_cast<long long>(length);
    w[m] = static_cast<double>(2 * k < n ? k : k - n) * df;
  }
  return w;
}

}  // namespace pct
