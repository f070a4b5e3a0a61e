#include "pct/forward.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "pct/fft.hpp"

namespace pct {

ProjectionPair project(const Phantom& phantom, const ScanGeometry& geometry,
                       const RadonOperator& radon) {
  require_same_size(phantom.beta.size(), radon.domain_size(), "project: beta map");
  require_same_size(phantom.delta.size(), radon.domain_size(),
                    "project: delta map");
  const auto rows = radon.range_shape().rows;
  const auto cols = radon.range_shape().cols;
  ProjectionPair out{Sinogram(rows, cols, SinogramKind::absorption),
                     Sinogram(rows, cols, SinogramKind::phase)};
  radon.apply(phantom.beta.flat(), out.absorption.data.flat());
  radon.apply(phantom.delta.flat(), out.phase.data.flat());
  const double k = geometry.wavenumber();
  for (double& v : out.absorption.data.values) v *= k;
  for (double& v : out.phase.data.values) v *= -k;
  return out;
}

Sinogram propagate_intensity(const Sinogram& absorption, const Sinogram& phase,
                             const ScanGeometry& geometry) {
  if (absorption.kind != SinogramKind::absorption ||
      phase.kind != SinogramKind::phase)
    throw std::invalid_argument("propagate_intensity: wrong sinogram kinds");
  require_same_size(absorption.data.size(), phase.data.size(),
                    "propagate_intensity");
  require_same_size(absorption.n_detector(), phase.n_detector(),
                    "propagate_intensity detector");
  const std::size_t rows = absorption.n_angles();
  const std::size_t m = absorption.n_detector();
  Sinogram out(rows, m, SinogramKind::intensity);

  if (geometry.distance == 0.0) {
    // Contact plane: |T|^2 exactly.
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data.values[i] = std::exp(-2.0 * absorption.data.values[i]);
    return out;
  }

  std::vector<std::complex<double>> field(rows * m);
  for (std::size_t i = 0; i < field.size(); ++i)
    field[i] = std::exp(std::complex<double>(-absorption.data.values[i],
                                             phase.data.values[i]));
  const auto freq = dft_frequencies(m, geometry.detector_pixel_size);
  std::vector<std::complex<double>> transfer(m);
  const double k = std::numbers::pi * geometry.wavelength * geometry.distance;
  for (std::size_t j = 0; j < m; ++j) {
    const double psi = k * freq[j] * freq[j];
    transfer[j] = {std::cos(psi), -std::sin(psi)};
  }
  BatchedFft fft(m, rows);
  fft.forward(field);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < m; ++j) field[r * m + j] *= transfer[j];
  fft.inverse(field);
  for (std::size_t i = 0; i < field.size(); ++i)
    out.data.values[i] = std::norm(field[i]);
  return out;
}

Sinogram add_poisson_noise(const Sinogram& intensity, double n0,
                           std::uint64_t seed) {
  if (!(n0 > 0.0)) throw std::invalid_argument("add_poisson_noise: n0 must be > 0");
  for (double v : intensity.data.values)
    if (!(v >= 0.0))
      throw std::invalid_argument("add_poisson_noise: negative intensity");
  Sinogram out = intensity;
  for (std::size_t a = 0; a < intensity.n_angles(); ++a) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), 0x5043544eu};
    std::mt19937_64 rng(seq);
    auto proj = out.projection(a);
    for (double& v : proj) {
      const double mean = n0 * v;
      if (mean == 0.0) continue;
      std::poisson_distribution<long long> dist(mean);
      v = static_cast<double>(dist(rng)) / n0;
    }
  }
  return out;
}

Sinogram intensity_contrast(const Sinogram& intensity) {
  if (intensity.kind != SinogramKind::intensity)
    throw std::invalid_argument("intensity_contrast: expects an intensity sinogram");
  Sinogram g = intensity;
  g.kind = SinogramKind::contrast;
  for (double& v : g.data.values) v -= 1.0;
  return g;
}

Spectrum projection_spectrum(const Sinogram& sinogram) {
  Spectrum s;
  s.data = Grid<std::complex<double>>(sinogram.n_angles(),
                                      sinogram.n_detector());
  for (std::size_t i = 0; i < s.data.size(); ++i)
    s.data.values[i] = {sinogram.data.values[i], 0.0};
  BatchedFft(sinogram.n_detector(), sinogram.n_angles()).forward(s.data.values);
  return s;
}

Sinogram inverse_projection_spectrum(const Spectrum& spectrum,
                                     SinogramKind kind) {
  auto buf = spectrum.data.values;
  BatchedFft(spectrum.n_detector(), spectrum.n_angles()).inverse(buf);
  Sinogram out(spectrum.n_angles(), spectrum.n_detector(), kind);
  for (std::size_t i = 0; i < buf.size(); ++i) out.data.values[i] = buf[i].real();
  return out;
}

void zero_dc(Spectrum& spectrum) {
  for (std::size_t a = 0; a < spectrum.n_angles(); ++a) spectrum.data(a, 0) = 0.0;
}

Sinogram linear_ctf_contrast(const Sinogram& absorption,
                             const CtfFilter& filter) {
  require_same_size(absorption.n_detector(), filter.weights.size(),
                    "linear_ctf_contrast");
  Spectrum s = projection_spectrum(absorption);
  for (std::size_t a = 0; a < s.n_angles(); ++a)
    for (std::size_t j = 0; j < s.n_detector(); ++j)
      s.data(a, j) *= filter.weights[j];
  return inverse_projection_spectrum(s, SinogramKind::contrast);
}

double ctf_linearization_discrepancy(const Sinogram& contrast,
                                     const Sinogram& absorption,
                                     const CtfFilter& filter) {
  require_same_size(contrast.data.size(), absorption.data.size(),
                    "ctf_linearization_discrepancy");
  const Spectrum g = projection_spectrum(contrast);
  const Spectrum b = projection_spectrum(absorption);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t a = 0; a < g.n_angles(); ++a)
    for (std::size_t j = 1; j < g.n_detector(); ++j) {
      const double w = filter.weights[j];
      if (w == 0.0) continue;
      const auto model = w * b.data(a, j);
      num += std::norm(g.data(a, j) - model);
      den += std::norm(model);
    }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace pct
