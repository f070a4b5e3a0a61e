#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "pct/forward.hpp"
#include "pct/retrieval.hpp"
#include "support.hpp"

using namespace pct;

namespace {

struct Scene {
  ScanGeometry g;
  std::shared_ptr<RadonOperator> radon;
  Phantom phantom;
  ProjectionPair proj;
};

Scene scene(double distance, double scale = 1.0, int n = 32) {
  Scene s;
  s.g = test::small_geometry(n, 24, distance);
  s.radon = std::make_shared<RadonOperator>(s.g);
  auto bg = find_material("vacuum");
  auto a = find_material("polycarbonate");
  auto b = find_material("diamond");
  a.beta *= scale, a.delta *= scale, b.beta *= scale, b.delta *= scale;
  s.phantom = make_grain_phantom(s.g, bg, a, b, 8, 3);
  s.proj = project(s.phantom, s.g, *s.radon);
  return s;
}

Sinogram zeros_like(const Sinogram& s, SinogramKind kind) {
  return Sinogram(s.n_angles(), s.n_detector(), kind);
}

}  // namespace

TEST_SUITE("forward") {

TEST_CASE("projections are scaled line integrals") {
  const Scene s = scene(0.5);
  const auto ab = s.radon->apply(s.phantom.beta.flat());
  const double k = 2.0 * std::numbers::pi / s.g.wavelength;
  for (std::size_t i = 0; i < ab.size(); ++i)
    CHECK(s.proj.absorption.data.values[i] == doctest::Approx(k * ab[i]));
  const auto ad = s.radon->apply(s.phantom.delta.flat());
  for (std::size_t i = 0; i < ad.size(); ++i)
    CHECK(s.proj.phase.data.values[i] == doctest::Approx(-k * ad[i]));
  CHECK(s.proj.absorption.kind == SinogramKind::absorption);
  CHECK(s.proj.phase.kind == SinogramKind::phase);
}

TEST_CASE("contact plane gives exp(-2B)") {
  const Scene s = scene(0.0);
  const Sinogram i = propagate_intensity(s.proj.absorption, s.proj.phase, s.g);
  CHECK(i.kind == SinogramKind::intensity);
  for (std::size_t k = 0; k < i.data.size(); ++k) {
    const double want = std::exp(-2.0 * s.proj.absorption.data.values[k]);
    CHECK(std::abs(i.data.values[k] - want) <= 1e-12 * want);
  }
}

TEST_CASE("pure phase object conserves mean intensity") {
  const Scene s = scene(0.5);
  const Sinogram b0 = zeros_like(s.proj.absorption, SinogramKind::absorption);
  const Sinogram i = propagate_intensity(b0, s.proj.phase, s.g);
  for (std::size_t a = 0; a < i.n_angles(); ++a) {
    double mean = 0.0;
    for (double v : i.projection(a)) mean += v;
    mean /= static_cast<double>(i.n_detector());
    CHECK(std::abs(mean - 1.0) <= 1e-10);
  }
}

TEST_CASE("propagation matches a dense Fresnel oracle") {
  const Scene s = scene(0.7, 1.0, 16);
  const Sinogram i = propagate_intensity(s.proj.absorption, s.proj.phase, s.g);
  const int m = s.g.n_detector;
  const Eigen::MatrixXcd f = test::dft_matrix(m);
  Eigen::VectorXcd h(m);
  for (int k = 0; k < m; ++k) {
    const int idx = k <= (m - 1) / 2 ? k : k - m;
    const double omega = idx / (m * s.g.detector_pixel_size);
    h(k) = std::exp(std::complex<double>(0.0, -std::numbers::pi * s.g.wavelength *
                                                  s.g.distance * omega * omega));
  }
  for (std::size_t a = 0; a < i.n_angles(); ++a) {
    Eigen::VectorXcd t(m);
    for (int j = 0; j < m; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      t(j) = std::exp(std::complex<double>(-s.proj.absorption.projection(a)[jj],
                                           s.proj.phase.projection(a)[jj]));
    }
    const Eigen::VectorXcd d = f.adjoint() * h.cwiseProduct(f * t);
    for (int j = 0; j < m; ++j)
      CHECK(i.projection(a)[static_cast<std::size_t>(j)] ==
            doctest::Approx(std::norm(d(j))).epsilon(1e-10));
  }
}

TEST_CASE("flat field stays flat") {
  const Scene s = scene(0.5);
  const Sinogram i = propagate_intensity(zeros_like(s.proj.absorption, SinogramKind::absorption),
                                         zeros_like(s.proj.phase, SinogramKind::phase), s.g);
  for (double v : i.data.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(propagate_intensity(s.proj.phase, s.proj.absorption, s.g), std::invalid_argument);
}

TEST_CASE("poisson noise statistics and seeding") {
  Sinogram flat(40, 250, SinogramKind::intensity);
  for (double& v : flat.data.values) v = 0.8;
  const double n0 = 1e3;
  const Sinogram a = add_poisson_noise(flat, n0, 1);
  const Sinogram b = add_poisson_noise(flat, n0, 1);
  const Sinogram c = add_poisson_noise(flat, n0, 2);
  CHECK(a.data == b.data);
  CHECK_FALSE(a.data == c.data);
  double mean = 0.0, var = 0.0;
  for (double v : a.data.values) mean += v;
  mean /= static_cast<double>(a.data.size());
  for (double v : a.data.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(a.data.size() - 1);
  // 10^4 samples: mean within ~5 standard errors, variance within 10%.
  CHECK(std::abs(mean - 0.8) < 5.0 * std::sqrt(0.8 / n0 / 1e4));
  CHECK(var == doctest::Approx(0.8 / n0).epsilon(0.1));
  for (double v : a.data.values) CHECK(std::abs(v * n0 - std::round(v * n0)) < 1e-9);

  Sinogram z(2, 4, SinogramKind::intensity);
  for (double v : add_poisson_noise(z, n0, 3).data.values) CHECK(v == 0.0);
  z.data.values[1] = -1.0;
  CHECK_THROWS_AS(add_poisson_noise(z, n0, 3), std::invalid_argument);
  CHECK_THROWS_AS(add_poisson_noise(flat, 0.0, 3), std::invalid_argument);
}

TEST_CASE("contrast is intensity minus one") {
  Sinogram i(1, 3, SinogramKind::intensity);
  i.data.values = {1.0, 0.5, 1.25};
  const Sinogram g = intensity_contrast(i);
  CHECK(g.kind == SinogramKind::contrast);
  CHECK(g.data.values == std::vector<double>{0.0, -0.5, 0.25});
  CHECK_THROWS_AS(intensity_contrast(g), std::invalid_argument);
}

TEST_CASE("weak absorber at contact plane: g close to -2B") {
  const Scene s = scene(0.0, 1e-3);
  const Sinogram g = intensity_contrast(propagate_intensity(s.proj.absorption, s.proj.phase, s.g));
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < g.data.size(); ++k) {
    const double lin = -2.0 * s.proj.absorption.data.values[k];
    num += (g.data.values[k] - lin) * (g.data.values[k] - lin);
    den += lin * lin;
  }
  CHECK(std::sqrt(num / den) < 1e-2);
}

TEST_CASE("spectrum round trip and DC removal") {
  const Scene s = scene(0.5);
  Spectrum f = projection_spectrum(s.proj.absorption);
  const Sinogram back = inverse_projection_spectrum(f, SinogramKind::absorption);
  for (std::size_t k = 0; k < back.data.size(); ++k)
    CHECK(back.data.values[k] == doctest::Approx(s.proj.absorption.data.values[k]).scale(1.0));
  zero_dc(f);
  const Sinogram flat = inverse_projection_spectrum(f, SinogramKind::absorption);
  for (std::size_t a = 0; a < flat.n_angles(); ++a) {
    double mean = 0.0;
    for (double v : flat.projection(a)) mean += v;
    CHECK(std::abs(mean) < 1e-9);
  }
}

TEST_CASE("weak duality-consistent object follows the linear model") {
  Scene s = scene(0.5, 1e-3);
  const double sigma = duality_sigma(find_material("polycarbonate"));
  // Enforce exact duality so only the weak-object linearization remains.
  s.phantom.delta = duality_delta(s.phantom.beta, sigma);
  s.proj = project(s.phantom, s.g, *s.radon);
  const Sinogram g = intensity_contrast(propagate_intensity(s.proj.absorption, s.proj.phase, s.g));
  const CtfFilter f = ctf_filter(s.g, sigma);
  CHECK(ctf_linearization_discrepancy(g, s.proj.absorption, f) < 1e-2);
  const Sinogram lin = linear_ctf_contrast(s.proj.absorption, f);
  CHECK(lin.kind == SinogramKind::contrast);
}

}
