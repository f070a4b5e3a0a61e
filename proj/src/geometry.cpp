#include "pct/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pct {

std::string to_string(SinogramKind kind) {
  switch (kind) {
    case SinogramKind::absorption: return "absorption";
    case SinogramKind::phase: return "phase";
    case SinogramKind::intensity: return "intensity";
    case SinogramKind::contrast: return "contrast";
  }
  return "unknown";
}

void ScanGeometry::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("invalid geometry: " + msg);
  };
  if (n_pixels < 1) fail("n_pixels must be positive");
  if (!(wavelength > 0.0)) fail("wavelength must be > 0");
  if (!(distance >= 0.0)) fail("distance must be >= 0");
  if (!(object_pixel_size > 0.0)) fail("object pixel size must be > 0");
  if (!(detector_pixel_size > 0.0)) fail("detector pixel size must be > 0");
  const double shadow = std::ceil(n_pixels * std::numbers::sqrt2 *
                                  object_pixel_size / detector_pixel_size -
                                  1e-9);
  if (n_detector < static_cast<int>(shadow))
    fail("n_detector " + std::to_string(n_detector) +
         " too small for the rotated object (needs " +
         std::to_string(static_cast<int>(shadow)) + ")");
  if (angles_deg.empty()) fail("no projection angles");
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    const double a = angles_deg[i];
    if (!(a >= 0.0 && a < 180.0)) fail("angle outside [0, 180)");
    if (i > 0 && !(a > angles_deg[i - 1]))
      fail("angles must be strictly increasing");
  }
  if (!(photons_n0 > 0.0)) fail("photons_n0 must be > 0");
}

double ScanGeometry::wavenumber() const {
  return 2.0 * std::numbers::pi / wavelength;
}

double wavelength_from_energy_kev(double energy_kev) {
  if (!(energy_kev > 0.0))
    throw std::invalid_argument("photon energy must be > 0");
  return 1.23984193e-9 / energy_kev;
}

std::vector<double> uniform_angles(int n) {
  if (n < 1) throw std::invalid_argument("need at least one angle");
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[i] = 180.0 * i / n;
  return a;
}

int default_detector_pixels(int n_pixels) {
  const int shadow =
      2 * static_cast<int>(std::ceil(n_pixels * std::numbers::sqrt2 / 2.0));
  const int margin =
      static_cast<int>(std::lround(64.0 * n_pixels / 200.0));
  int m = shadow + 2 * margin;
  return m % 2 == 0 ? m : m + 1;
}

ScanGeometry desk_geometry() {
  ScanGeometry g;
  g.n_pixels = 64;
  g.object_pixel_size = 1e-6;
  g.wavelength = wavelength_from_energy_kev(40.0);
  g.distance = 0.5;
  g.detector_pixel_size = 1e-6;
  g.n_detector = 192;
  g.angles_deg = uniform_angles(120);
  g.photons_n0 = 1e5;
  g.rng_seed = 0;
  return g;
}

ScanGeometry full_scale_geometry() {
  ScanGeometry g = desk_geometry();
  g.n_pixels = 200;
  g.n_detector = 572;
  g.angles_deg = uniform_angles(360);
  return g;
}

const std::vector<Material>& builtin_materials() {
  static const std::vector<Material> table{
      {"polycarbonate", 8.43e-12, 1.64e-7},
      {"diamond", 1.90e-11, 4.55e-7},
      {"magnesium", 1.15e-10, 2.22e-7},
      {"aluminium", 2.32e-10, 3.37e-7},
      {"silicon", 2.68e-10, 3.01e-7},
      {"iron", 6.42e-9, 9.54e-7},
      {"copper", 9.96e-9, 1.06e-6},
      {"vacuum", 0.0, 0.0},
  };
  return table;
}

Material find_material(std::string_view name) {
  std::string key(name);
  std::ranges::transform(key, key.begin(),
                         [](unsigned char c) { return std::tolower(c); });
  if (key == "carbon") key = "diamond";
  if (key == "aluminum") key = "aluminium";
  for (const Material& m : builtin_materials())
    if (m.name == key) return m;
  throw std::invalid_argument("unknown material '" + std::string(name) + "'");
}

double duality_sigma(const Material& m) {
  if (!(m.beta > 0.0))
    throw std::invalid_argument("duality constant undefined for material '" +
                                m.name + "' with beta = 0");
  return -m.delta / m.beta;
}

bool inside_inscribed_disk(int n_pixels, int row, int col) {
  const double c = 0.5 * n_pixels;
  const double dx = col + 0.5 - c;
  const double dy = row + 0.5 - c;
  return dx * dx + dy * dy <= c * c;
}

namespace {

Phantom empty_phantom(int n, const Material& background,
                      const Material& grain_a, const Material& grain_b) {
  Phantom p;
  const auto un = static_cast<std::size_t>(n);
  p.beta = Image(un, un, background.beta);
  p.delta = Image(un, un, background.delta);
  p.labels = LabelImage(un, un, 0);
  p.materials = {background, grain_a, grain_b};
  return p;
}

void paint(Phantom& p, std::size_t r, std::size_t c, int label) {
  const Material& m = p.materials[static_cast<std::size_t>(label)];
  p.labels(r, c) = label;
  p.beta(r, c) = m.beta;
  p.delta(r, c) = m.delta;
}

}  // namespace

Phantom make_grain_phantom(const ScanGeometry& geometry,
                           const Material& background, const Material& grain_a,
                           const Material& grain_b, int n_grains,
                           std::uint64_t seed) {
  const int n = geometry.n_pixels;
  if (n < 16) throw std::invalid_argument("grain phantom needs n_pixels >= 16");
  if (n_grains < 2) throw std::invalid_argument("n_grains must be >= 2");
  if (static_cast<long long>(n_grains) > static_cast<long long>(n) * n)
    throw std::invalid_argument("n_grains exceeds the number of pixels");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, static_cast<double>(n));
  const double c = 0.5 * n;

  struct Seed {
    double x, y;
    int label;
  };
  std::vector<Seed> seeds;
  seeds.reserve(static_cast<std::size_t>(n_grains));
  while (static_cast<int>(seeds.size()) < n_grains) {
    const double x = coord(rng);
    const double y = coord(rng);
    if ((x - c) * (x - c) + (y - c) * (y - c) > c * c) continue;
    seeds.push_back({x, y, 0});
  }
  std::bernoulli_distribution coin(0.5);
  for (Seed& s : seeds) s.label = coin(rng) ? 1 : 2;
  // Both grain materials must be present.
  const bool any_a = std::ranges::any_of(seeds, [](const Seed& s) { return s.label == 1; });
  const bool any_b = std::ranges::any_of(seeds, [](const Seed& s) { return s.label == 2; });
  if (!any_a) seeds.front().label = 1;
  if (!any_b) seeds.back().label = 2;

  Phantom p = empty_phantom(n, background, grain_a, grain_b);
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) {
      if (!inside_inscribed_disk(n, r, col)) continue;
      const double x = col + 0.5;
      const double y = r + 0.5;
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        const double d = (seeds[k].x - x) * (seeds[k].x - x) +
                         (seeds[k].y - y) * (seeds[k].y - y);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      paint(p, static_cast<std::size_t>(r), static_cast<std::size_t>(col),
            seeds[best].label);
    }
  }
  return p;
}

Phantom make_disk_phantom(const ScanGeometry& geometry,
                          const Material& background, const Material& fill) {
  const int n = geometry.n_pixels;
  Phantom p = empty_phantom(n, background, fill, fill);
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < n; ++col)
      if (inside_inscribed_disk(n, r, col))
        paint(p, static_cast<std::size_t>(r), static_cast<std::size_t>(col), 1);
  return p;
}

}  // namespace pct
