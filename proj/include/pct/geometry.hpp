#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pct/grid.hpp"

namespace pct {

/// Physical and discretization parameters of one simulated scan.
/// Lengths are in meters, angles in degrees.
struct ScanGeometry {
  int n_pixels = 64;
  double object_pixel_size = 1e-6;
  double wavelength = 0.0;
  double distance = 0.5;
  double detector_pixel_size = 1e-6;
  int n_detector = 192;
  std::vector<double> angles_deg;
  double photons_n0 = 1e5;
  std::uint64_t rng_seed = 0;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  int n_angles() const { return static_cast<int>(angles_deg.size()); }
  double sampling_frequency() const { return 1.0 / detector_pixel_size; }
  /// 2 pi / lambda, the scale between line integrals of beta/delta and B/phi.
  double wavenumber() const;
};

/// lambda [m] for a photon energy in keV.
double wavelength_from_energy_kev(double energy_kev);

/// n angles uniformly spaced in [0, 180).
std::vector<double> uniform_angles(int n);

/// Detector width leaving margin for Fresnel fringes around the object shadow.
int default_detector_pixels(int n_pixels);

/// N = 64, 120 angles, 192 detector bins, 40 keV, R = 0.5 m, 1 um pixels.
ScanGeometry desk_geometry();

/// N = 200, 360 angles, 572 detector bins, otherwise as desk_geometry().
ScanGeometry full_scale_geometry();

struct Material {
  std::string name;
  double beta = 0.0;
  double delta = 0.0;

  bool operator==(const Material&) const = default;
};

/// Absorption index and refractive index decrement at 40 keV, plus vacuum.
const std::vector<Material>& builtin_materials();

/// Case-insensitive lookup; throws std::invalid_argument for unknown names.
Material find_material(std::string_view name);

/// sigma = -delta / beta. Throws for beta <= 0.
double duality_sigma(const Material& m);

struct Phantom {
  Image beta;
  Image delta;
  LabelImage labels;  // 0 background, 1 grain_a, 2 grain_b
  std::vector<Material> materials;  // indexed by label
};

/// Seeded Voronoi grain structure filling the inscribed disk; pixels outside
/// the disk are background.
Phantom make_grain_phantom(const ScanGeometry& geometry,
                           const Material& background, const Material& grain_a,
                           const Material& grain_b, int n_grains,
                           std::uint64_t seed);

/// Phantom with a single material filling the inscribed disk (label 1).
Phantom make_disk_phantom(const ScanGeometry& geometry,
                          const Material& background, const Material& fill);

bool inside_inscribed_disk(int n_pixels, int row, int col);

}  // namespace pct
