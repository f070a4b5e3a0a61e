#pragma once

#include <cstdint>

#include "pct/geometry.hpp"
#include "pct/grid.hpp"
#include "pct/operators.hpp"

namespace pct {

struct ProjectionPair {
  Sinogram absorption;  // B = (2 pi / lambda) A beta
  Sinogram phase;       // phi = -(2 pi / lambda) A delta
};

ProjectionPair project(const Phantom& phantom, const ScanGeometry& geometry,
                       const RadonOperator& radon);

/// Exit-plane transmittance exp(-B + i phi) propagated over the geometry's
/// distance with the Fresnel transfer function exp(-i pi lambda R omega^2);
/// returns the detected intensity for unit incident intensity.
Sinogram propagate_intensity(const Sinogram& absorption, const Sinogram& phase,
                             const ScanGeometry& geometry);

/// Each bin becomes Poisson(n0 * I) / n0. One RNG stream per projection,
/// derived from (seed, angle index).
Sinogram add_poisson_noise(const Sinogram& intensity, double n0,
                           std::uint64_t seed);

/// g = I - 1.
Sinogram intensity_contrast(const Sinogram& intensity);

/// Unitary DFT of every projection.
Spectrum projection_spectrum(const Sinogram& sinogram);

/// Real part of the inverse per-projection DFT.
Sinogram inverse_projection_spectrum(const Spectrum& spectrum,
                                     SinogramKind kind);

/// Sets the omega = 0 bin of every projection to zero.
void zero_dc(Spectrum& spectrum);

/// Contrast predicted by the linear CTF-duality model: F^-1 W F B.
Sinogram linear_ctf_contrast(const Sinogram& absorption, const CtfFilter& filter);

/// ||F g - W F B|| / ||W F B|| over bins with nonzero weight, DC excluded.
double ctf_linearization_discrepancy(const Sinogram& contrast,
                                     const Sinogram& absorption,
                                     const CtfFilter& filter);

}  // namespace pct
