#pragma once

#include "pct/geometry.hpp"
#include "pct/grid.hpp"

namespace pct {

struct RetrievalConfig {
  double sigma = 0.0;
  /// Regularized-division floor relative to max |w|.
  double epsilon = 1e-3;
};

/// Per-projection inversion of the CTF-duality filter:
/// B^ = g^ w / (w^2 + eps^2 max(w^2)), B = Re F^-1 B^.
Sinogram retrieve_absorption(const Sinogram& contrast,
                             const ScanGeometry& geometry,
                             const RetrievalConfig& cfg);

/// delta = -sigma * beta.
Image duality_delta(const Image& beta, double sigma);

}  // namespace pct
