#include "pct/retrieval.hpp"

#include <stdexcept>

#include "pct/forward.hpp"
#include "pct/operators.hpp"

namespace pct {

Sinogram retrieve_absorption(const Sinogram& contrast,
                             const ScanGeometry& geometry,
                             const RetrievalConfig& cfg) {
  if (!(cfg.epsilon >= 0.0))
    throw std::invalid_argument("retrieve_absorption: epsilon must be >= 0");
  if (contrast.kind != SinogramKind::contrast)
    throw std::invalid_argument("retrieve_absorption: expects a contrast sinogram");
  const CtfFilter filter = ctf_filter(geometry, cfg.sigma);
  require_same_size(contrast.n_detector(), filter.weights.size(),
                    "retrieve_absorption detector");
  const double wmax = filter.max_abs_weight();
  const double floor = cfg.epsilon * cfg.epsilon * wmax * wmax;

  std::vector<double> gain(filter.weights.size());
  for (std::size_t j = 0; j < gain.size(); ++j) {
    const double w = filter.weights[j];
    const double den = w * w + floor;
    gain[j] = den > 0.0 ? w / den : 0.0;
  }
  Spectrum s = projection_spectrum(contrast);
  for (std::size_t a = 0; a < s.n_angles(); ++a)
    for (std::size_t j = 0; j < s.n_detector(); ++j) s.data(a, j) *= gain[j];
  return inverse_projection_spectrum(s, SinogramKind::absorption);
}

Image duality_delta(const Image& beta, double sigma) {
  Image delta = beta;
  for (double& v : delta.values) v *= -sigma;
  return delta;
}

}  // namespace pct
