#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pct/forward.hpp"
#include "pct/geometry.hpp"
#include "pct/metrics.hpp"
#include "pct/operators.hpp"
#include "pct/solver.hpp"

namespace pct {

enum class Method { tsd, acd };
std::string to_string(Method m);
Method parse_method(std::string_view s);

enum class SigmaRule { smallest_beta_grain, explicit_value };

struct PhantomRecipe {
  Material background = find_material("vacuum");
  Material grain_a = find_material("polycarbonate");
  Material grain_b = find_material("diamond");
  int n_grains = 12;
  std::uint64_t seed = 7;
};

struct ExperimentSpec {
  std::string id = "experiment";
  ScanGeometry geometry = desk_geometry();
  PhantomRecipe phantom;
  SigmaRule sigma_rule = SigmaRule::smallest_beta_grain;
  double sigma_value = 0.0;
  /// Unset: chosen per cell by the logarithmic grid search.
  std::optional<double> alpha_tsd;
  std::optional<double> alpha_acd;
  /// Grid center in normalized units (alpha / (c^2 s), see solver.hpp).
  double alpha_center = 0.3;
  int alpha_grid_points = 7;
  double alpha_grid_factor = 3.1622776601683795;  // sqrt(10)
  double epsilon = 1e-3;
  bool zero_dc = true;
  bool add_noise = true;
  std::uint64_t noise_seed = 11;
  SolverConfig solver;
};

/// sigma for the spec: -delta/beta of the grain material with the smallest
/// beta (background excluded), or the explicit value.
double resolve_sigma(const ExperimentSpec& spec);

/// Operators shared by every reconstruction on one geometry.
class ReconstructionContext {
 public:
  explicit ReconstructionContext(const ScanGeometry& geometry);
  const ScanGeometry& geometry() const { return geometry_; }
  const std::shared_ptr<const RadonOperator>& radon() const { return radon_; }

 private:
  ScanGeometry geometry_;
  std::shared_ptr<const RadonOperator> radon_;
};

struct Dataset {
  Phantom phantom;
  ProjectionPair projections;
  Sinogram clean_intensity;
  Sinogram noisy_intensity;
  Sinogram contrast;  // from the noisy intensity (clean when add_noise off)
};

Dataset simulate(const ExperimentSpec& spec, const ReconstructionContext& ctx);

/// Same phantom and clean intensity, new noise realization.
Dataset renoise(const Dataset& clean, double n0, std::uint64_t seed);

/// TV problems the two pipelines hand to the solver.
TVProblem tsd_problem(const ReconstructionContext& ctx, const Sinogram& contrast,
                      double sigma, double epsilon, double alpha);
TVProblem acd_problem(const ReconstructionContext& ctx, const Sinogram& contrast,
                      double sigma, bool zero_dc, double alpha);

struct Reconstruction {
  Method method = Method::tsd;
  double alpha = 0.0;
  double sigma = 0.0;
  SolveReport report;
  Image beta;
  Image delta;
  double seconds = 0.0;
};

Reconstruction run_tsd(const ExperimentSpec& spec, const ReconstructionContext& ctx,
                       const Sinogram& contrast, double sigma, double alpha);
Reconstruction run_acd(const ExperimentSpec& spec, const ReconstructionContext& ctx,
                       const Sinogram& contrast, double sigma, double alpha);
Reconstruction run_method(Method m, const ExperimentSpec& spec,
                          const ReconstructionContext& ctx,
                          const Sinogram& contrast, double sigma, double alpha);

/// alpha / alpha~ for the method's problem on this data: c^2 s.
double alpha_unit(Method m, const ExperimentSpec& spec,
                  const ReconstructionContext& ctx, const Sinogram& contrast,
                  double sigma);

/// The grid of physical alpha values searched for one cell.
std::vector<double> alpha_grid(const ExperimentSpec& spec, double unit);

struct AlphaSearch {
  Reconstruction best;
  std::vector<double> alphas;
  std::vector<double> errors;  // E per grid point, NaN for failed solves
};

/// Runs every grid point and keeps the one with the smallest E against the
/// phantom's beta map (ties toward the smaller alpha).
AlphaSearch select_alpha(Method m, const ExperimentSpec& spec,
                         const ReconstructionContext& ctx,
                         const Sinogram& contrast, double sigma,
                         const Phantom& truth);

struct SweepRecord {
  std::string experiment_id;
  int row = 0;
  Method method = Method::tsd;
  double n0 = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  double E = 0.0;
  double Es = 0.0;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
  Image beta;
  Image truth;
};

struct MaterialRow {
  std::string background, grain_a, grain_b;
};

/// The four material rows of the comparison study, low to high absorption.
const std::vector<MaterialRow>& material_rows();

/// Default photon counts of the noise study, high noise first.
std::vector<double> default_noise_levels();

/// 4 rows x {tsd, acd}; ordered by (row, method).
std::vector<SweepRecord> material_sweep(const ExperimentSpec& base, int threads = 1);

/// n0_list.size() rows x {tsd, acd} on the base phantom; ordered by
/// (row, method). Both methods of a row see the same noisy data.
std::vector<SweepRecord> noise_sweep(const ExperimentSpec& base,
                                     const std::vector<double>& n0_list,
                                     int threads = 1);

/// Runs both methods on one cell and fills two records.
std::vector<SweepRecord> run_cell(const ExperimentSpec& spec,
                                  const ReconstructionContext& ctx,
                                  const Dataset& data, int row);

}  // namespace pct
