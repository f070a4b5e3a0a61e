#include "pct/pipelines.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "pct/retrieval.hpp"

namespace pct {

std::string to_string(Method m) { return m == Method::tsd ? "tsd" : "acd"; }

Method parse_method(std::string_view s) {
  if (s == "tsd" || s == "TSD") return Method::tsd;
  if (s == "acd" || s == "ACD") return Method::acd;
  throw std::invalid_argument("unknown method '" + std::string(s) +
                              "' (expected tsd or acd)");
}

double resolve_sigma(const ExperimentSpec& spec) {
  if (spec.sigma_rule == SigmaRule::explicit_value) {
    if (!std::isfinite(spec.sigma_value))
      throw std::invalid_argument("explicit sigma must be finite");
    return spec.sigma_value;
  }
  const Material& a = spec.phantom.grain_a;
  const Material& b = spec.phantom.grain_b;
  return duality_sigma(b.beta < a.beta ? b : a);
}

ReconstructionContext::ReconstructionContext(const ScanGeometry& geometry)
    : geometry_(geometry) {
  geometry_.validate();
  radon_ = std::make_shared<RadonOperator>(geometry_);
}

Dataset simulate(const ExperimentSpec& spec, const ReconstructionContext& ctx) {
  const ScanGeometry& g = ctx.geometry();
  const PhantomRecipe& r = spec.phantom;
  Dataset d;
  d.phantom = make_grain_phantom(g, r.background, r.grain_a, r.grain_b,
                                 r.n_grains, r.seed);
  d.projections = project(d.phantom, g, *ctx.radon());
  d.clean_intensity =
      propagate_intensity(d.projections.absorption, d.projections.phase, g);
  d.noisy_intensity = spec.add_noise ? add_poisson_noise(d.clean_intensity,
                                                         g.photons_n0,
                                                         spec.noise_seed)
                                     : d.clean_intensity;
  d.contrast = intensity_contrast(d.noisy_intensity);
  return d;
}

Dataset renoise(const Dataset& clean, double n0, std::uint64_t seed) {
  Dataset d = clean;
  d.noisy_intensity = add_poisson_noise(clean.clean_intensity, n0, seed);
  d.contrast = intensity_contrast(d.noisy_intensity);
  return d;
}

TVProblem tsd_problem(const ReconstructionContext& ctx, const Sinogram& contrast,
                      double sigma, double epsilon, double alpha) {
  const ScanGeometry& g = ctx.geometry();
  const Sinogram b = retrieve_absorption(contrast, g, {sigma, epsilon});
  TVProblem p;
  p.op = std::make_shared<ScaledOperator>(ctx.radon(), g.wavenumber());
  p.data = b.data.values;
  p.alpha = alpha;
  p.image_side = static_cast<std::size_t>(g.n_pixels);
  return p;
}

TVProblem acd_problem(const ReconstructionContext& ctx, const Sinogram& contrast,
                      double sigma, bool zero_dc_bins, double alpha) {
  const ScanGeometry& g = ctx.geometry();
  if (contrast.kind != SinogramKind::contrast)
    throw std::invalid_argument("acd_problem: expects a contrast sinogram");
  require_same_size(contrast.n_angles(), g.angles_deg.size(), "acd_problem angles");
  require_same_size(contrast.n_detector(), static_cast<std::size_t>(g.n_detector),
                    "acd_problem detector");
  Spectrum s = projection_spectrum(contrast);
  if (zero_dc_bins) zero_dc(s);
  TVProblem p;
  p.op = std::make_shared<AcdOperator>(ctx.radon(), g, sigma);
  p.data.resize(2 * s.data.size());
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    p.data[2 * i] = s.data.values[i].real();
    p.data[2 * i + 1] = s.data.values[i].imag();
  }
  p.alpha = alpha;
  p.image_side = static_cast<std::size_t>(g.n_pixels);
  return p;
}

namespace {

TVProblem method_problem(Method m, const ExperimentSpec& spec,
                         const ReconstructionContext& ctx,
                         const Sinogram& contrast, double sigma, double alpha) {
  return m == Method::tsd
             ? tsd_problem(ctx, contrast, sigma, spec.epsilon, alpha)
             : acd_problem(ctx, contrast, sigma, spec.zero_dc, alpha);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<double> label_betas(const Phantom& p) {
  std::vector<double> out;
  for (const Material& m : p.materials) out.push_back(m.beta);
  return out;
}

}  // namespace

Reconstruction run_method(Method m, const ExperimentSpec& spec,
                          const ReconstructionContext& ctx,
                          const Sinogram& contrast, double sigma, double alpha) {
  const auto t0 = std::chrono::steady_clock::now();
  const TVProblem problem = method_problem(m, spec, ctx, contrast, sigma, alpha);
  Reconstruction r;
  r.method = m;
  r.alpha = alpha;
  r.sigma = sigma;
  r.report = solve_tv(problem, spec.solver);
  const auto n = problem.image_side;
  r.beta = Image(n, n);
  r.beta.values = r.report.solution;
  r.delta = duality_delta(r.beta, sigma);
  r.seconds = seconds_since(t0);
  return r;
}

Reconstruction run_tsd(const ExperimentSpec& spec, const ReconstructionContext& ctx,
                       const Sinogram& contrast, double sigma, double alpha) {
  return run_method(Method::tsd, spec, ctx, contrast, sigma, alpha);
}

Reconstruction run_acd(const ExperimentSpec& spec, const ReconstructionContext& ctx,
                       const Sinogram& contrast, double sigma, double alpha) {
  return run_method(Method::acd, spec, ctx, contrast, sigma, alpha);
}

double alpha_unit(Method m, const ExperimentSpec& spec,
                  const ReconstructionContext& ctx, const Sinogram& contrast,
                  double sigma) {
  const TVProblem p = method_problem(m, spec, ctx, contrast, sigma, 1.0);
  const NormalizedProblem np = normalize_problem(p, spec.solver);
  return np.op_scale * np.op_scale * np.image_scale;
}

std::vector<double> alpha_grid(const ExperimentSpec& spec, double unit) {
  if (spec.alpha_grid_points < 1)
    throw std::invalid_argument("alpha grid needs at least one point");
  if (!(spec.alpha_grid_factor > 1.0) || !(spec.alpha_center > 0.0) || !(unit > 0.0))
    throw std::invalid_argument("alpha grid needs factor > 1 and positive center");
  std::vector<double> out;
  const int half = (spec.alpha_grid_points - 1) / 2;
  for (int k = 0; k < spec.alpha_grid_points; ++k)
    out.push_back(unit * spec.alpha_center *
                  std::pow(spec.alpha_grid_factor, k - half));
  return out;
}

AlphaSearch select_alpha(Method m, const ExperimentSpec& spec,
                         const ReconstructionContext& ctx,
                         const Sinogram& contrast, double sigma,
                         const Phantom& truth) {
  AlphaSearch s;
  s.alphas = alpha_grid(spec, alpha_unit(m, spec, ctx, contrast, sigma));
  double best_e = std::numeric_limits<double>::infinity();
  bool have = false;
  std::string last_error;
  for (double a : s.alphas) {
    try {
      Reconstruction r = run_method(m, spec, ctx, contrast, sigma, a);
      const double e = relative_error(r.beta.flat(), truth.beta.flat());
      s.errors.push_back(e);
      if (e < best_e) {
        best_e = e;
        s.best = std::move(r);
        have = true;
      }
    } catch (const std::runtime_error& ex) {
      s.errors.push_back(std::numeric_limits<double>::quiet_NaN());
      last_error = ex.what();
    }
  }
  if (!have)
    throw std::runtime_error("alpha search: every grid point failed (" +
                             last_error + ")");
  return s;
}

const std::vector<MaterialRow>& material_rows() {
  static const std::vector<MaterialRow> rows{
      {"vacuum", "polycarbonate", "diamond"},
      {"polycarbonate", "silicon", "magnesium"},
      {"polycarbonate", "silicon", "aluminium"},
      {"polycarbonate", "copper", "iron"},
  };
  return rows;
}

std::vector<double> default_noise_levels() { return {1e3, 5e3, 1e4, 5e4}; }

std::vector<SweepRecord> run_cell(const ExperimentSpec& spec,
                                  const ReconstructionContext& ctx,
                                  const Dataset& data, int row) {
  std::vector<SweepRecord> out;
  const std::vector<double> betas = label_betas(data.phantom);
  for (Method m : {Method::tsd, Method::acd}) {
    SweepRecord rec;
    rec.experiment_id = spec.id;
    rec.row = row;
    rec.method = m;
    rec.n0 = spec.geometry.photons_n0;
    rec.truth = data.phantom.beta;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rec.sigma = resolve_sigma(spec);
      const std::optional<double>& fixed =
          m == Method::tsd ? spec.alpha_tsd : spec.alpha_acd;
      Reconstruction r =
          fixed ? run_method(m, spec, ctx, data.contrast, rec.sigma, *fixed)
                : select_alpha(m, spec, ctx, data.contrast, rec.sigma,
                               data.phantom)
                      .best;
      rec.alpha = r.alpha;
      rec.iterations = r.report.iterations;
      rec.converged = r.report.converged;
      const MetricReport mr = evaluate(r.beta.flat(), data.phantom.beta.flat(),
                                       data.phantom.labels, betas);
      rec.E = mr.relative_error;
      rec.Es = mr.segmentation_error;
      rec.beta = std::move(r.beta);
    } catch (const std::exception& ex) {
      rec.failed = true;
      rec.error = ex.what();
      rec.E = rec.Es = std::numeric_limits<double>::quiet_NaN();
    }
    rec.seconds = seconds_since(t0);
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

// Runs jobs[i] for every i on up to `threads` workers; results land by index.
template <class Job>
std::vector<std::vector<SweepRecord>> run_pool(std::size_t n_jobs, int threads,
                                               Job&& job) {
  std::vector<std::vector<SweepRecord>> results(n_jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_jobs; i = next++) results[i] = job(i);
  };
  const std::size_t n_workers =
      std::min<std::size_t>(n_jobs, static_cast<std::size_t>(std::max(1, threads)));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

std::vector<SweepRecord> flatten(std::vector<std::vector<SweepRecord>> cells) {
  std::vector<SweepRecord> out;
  for (auto& c : cells)
    for (auto& r : c) out.push_back(std::move(r));
  return out;
}

SweepRecord failed_record(const ExperimentSpec& spec, int row, Method m,
                          double n0, const std::string& what) {
  SweepRecord rec;
  rec.experiment_id = spec.id;
  rec.row = row;
  rec.method = m;
  rec.n0 = n0;
  rec.failed = true;
  rec.error = what;
  rec.E = rec.Es = std::numeric_limits<double>::quiet_NaN();
  return rec;
}

}  // namespace

std::vector<SweepRecord> material_sweep(const ExperimentSpec& base, int threads) {
  const auto& rows = material_rows();
  const ReconstructionContext ctx(base.geometry);
  auto cells = run_pool(rows.size(), threads, [&](std::size_t i) {
    ExperimentSpec spec = base;
    const int row = static_cast<int>(i) + 1;
    spec.id = base.id + "-row" + std::to_string(row);
    try {
      spec.phantom.background = find_material(rows[i].background);
      spec.phantom.grain_a = find_material(rows[i].grain_a);
      spec.phantom.grain_b = find_material(rows[i].grain_b);
      const Dataset data = simulate(spec, ctx);
      return run_cell(spec, ctx, data, row);
    } catch (const std::exception& ex) {
      const double n0 = base.geometry.photons_n0;
      return std::vector<SweepRecord>{
          failed_record(spec, row, Method::tsd, n0, ex.what()),
          failed_record(spec, row, Method::acd, n0, ex.what())};
    }
  });
  return flatten(std::move(cells));
}

std::vector<SweepRecord> noise_sweep(const ExperimentSpec& base,
                                     const std::vector<double>& n0_list,
                                     int threads) {
  if (n0_list.empty()) throw std::invalid_argument("noise sweep: empty n0 list");
  for (double n0 : n0_list)
    if (!(n0 > 0.0) || !std::isfinite(n0))
      throw std::invalid_argument("noise sweep: photon counts must be positive");
  const ReconstructionContext base_ctx(base.geometry);
  ExperimentSpec clean_spec = base;
  clean_spec.add_noise = false;
  const Dataset clean = simulate(clean_spec, base_ctx);
  auto cells = run_pool(n0_list.size(), threads, [&](std::size_t i) {
    ExperimentSpec spec = base;
    const int row = static_cast<int>(i) + 1;
    spec.id = base.id + "-n0-" + std::to_string(row);
    spec.geometry.photons_n0 = n0_list[i];
    try {
      const Dataset data = renoise(clean, n0_list[i], base.noise_seed + i);
      return run_cell(spec, base_ctx, data, row);
    } catch (const std::exception& ex) {
      return std::vector<SweepRecord>{
          failed_record(spec, row, Method::tsd, n0_list[i], ex.what()),
          failed_record(spec, row, Method::acd, n0_list[i], ex.what())};
    }
  });
  return flatten(std::move(cells));
}

}  // namespace pct
