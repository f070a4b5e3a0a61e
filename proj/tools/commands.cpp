#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "config.hpp"
#include "pct/forward.hpp"
#include "pct/io.hpp"
#include "pct/kernels.hpp"
#include "pct/metrics.hpp"
#include "pct/pipelines.hpp"

namespace pct::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* tool_version = "1.0.0";

struct GlobalOptions {
  std::optional<fs::path> config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> max_iters;
  bool full_scale = false;
};

struct Context {
  GlobalOptions global;
  RunConfig rc;
  json recorded_options = json::object();  // from a manifest given as --config
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

class Manifest {
 public:
  Manifest(const std::string& command, const RunConfig& rc) {
    j_["tool"] = "pct";
    j_["version"] = tool_version;
    j_["command"] = command;
    j_["kernels"] = kernels::active().name;
    j_["options"] = json::object();
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
    set_config(rc);
    j_["seeds"] = {{"phantom", rc.spec.phantom.seed}, {"noise", rc.spec.noise_seed}};
  }

  void set_config(const RunConfig& rc) {
    json c = json::object();
    for (const auto& [k, v] : rc.resolved()) c[k] = v;
    j_["config"] = c;
  }
  json& operator[](const char* key) { return j_[key]; }
  void input(const std::string& name, const fs::path& path) {
    j_["inputs"][name] = {{"path", path.string()}, {"sha256", io::sha256_file(path)}};
  }
  void output(const fs::path& dir, const fs::path& rel) {
    j_["outputs"][rel.generic_string()] = io::sha256_file(dir / rel);
  }
  void write(const fs::path& dir) const {
    std::ofstream os(dir / "manifest.json");
    os << j_.dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write manifest in '" + dir.string() + "'");
  }

 private:
  json j_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void prepare_out(const fs::path& dir) {
  if (dir.empty()) throw std::invalid_argument("--out is required");
  fs::create_directories(dir);
}

Image read_image(const fs::path& path, io::GridKind expect, std::size_t n) {
  io::RawGrid r = io::read_raw(path);
  if (r.kind != expect)
    throw std::invalid_argument("'" + path.string() + "' has the wrong grid kind");
  if (r.grid.rows != n || r.grid.cols != n)
    throw std::invalid_argument("'" + path.string() + "' is " + std::to_string(r.grid.rows) +
                                "x" + std::to_string(r.grid.cols) + " but config n_pixels is " +
                                std::to_string(n));
  return std::move(r.grid);
}

LabelImage read_label_image(const fs::path& path, std::size_t n) {
  LabelImage l = io::read_labels(path);
  if (l.rows != n || l.cols != n)
    throw std::invalid_argument("'" + path.string() + "' does not match n_pixels");
  return l;
}

std::vector<double> mean_beta_per_label(const Image& beta, const LabelImage& labels) {
  const int n_labels = *std::ranges::max_element(labels.values) + 1;
  std::vector<double> sum(static_cast<std::size_t>(n_labels), 0.0);
  std::vector<double> count(static_cast<std::size_t>(n_labels), 0.0);
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels.values[i]);
    sum[l] += beta.values[i];
    count[l] += 1.0;
  }
  for (std::size_t l = 0; l < sum.size(); ++l)
    if (count[l] > 0.0) sum[l] /= count[l];
  return sum;
}

std::pair<double, double> own_range(const Image& u) {
  const auto [mn, mx] = std::ranges::minmax(u.values);
  return mx > mn ? std::pair{mn, mx} : std::pair{mn, mn + 1.0};
}

int cmd_phantom(Context& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path& out = c.global.out;
  prepare_out(out);
  const ExperimentSpec& s = c.rc.spec;
  const Phantom p = make_grain_phantom(s.geometry, s.phantom.background,
                                       s.phantom.grain_a, s.phantom.grain_b,
                                       s.phantom.n_grains, s.phantom.seed);
  io::write_raw(out / "beta.raw", p.beta, io::GridKind::beta);
  io::write_raw(out / "delta.raw", p.delta, io::GridKind::delta);
  io::write_raw(out / "labels.raw", p.labels);
  const auto [lo, hi] = io::display_range(p.beta);
  io::write_pgm16(out / "phantom.pgm", io::render_gray16(p.beta, lo, hi));

  Manifest m("phantom", c.rc);
  for (const char* f : {"beta.raw", "delta.raw", "labels.raw", "phantom.pgm"}) m.output(out, f);
  m["display_range"] = {{"lo", lo}, {"hi", hi}, {"source", "truth"}};
  m["timing_seconds"] = seconds_since(t0);
  m.write(out);
  *c.out << "phantom: wrote " << out.string() << '\n';
  return ok;
}

int cmd_simulate(Context& c, const fs::path& phantom_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path& out = c.global.out;
  if (phantom_dir.empty()) throw std::invalid_argument("simulate needs --phantom");
  const ExperimentSpec& s = c.rc.spec;
  const ScanGeometry& g = s.geometry;
  const auto n = static_cast<std::size_t>(g.n_pixels);
  Phantom p;
  p.beta = read_image(phantom_dir / "beta.raw", io::GridKind::beta, n);
  p.delta = read_image(phantom_dir / "delta.raw", io::GridKind::delta, n);
  p.labels = read_label_image(phantom_dir / "labels.raw", n);
  p.materials = {s.phantom.background, s.phantom.grain_a, s.phantom.grain_b};
  prepare_out(out);

  const ReconstructionContext ctx(g);
  const ProjectionPair proj = project(p, g, *ctx.radon());
  const Sinogram clean = propagate_intensity(proj.absorption, proj.phase, g);
  const Sinogram noisy =
      s.add_noise ? add_poisson_noise(clean, g.photons_n0, s.noise_seed) : clean;
  const Sinogram contrast = intensity_contrast(noisy);
  io::write_raw(out / "intensity_clean.raw", clean);
  io::write_raw(out / "intensity_noisy.raw", noisy);
  io::write_raw(out / "contrast.raw", contrast);

  Manifest m("simulate", c.rc);
  m["options"]["phantom"] = phantom_dir.string();
  for (const char* f : {"beta.raw", "delta.raw", "labels.raw"}) m.input(f, phantom_dir / f);
  for (const char* f : {"intensity_clean.raw", "intensity_noisy.raw", "contrast.raw"})
    m.output(out, f);
  m["sigma"] = resolve_sigma(s);
  m["timing_seconds"] = seconds_since(t0);
  m.write(out);
  *c.out << "simulate: wrote " << out.string() << '\n';
  return ok;
}

Sinogram read_contrast(const fs::path& data, const ScanGeometry& g) {
  const fs::path file = fs::is_directory(data) ? data / "contrast.raw" : data;
  Sinogram s = io::read_sinogram(file);
  if (s.kind == SinogramKind::intensity) s = intensity_contrast(s);
  if (s.kind != SinogramKind::contrast)
    throw std::invalid_argument("'" + file.string() + "' holds " + to_string(s.kind) +
                                ", expected contrast or intensity");
  if (s.n_angles() != g.angles_deg.size() ||
      s.n_detector() != static_cast<std::size_t>(g.n_detector))
    throw std::invalid_argument(
        "data '" + file.string() + "' is " + std::to_string(s.n_angles()) + "x" +
        std::to_string(s.n_detector()) + " (angles x bins) but config expects " +
        std::to_string(g.angles_deg.size()) + "x" + std::to_string(g.n_detector));
  return s;
}

int cmd_reconstruct(Context& c, std::string method_text, const fs::path& data,
                    const fs::path& truth_dir, std::optional<double> alpha_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path& out = c.global.out;
  if (method_text.empty() && c.recorded_options.contains("method"))
    method_text = c.recorded_options["method"].get<std::string>();
  if (method_text.empty()) throw std::invalid_argument("reconstruct needs --method tsd|acd");
  const Method method = parse_method(method_text);
  if (data.empty()) throw std::invalid_argument("reconstruct needs --data");
  if (alpha_flag && !(*alpha_flag > 0.0)) throw std::invalid_argument("--alpha must be > 0");

  ExperimentSpec& s = c.rc.spec;
  const ScanGeometry& g = s.geometry;
  const Sinogram contrast = read_contrast(data, g);
  const auto n = static_cast<std::size_t>(g.n_pixels);
  std::optional<Phantom> truth;
  if (!truth_dir.empty()) {
    Phantom p;
    p.beta = read_image(truth_dir / "beta.raw", io::GridKind::beta, n);
    p.labels = read_label_image(truth_dir / "labels.raw", n);
    truth = std::move(p);
  }
  prepare_out(out);

  const double sigma = resolve_sigma(s);
  const ReconstructionContext ctx(g);
  std::optional<double>& configured = method == Method::tsd ? s.alpha_tsd : s.alpha_acd;
  std::string alpha_source;
  Reconstruction r;
  json grid = nullptr;
  if (alpha_flag) {
    alpha_source = "flag";
    r = run_method(method, s, ctx, contrast, sigma, *alpha_flag);
  } else if (configured) {
    alpha_source = "config";
    r = run_method(method, s, ctx, contrast, sigma, *configured);
  } else if (truth) {
    alpha_source = "grid";
    AlphaSearch search = select_alpha(method, s, ctx, contrast, sigma, *truth);
    grid = {{"alpha", search.alphas}, {"E", json::array()}};
    for (double e : search.errors) grid["E"].push_back(std::isnan(e) ? json(nullptr) : json(e));
    r = std::move(search.best);
  } else {
    alpha_source = "default";
    const double unit = alpha_unit(method, s, ctx, contrast, sigma);
    r = run_method(method, s, ctx, contrast, sigma, unit * s.alpha_center);
  }
  configured = r.alpha;

  io::write_raw(out / "beta.raw", r.beta, io::GridKind::beta);
  io::write_raw(out / "delta.raw", r.delta, io::GridKind::delta);
  io::write_residual_csv(out / "residuals.csv", r.report);
  const auto [lo, hi] = truth ? io::display_range(truth->beta) : own_range(r.beta);
  io::write_pgm16(out / "beta.pgm", io::render_gray16(r.beta, lo, hi));

  Manifest m("reconstruct", c.rc);
  m["options"]["method"] = to_string(method);
  m["options"]["data"] = data.string();
  if (truth) m["options"]["truth"] = truth_dir.string();
  m.input("contrast", fs::is_directory(data) ? data / "contrast.raw" : data);
  if (truth) {
    m.input("truth_beta", truth_dir / "beta.raw");
    m.input("truth_labels", truth_dir / "labels.raw");
  }
  for (const char* f : {"beta.raw", "delta.raw", "residuals.csv", "beta.pgm"}) m.output(out, f);
  if (truth) {
    SweepRecord rec;
    rec.experiment_id = "reconstruct";
    rec.method = method;
    rec.n0 = g.photons_n0;
    rec.alpha = r.alpha;
    rec.sigma = sigma;
    const MetricReport mr = evaluate(r.beta.flat(), truth->beta.flat(), truth->labels,
                                     mean_beta_per_label(truth->beta, truth->labels));
    rec.E = mr.relative_error;
    rec.Es = mr.segmentation_error;
    rec.iterations = r.report.iterations;
    rec.converged = r.report.converged;
    rec.seconds = r.seconds;
    io::write_metrics_csv(out / "metrics.csv", {rec});
    m.output(out, "metrics.csv");
    m["metrics"] = {{"E", mr.relative_error}, {"Es", mr.segmentation_error},
                    {"thresholds", mr.thresholds}};
  }
  m["sigma"] = sigma;
  m["alpha"] = r.alpha;
  m["alpha_source"] = alpha_source;
  if (!grid.is_null()) m["alpha_grid"] = grid;
  m["display_range"] = {{"lo", lo}, {"hi", hi}, {"source", truth ? "truth" : "self"}};
  const ResidualPair last = r.report.residual_history.empty()
                                ? ResidualPair{}
                                : r.report.residual_history.back();
  m["convergence"] = {{"iterations", r.report.iterations},
                      {"converged", r.report.converged},
                      {"final_p_sq", last.primal_sq},
                      {"final_d_sq", last.dual_sq}};
  m["timing_seconds"] = seconds_since(t0);
  m.write(out);

  if (!r.report.converged)
    *c.err << "warning: " << to_string(method) << " did not converge in "
           << r.report.iterations << " iterations; best iterate written\n";
  *c.out << "reconstruct: " << to_string(method) << " alpha=" << r.alpha
         << " iterations=" << r.report.iterations << " wrote " << out.string() << '\n';
  return ok;
}

int cmd_sweep(Context& c, std::string kind) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path& out = c.global.out;
  if (kind.empty() && c.recorded_options.contains("kind"))
    kind = c.recorded_options["kind"].get<std::string>();
  if (kind != "materials" && kind != "noise")
    throw std::invalid_argument("sweep needs --kind materials|noise");
  prepare_out(out);
  int threads = c.global.threads.value_or(
      static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  if (threads < 1) throw std::invalid_argument("--threads must be >= 1");

  ExperimentSpec spec = c.rc.spec;
  spec.id = kind;
  const std::vector<SweepRecord> records =
      kind == "materials" ? material_sweep(spec, threads)
                          : noise_sweep(spec, c.rc.n0_list, threads);

  io::write_metrics_csv(out / "results.csv", records);
  Manifest m("sweep", c.rc);
  m["options"]["kind"] = kind;
  m.output(out, "results.csv");

  std::vector<std::vector<Grid<std::uint16_t>>> panel;
  std::size_t failed = 0;
  json cells = json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SweepRecord& r = records[i];
    const fs::path rel = fs::path("cells") / ("row" + std::to_string(r.row) + "-" + to_string(r.method));
    json cell = {{"row", r.row}, {"method", to_string(r.method)}, {"n0", r.n0},
                 {"alpha", r.alpha}, {"sigma", r.sigma}, {"iterations", r.iterations},
                 {"converged", r.converged}, {"failed", r.failed}};
    const std::size_t side = static_cast<std::size_t>(spec.geometry.n_pixels);
    if (r.method == Method::tsd) {
      panel.emplace_back();
      if (!r.truth.values.empty()) {
        const auto [lo, hi] = io::display_range(r.truth);
        panel.back().push_back(io::render_gray16(r.truth, lo, hi));
      } else {
        panel.back().emplace_back(side, side, std::uint16_t{0});
      }
    }
    if (r.failed) {
      ++failed;
      cell["error"] = r.error;
      *c.err << "warning: sweep cell row " << r.row << " " << to_string(r.method)
             << " failed: " << r.error << '\n';
      panel.back().emplace_back(side, side, std::uint16_t{0});
    } else {
      fs::create_directories(out / rel);
      io::write_raw(out / rel / "beta.raw", r.beta, io::GridKind::beta);
      const auto [lo, hi] = io::display_range(r.truth);
      const auto img = io::render_gray16(r.beta, lo, hi);
      io::write_pgm16(out / rel / "beta.pgm", img);
      m.output(out, rel / "beta.raw");
      m.output(out, rel / "beta.pgm");
      panel.back().push_back(img);
      if (!r.converged)
        *c.err << "warning: sweep cell row " << r.row << " " << to_string(r.method)
               << " did not converge\n";
    }
    cells.push_back(cell);
  }
  io::write_pgm16(out / "panels.pgm", io::montage(panel));
  m.output(out, "panels.pgm");
  m["cells"] = cells;
  m["threads"] = threads;
  m["timing_seconds"] = seconds_since(t0);
  m.write(out);
  *c.out << "sweep " << kind << ": " << records.size() << " records, " << failed
         << " failed, wrote " << out.string() << '\n';
  return failed == records.size() ? runtime_failure : ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phase-contrast tomography: simulation and TSD/ACD reconstruction", "pct"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  std::string config_text, out_text;
  app.add_option("--config", config_text, "INI config or run manifest (.json)");
  app.add_option("--out", out_text, "Output directory");
  app.add_option("--seed", g.seed, "Noise seed (overrides config)");
  app.add_option("--threads", g.threads, "Sweep worker count (default: all cores)");
  app.add_option("--max-iters", g.max_iters, "Solver iteration cap");
  app.add_flag("--full-scale", g.full_scale, "Start from the full-scale geometry");
  app.set_version_flag("--version", tool_version);

  auto* phantom = app.add_subcommand("phantom", "Write a grain phantom");
  auto* simulate = app.add_subcommand("simulate", "Simulate intensities from a phantom");
  std::string phantom_dir;
  simulate->add_option("--phantom", phantom_dir, "Phantom directory");
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct beta from contrast data");
  std::string method, data_dir, truth_dir;
  std::optional<double> alpha;
  reconstruct->add_option("--method", method, "tsd or acd");
  reconstruct->add_option("--data", data_dir, "Simulation directory or contrast.raw");
  reconstruct->add_option("--truth", truth_dir, "Phantom directory for metrics and alpha search");
  reconstruct->add_option("--alpha", alpha, "Regularization weight (overrides config)");
  auto* sweep = app.add_subcommand("sweep", "Run the materials or noise study");
  std::string kind;
  sweep->add_option("--kind", kind, "materials or noise");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : validation_error;
  }

  try {
    Context c;
    c.out = &out;
    c.err = &err;
    if (!config_text.empty()) g.config = config_text;
    g.out = out_text;
    c.global = g;
    c.rc = load_config(g.config, {g.seed, g.max_iters, g.full_scale});
    if (g.config && g.config->extension() == ".json") {
      std::ifstream is(*g.config);
      const json j = json::parse(is);
      if (j.contains("options") && j["options"].is_object()) c.recorded_options = j["options"];
    }
    if (*phantom) return cmd_phantom(c);
    if (*simulate) return cmd_simulate(c, phantom_dir);
    if (*reconstruct) return cmd_reconstruct(c, method, data_dir, truth_dir, alpha);
    if (*sweep) return cmd_sweep(c, kind);
    return validation_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return validation_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return runtime_failure;
  }
}

}  // namespace pct::app
