#include "pct/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "pct/kernels.hpp"

namespace pct {

void TVProblem::validate() const {
  if (!op) throw std::invalid_argument("TVProblem: missing operator");
  if (!(alpha > 0.0)) throw std::invalid_argument("TVProblem: alpha must be > 0");
  require_same_size(op->domain_size(), image_side * image_side,
                    "TVProblem image");
  require_same_size(data.size(), op->range_size(), "TVProblem data");
}

double total_variation(std::span<const double> u, std::size_t n) {
  std::vector<double> g(2 * n * n);
  kernels::active().gradient(u.data(), g.data(), g.data() + n * n, n);
  double tv = 0.0;
  for (std::size_t i = 0; i < n * n; ++i)
    tv += std::hypot(g[i], g[n * n + i]);
  return tv;
}

double tv_objective(const TVProblem& problem, std::span<const double> u) {
  std::vector<double> r = problem.op->apply(u);
  kernels::axpy(-1.0, problem.data, r);
  return kernels::sq_norm(r) +
         problem.alpha * total_variation(u, problem.image_side);
}

NormalizedProblem normalize_problem(const TVProblem& problem,
                                    const SolverConfig& cfg) {
  problem.validate();
  NormalizedProblem out;
  out.image_side = problem.image_side;
  const double c = estimate_norm(*problem.op, cfg.norm_iters, cfg.seed);
  out.op_scale = c > 0.0 ? c : 1.0;
  const double bnorm = std::sqrt(kernels::sq_norm(problem.data));
  const double pixels = static_cast<double>(problem.image_side * problem.image_side);
  out.image_scale = bnorm > 0.0 ? bnorm / (out.op_scale * std::sqrt(pixels)) : 1.0;
  out.op = std::make_shared<ScaledOperator>(problem.op, 1.0 / out.op_scale);
  const double f = 1.0 / (out.op_scale * out.image_scale);
  out.data.resize(problem.data.size());
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = problem.data[i] * f;
  out.alpha = problem.alpha / (out.op_scale * out.op_scale * out.image_scale);
  return out;
}

ResidualPair primal_dual_residuals(const NormalizedProblem& problem,
                                   const IterateState& s) {
  const std::size_t n = problem.image_side;
  auto grad = std::make_shared<GradientOperator>(n);
  StackedOperator stack({problem.op, grad});
  std::vector<double> dx(s.x.size());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = s.x_prev[i] - s.x[i];
  std::vector<double> dy(s.y.size());
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = s.y_prev[i] - s.y[i];
  std::vector<double> kdx = stack.apply(dx);
  std::vector<double> ktdy = stack.apply_adjoint(dy);
  ResidualPair r;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double p = dx[i] / s.step_primal - ktdy[i];
    r.primal_sq += p * p;
  }
  for (std::size_t i = 0; i < dy.size(); ++i) {
    const double d = dy[i] / s.step_dual - kdx[i];
    r.dual_sq += d * d;
  }
  return r;
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::ranges::all_of(v, [](double x) { return std::isfinite(x); });
}

}  // namespace

SolveReport solve_tv(const TVProblem& problem, const SolverConfig& cfg) {
  if (!(cfg.tau_tol > 0.0)) throw std::invalid_argument("solve_tv: tau_tol must be > 0");
  if (cfg.max_iters < 1) throw std::invalid_argument("solve_tv: max_iters must be >= 1");
  const NormalizedProblem np = normalize_problem(problem, cfg);
  const std::size_t n = np.image_side;
  const std::size_t pixels = n * n;
  const std::size_t m = np.data.size();
  const std::size_t g = 2 * pixels;
  const LinearOperator& K = *np.op;
  const auto& kt = kernels::active();

  SolveReport report;
  report.op_scale = np.op_scale;
  report.image_scale = np.image_scale;
  const double objective_scale =
      np.op_scale * np.op_scale * np.image_scale * np.image_scale;

  if (kernels::sq_norm(np.data) == 0.0 && kernels::sq_norm(problem.data) == 0.0) {
    // Zero data: u = 0 is the minimizer and a fixed point.
    report.solution.assign(pixels, 0.0);
    report.converged = true;
    report.residual_history.push_back({});
    report.objective_history.push_back(0.0);
    report.final_state.x_prev.assign(pixels, 0.0);
    report.final_state.x.assign(pixels, 0.0);
    report.final_state.y_prev.assign(m + g, 0.0);
    report.final_state.y.assign(m + g, 0.0);
    report.final_state.step_primal = report.final_state.step_dual = 1.0;
    return report;
  }

  double tau = cfg.step_primal;
  double sigma = cfg.step_dual;
  if (tau <= 0.0 || sigma <= 0.0) {
    auto grad = std::make_shared<GradientOperator>(n);
    StackedOperator stack({np.op, grad});
    const double L = estimate_norm(stack, cfg.norm_iters, cfg.seed);
    tau = sigma = 1.0 / L;
  }
  const double tau0 = tau;
  report.step_primal_initial = tau0;
  double adapt_rate = cfg.adapt.rescale - 1.0;  // step multiplier is 1 + rate

  // Iterates: x (image), y = [q (data block), r (gradient planes)].
  std::vector<double> x(pixels, 0.0), x_prev(pixels);
  std::vector<double> y(m + g, 0.0), y_prev(m + g);
  // Cached products for x and y: S x = [K x; D x], S^T y = K^T q + D^T r.
  std::vector<double> sx(m + g, 0.0), sx_prev(m + g);
  std::vector<double> sty(pixels, 0.0), sty_prev(pixels);
  std::vector<double> tmp(pixels);

  auto apply_s = [&](std::span<const double> in, std::span<double> out) {
    K.apply(in, out.subspan(0, m));
    kt.gradient(in.data(), out.data() + m, out.data() + m + pixels, n);
  };
  auto apply_st = [&](std::span<const double> in, std::span<double> out) {
    K.apply_adjoint(in.subspan(0, m), out);
    kt.gradient_adjoint(in.data() + m, in.data() + m + pixels, tmp.data(), n);
    kernels::axpy(1.0, tmp, out);
  };

  double reference = 0.0;
  double best_sum = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  double last_tau = tau;
  double last_sigma = sigma;
  int k = 0;
  for (k = 1; k <= cfg.max_iters; ++k) {
    x_prev.swap(x);
    y_prev.swap(y);
    sx_prev.swap(sx);
    sty_prev.swap(sty);

    // Primal step (no constraint on u).
    std::ranges::copy(x_prev, x.begin());
    kernels::axpy(-tau, sty_prev, x);
    apply_s(x, sx);

    // Dual step at the extrapolated point 2 x - x_prev, using S linearity.
    std::ranges::copy(y_prev, y.begin());
    const std::span<double> q(y.data(), m);
    const std::span<double> r(y.data() + m, g);
    // y += sigma * (2 S x - S x_prev)
    kt.axpy(2.0 * sigma, sx.data(), y.data(), m + g);
    kt.axpy(-sigma, sx_prev.data(), y.data(), m + g);
    // q = (q + sigma (K xbar - b)) / (1 + sigma / 2)
    kernels::axpy(-sigma, np.data, q);
    const double shrink = 1.0 / (1.0 + 0.5 * sigma);
    for (double& v : q) v *= shrink;
    kt.ball_project(r.data(), r.data() + pixels, pixels, np.alpha);
    apply_st(y, sty);

    // Residuals.
    ResidualPair res;
    for (std::size_t i = 0; i < pixels; ++i) {
      const double p = (x_prev[i] - x[i]) / tau - (sty_prev[i] - sty[i]);
      res.primal_sq += p * p;
    }
    for (std::size_t i = 0; i < m + g; ++i) {
      const double d = (y_prev[i] - y[i]) / sigma - (sx_prev[i] - sx[i]);
      res.dual_sq += d * d;
    }
    if (!std::isfinite(res.sum()) || !all_finite(x))
      throw std::runtime_error("solve_tv: non-finite iterate at iteration " +
                               std::to_string(k) + " (step_primal=" +
                               std::to_string(tau) + ", step_dual=" +
                               std::to_string(sigma) + ")");

    // Objective at x, original units.
    double fid = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = sx[i] - np.data[i];
      fid += e * e;
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < pixels; ++i)
      tv += std::hypot(sx[m + i], sx[m + pixels + i]);
    const double objective = objective_scale * (fid + np.alpha * tv);

    last_tau = tau;
    last_sigma = sigma;
    report.residual_history.push_back(res);
    report.objective_history.push_back(objective);
    if (cfg.progress) cfg.progress({k, res.primal_sq, res.dual_sq, objective});

    if (k == 1) reference = res.sum();
    if (res.sum() < best_sum) {
      best_sum = res.sum();
      best_x = x;
    }
    if (res.sum() < cfg.tau_tol * reference || reference == 0.0) {
      report.converged = true;
      break;
    }

    if (cfg.adapt.enabled && adapt_rate > 0.0) {
      const double pn = std::sqrt(res.primal_sq);
      const double dn = std::sqrt(res.dual_sq);
      const double f = 1.0 + adapt_rate;
      if (pn > cfg.adapt.imbalance_trigger * dn &&
          tau * f <= cfg.adapt.max_factor * tau0) {
        tau *= f;
        sigma /= f;
        adapt_rate *= cfg.adapt.decay;
      } else if (dn > cfg.adapt.imbalance_trigger * pn &&
                 tau / f >= cfg.adapt.min_factor * tau0) {
        tau /= f;
        sigma *= f;
        adapt_rate *= cfg.adapt.decay;
      }
    }
  }

  report.iterations = std::min(k, cfg.max_iters);
  const std::vector<double>& chosen = report.converged ? x : best_x;
  report.solution.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i)
    report.solution[i] = np.image_scale * chosen[i];
  report.step_primal_final = last_tau;
  report.step_dual_final = last_sigma;
  report.final_state =
      IterateState{std::move(x_prev), std::move(x), std::move(y_prev),
                   std::move(y), last_tau, last_sigma};
  return report;
}

}  // namespace pct
