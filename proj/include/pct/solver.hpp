#pragma once

// TV-regularized least squares
//
//   min_u ||K u - b||^2 + alpha * sum_n ||D_n u||
//
// solved with a Chambolle-Pock primal-dual iteration whose step sizes are
// rebalanced from the primal and dual residuals. The iteration stops when
//
//   ||p_k||^2 + ||d_k||^2 < tol * (||p_1||^2 + ||d_1||^2).
//
// The solve runs on a rescaled copy of the problem: K is divided by its norm
// estimate c and u by an image scale s derived from the data, so that
// K~ = K / c, b~ = b / (c s), alpha~ = alpha / (c^2 s) and u = s v. The
// minimizer is unchanged; residuals and step sizes live in these units.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pct/operators.hpp"

namespace pct {

struct TVProblem {
  OperatorPtr op;              // K: image (side x side) to data space
  std::vector<double> data;    // b, in K's range storage
  double alpha = 1.0;
  std::size_t image_side = 0;

  void validate() const;
};

struct AdaptiveSteps {
  bool enabled = true;
  double rescale = 2.0;            // initial step multiplier on imbalance
  double decay = 0.5;              // shrinks (rescale - 1) on every trigger
  double imbalance_trigger = 10.0;
  double min_factor = 1e-3;        // bounds on step_primal / initial
  double max_factor = 1e3;
};

struct IterationInfo {
  int iteration = 0;
  double primal_sq = 0.0;
  double dual_sq = 0.0;
  double objective = 0.0;
};

struct SolverConfig {
  double tau_tol = 1e-6;
  int max_iters = 20000;
  double step_primal = 0.0;  // <= 0: 1 / L of the stacked normalized operator
  double step_dual = 0.0;
  AdaptiveSteps adapt;
  std::uint64_t seed = 0;
  int norm_iters = 100;
  std::function<void(const IterationInfo&)> progress;
};

struct ResidualPair {
  double primal_sq = 0.0;
  double dual_sq = 0.0;
  double sum() const { return primal_sq + dual_sq; }
};

/// The rescaled problem the iteration actually runs on.
struct NormalizedProblem {
  OperatorPtr op;               // K / c
  std::vector<double> data;     // b / (c s)
  double alpha = 0.0;           // alpha / (c^2 s)
  std::size_t image_side = 0;
  double op_scale = 1.0;        // c
  double image_scale = 1.0;     // s
};

NormalizedProblem normalize_problem(const TVProblem& problem,
                                    const SolverConfig& cfg);

/// Two consecutive iterates in normalized units. Dual vectors hold the data
/// block followed by the two gradient planes.
struct IterateState {
  std::vector<double> x_prev, x;
  std::vector<double> y_prev, y;
  double step_primal = 0.0;
  double step_dual = 0.0;
};

/// Recomputes p and d for the transition y_prev, x_prev -> y, x.
ResidualPair primal_dual_residuals(const NormalizedProblem& problem,
                                   const IterateState& state);

struct SolveReport {
  std::vector<double> solution;  // u, original units
  int iterations = 0;
  bool converged = false;
  std::vector<ResidualPair> residual_history;
  std::vector<double> objective_history;  // original units
  double step_primal_initial = 0.0;
  double step_primal_final = 0.0;
  double step_dual_final = 0.0;
  IterateState final_state;  // normalized units
  double op_scale = 1.0;
  double image_scale = 1.0;
};

/// Throws std::runtime_error if the iteration produces non-finite values.
SolveReport solve_tv(const TVProblem& problem, const SolverConfig& cfg);

/// ||K u - b||^2 + alpha * TV(u).
double tv_objective(const TVProblem& problem, std::span<const double> u);

/// Isotropic total variation of an n x n image.
double total_variation(std::span<const double> u, std::size_t n);

}  // namespace pct
