#include <doctest.h>

#include <cmath>
#include <random>

#include "pct/solver.hpp"
#include "support.hpp"

using namespace pct;

namespace {

std::shared_ptr<test::MatrixOperator> gaussian_operator(std::size_t side, std::size_t rows,
                                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
  Eigen::MatrixXd m(rows, side * side);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return std::make_shared<test::MatrixOperator>(m, side);
}

double rel(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

std::vector<double> piecewise_image(std::size_t n) {
  std::vector<double> u(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) u[r * n + c] = (r < n / 2 ? 1.0 : 0.3) + (c > n / 3 ? 0.5 : 0.0);
  return u;
}

SolverConfig tight(double tol = 1e-14, int iters = 100000) {
  SolverConfig c;
  c.tau_tol = tol;
  c.max_iters = iters;
  return c;
}

void check_certificate(const TVProblem& p, const SolverConfig& cfg, const SolveReport& r) {
  REQUIRE(r.converged);
  const NormalizedProblem np = normalize_problem(p, cfg);
  const ResidualPair again = primal_dual_residuals(np, r.final_state);
  const double reference = r.residual_history.front().sum();
  CHECK(again.sum() < cfg.tau_tol * reference);
  CHECK(again.sum() == doctest::Approx(r.residual_history.back().sum()).epsilon(1e-6));
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("vanishing alpha matches dense least squares") {
  const std::size_t n = 16;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto op = gaussian_operator(n, 2 * n * n, seed);
    std::mt19937_64 rng(seed + 10);
    const auto b = test::random_vector(op->range_size(), rng);
    const Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    const Eigen::VectorXd ls = op->matrix().colPivHouseholderQr().solve(bv);
    TVProblem p{op, b, 1e-12, n};
    const auto cfg = tight();
    const SolveReport r = solve_tv(p, cfg);
    CHECK(r.converged);
    CHECK(rel(r.solution, std::vector<double>(ls.data(), ls.data() + ls.size())) < 1e-6);
    check_certificate(p, cfg, r);
  }
}

TEST_CASE("vanishing alpha on the radon operator") {
  const ScanGeometry g = test::small_geometry(16, 90);
  auto radon = std::make_shared<RadonOperator>(g);
  const Eigen::MatrixXd a = test::dense(*radon);
  const auto u = piecewise_image(16);
  const auto b = radon->apply(u);
  TVProblem p{radon, b, 1e-12 * radon->norm_estimate() * radon->norm_estimate(), 16};
  const SolveReport r = solve_tv(p, tight(1e-16, 200000));
  CHECK(rel(r.solution, u) < 1e-4);
}

TEST_CASE("large alpha gives the best constant image") {
  const std::size_t n = 16;
  auto op = gaussian_operator(n, 300, 4);
  std::mt19937_64 rng(5);
  const auto b = test::random_vector(op->range_size(), rng);
  const Eigen::VectorXd k1 = op->matrix() * Eigen::VectorXd::Ones(n * n);
  const double c = k1.dot(Eigen::Map<const Eigen::VectorXd>(b.data(), 300)) / k1.squaredNorm();
  TVProblem p{op, b, 1e6, n};
  const auto cfg = tight(1e-12);
  const SolveReport r = solve_tv(p, cfg);
  CHECK(rel(r.solution, std::vector<double>(n * n, c)) < 1e-4);
  check_certificate(p, cfg, r);
}

TEST_CASE("zero data returns zero") {
  auto op = gaussian_operator(8, 100, 6);
  TVProblem p{op, std::vector<double>(100, 0.0), 1.0, 8};
  const SolveReport r = solve_tv(p, SolverConfig{});
  CHECK(r.converged);
  for (double v : r.solution) CHECK(v == 0.0);
}

TEST_CASE("solution is a minimizer") {
  const std::size_t n = 12;
  auto op = gaussian_operator(n, 200, 7);
  std::mt19937_64 rng(8);
  const auto u0 = piecewise_image(n);
  auto b = op->apply(u0);
  for (double& v : b) v += 0.05 * test::random_vector(1, rng)[0];
  TVProblem p{op, b, 0.05, n};
  const SolveReport r = solve_tv(p, tight(1e-12));
  const double f = tv_objective(p, r.solution);
  CHECK(f == doctest::Approx(r.objective_history.back()).epsilon(1e-6));
  for (int k = 0; k < 20; ++k) {
    auto v = test::random_vector(n * n, rng, 1e-3);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += r.solution[i];
    CHECK(tv_objective(p, v) >= f * (1.0 - 1e-9));
  }
  CHECK(r.objective_history.back() <= r.objective_history.front());
}

TEST_CASE("solution scales with data and alpha") {
  const std::size_t n = 10;
  auto op = gaussian_operator(n, 150, 9);
  std::mt19937_64 rng(10);
  const auto b = test::random_vector(150, rng);
  const SolveReport r1 = solve_tv({op, b, 0.2, n}, tight(1e-13));
  auto b2 = b;
  for (double& v : b2) v *= 1e-9;
  const SolveReport r2 = solve_tv({op, b2, 0.2e-9, n}, tight(1e-13));
  auto scaled = r1.solution;
  for (double& v : scaled) v *= 1e-9;
  CHECK(rel(r2.solution, scaled) < 1e-6);
}

TEST_CASE("adaptive and fixed steps reach the same solution") {
  const std::size_t n = 10;
  auto op = gaussian_operator(n, 150, 11);
  std::mt19937_64 rng(12);
  const auto b = test::random_vector(150, rng);
  SolverConfig fixed = tight(1e-13);
  fixed.adapt.enabled = false;
  const SolveReport a = solve_tv({op, b, 0.1, n}, tight(1e-13));
  const SolveReport f = solve_tv({op, b, 0.1, n}, fixed);
  CHECK(a.converged);
  CHECK(f.converged);
  CHECK(rel(a.solution, f.solution) < 1e-5);
}

TEST_CASE("adaptive steps stay within bounds") {
  const std::size_t n = 10;
  auto op = gaussian_operator(n, 150, 13);
  std::mt19937_64 rng(14);
  const auto b = test::random_vector(150, rng);
  const SolveReport r = solve_tv({op, b, 0.1, n}, SolverConfig{});
  const double ratio = r.step_primal_final / r.step_primal_initial;
  CHECK(ratio >= 1e-3);
  CHECK(ratio <= 1e3);
  CHECK(r.step_primal_final * r.step_dual_final ==
        doctest::Approx(r.step_primal_initial * r.step_primal_initial));
}

TEST_CASE("complex operator and its real stacked matrix agree") {
  const ScanGeometry g = test::small_geometry(8, 6, 0.5);
  auto radon = std::make_shared<RadonOperator>(g);
  auto acd = std::make_shared<AcdOperator>(radon, g, -1.95e4);
  auto stacked = std::make_shared<test::MatrixOperator>(test::dense(*acd), 8);
  const auto b = acd->apply(piecewise_image(8));
  const double alpha = 1e-3 * acd->norm_estimate() * acd->norm_estimate();
  const SolveReport rc = solve_tv({acd, b, alpha, 8}, tight(1e-13));
  const SolveReport rs = solve_tv({stacked, b, alpha, 8}, tight(1e-13));
  CHECK(rc.converged);
  CHECK(rs.converged);
  CHECK(rel(rc.solution, rs.solution) < 1e-6);
}

TEST_CASE("deterministic") {
  auto op = gaussian_operator(8, 100, 15);
  std::mt19937_64 rng(16);
  const auto b = test::random_vector(100, rng);
  const SolveReport a = solve_tv({op, b, 0.1, 8}, SolverConfig{});
  const SolveReport c = solve_tv({op, b, 0.1, 8}, SolverConfig{});
  CHECK(a.solution == c.solution);
  CHECK(a.iterations == c.iterations);
}

TEST_CASE("iteration cap and failures") {
  auto op = gaussian_operator(8, 100, 17);
  std::mt19937_64 rng(18);
  auto b = test::random_vector(100, rng);
  SolverConfig cfg;
  cfg.max_iters = 5;
  const SolveReport r = solve_tv({op, b, 0.1, 8}, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 5);
  CHECK(r.residual_history.size() == 5);
  CHECK_THROWS_AS(solve_tv({op, b, 0.0, 8}, SolverConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(solve_tv({op, b, 0.1, 9}, SolverConfig{}), std::invalid_argument);
  cfg.max_iters = 0;
  CHECK_THROWS_AS(solve_tv({op, b, 0.1, 8}, cfg), std::invalid_argument);
  b[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_tv({op, b, 0.1, 8}, SolverConfig{}), std::runtime_error);
}

TEST_CASE("total variation of simple images") {
  CHECK(total_variation(std::vector<double>(9, 4.0), 3) == 0.0);
  const std::vector<double> step{0, 1, 0, 1};
  // Pixels (0,0) and (1,0) each see a horizontal jump of 1.
  CHECK(total_variation(step, 2) == doctest::Approx(2.0));
}

}
