#include <doctest.h>

#include <cmath>
#include <random>

#include "pct/metrics.hpp"
#include "support.hpp"

using namespace pct;

namespace {

// Between-class variance of every threshold pair on a 256-bin histogram,
// written independently of the library's search.
std::pair<int, int> brute_force_two_cuts(const std::vector<double>& u) {
  const auto [mn, mx] = std::minmax_element(u.begin(), u.end());
  const double lo = *mn, w = (*mx - *mn) / 256.0;
  std::vector<double> cnt(256, 0.0);
  for (double v : u) cnt[static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor((v - lo) / w)), 0, 255))] += 1;
  const double total = static_cast<double>(u.size());
  double mu = 0.0;
  for (int b = 0; b < 256; ++b) mu += cnt[static_cast<std::size_t>(b)] * (lo + (b + 0.5) * w) / total;
  double best = -1.0;
  std::pair<int, int> arg{-1, -1};
  for (int i = 0; i < 255; ++i)
    for (int j = i + 1; j < 255; ++j) {
      double var = 0.0;
      bool empty = false;
      for (auto [a, b] : {std::pair{0, i}, std::pair{i + 1, j}, std::pair{j + 1, 255}}) {
        double n = 0.0, s = 0.0;
        for (int k = a; k <= b; ++k) {
          n += cnt[static_cast<std::size_t>(k)];
          s += cnt[static_cast<std::size_t>(k)] * (lo + (k + 0.5) * w);
        }
        if (n == 0.0) {
          empty = true;
          break;
        }
        var += n / total * (s / n - mu) * (s / n - mu);
      }
      if (!empty && var > best * (1.0 + 1e-12)) {
        best = var;
        arg = {i, j};
      }
    }
  return arg;
}

LabelImage labels_of(std::size_t rows, std::size_t cols, const std::vector<int>& v) {
  LabelImage l(rows, cols);
  l.values = v;
  return l;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("relative error") {
  const std::vector<double> u{1.0, -2.0, 3.0};
  CHECK(relative_error(u, u) == 0.0);
  CHECK(relative_error(std::vector<double>(3, 0.0), u) == 1.0);
  for (double c : {0.0, 0.5, 2.0, 3.25, -1.0}) {
    std::vector<double> cu = u;
    for (double& v : cu) v *= c;
    CHECK(relative_error(cu, u) == doctest::Approx(std::abs(c - 1.0)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(relative_error(u, std::vector<double>(3, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(relative_error(u, std::vector<double>(2, 1.0)), std::invalid_argument);
}

TEST_CASE("two-valued image splits cleanly") {
  std::vector<double> u(100, 0.0);
  std::vector<int> l(100, 0);
  for (std::size_t i = 50; i < 100; ++i) u[i] = 1.0, l[i] = 1;
  const auto t = otsu_multilevel(u, 2);
  REQUIRE(t.size() == 1);
  CHECK(t[0] > 0.0);
  CHECK(t[0] < 1.0);
  const std::vector<double> betas{0.0, 1.0};
  CHECK(segmentation_error(u, labels_of(10, 10, l), betas) == 0.0);
}

TEST_CASE("three separated modes match the brute-force search") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> u;
  for (double c : {0.0, 1.0, 3.0})
    for (int i = 0; i < 3000; ++i) u.push_back(c + noise(rng));
  const auto t = otsu_multilevel(u, 3);
  REQUIRE(t.size() == 2);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const std::size_t mode = k / 3000;
    CHECK((u[k] >= t[0]) == (mode >= 1));
    CHECK((u[k] >= t[1]) == (mode >= 2));
  }
  const auto [i, j] = brute_force_two_cuts(u);
  const auto [mn, mx] = std::minmax_element(u.begin(), u.end());
  const double w = (*mx - *mn) / 256.0;
  CHECK(t[0] == doctest::Approx(*mn + (i + 1) * w).epsilon(1e-12));
  CHECK(t[1] == doctest::Approx(*mn + (j + 1) * w).epsilon(1e-12));
}

TEST_CASE("thresholds follow affine rescaling") {
  std::mt19937_64 rng(22);
  std::gamma_distribution<double> d(2.0, 1.0);
  std::vector<double> u(5000);
  for (double& v : u) v = d(rng);
  const auto t = otsu_multilevel(u, 3);
  std::vector<double> v = u;
  for (double& x : v) x = 4.0 * x - 7.0;
  const auto s = otsu_multilevel(v, 3);
  const auto [mn, mx] = std::minmax_element(u.begin(), u.end());
  const double bin = (*mx - *mn) / 256.0;
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(std::abs((s[k] + 7.0) / 4.0 - t[k]) <= bin);
}

TEST_CASE("ground-truth phantom segments perfectly") {
  const ScanGeometry g = test::small_geometry(64, 4);
  const Phantom p = make_grain_phantom(g, find_material("polycarbonate"), find_material("diamond"),
                                       find_material("magnesium"), 12, 7);
  std::vector<double> betas;
  for (const auto& m : p.materials) betas.push_back(m.beta);
  const MetricReport r = evaluate(p.beta.flat(), p.beta.flat(), p.labels, betas);
  CHECK(r.relative_error == 0.0);
  CHECK(r.segmentation_error == 0.0);
  CHECK(r.thresholds.size() == 2);
  CHECK(r.thresholds[0] < r.thresholds[1]);
  std::size_t total = 0;
  for (auto c : r.class_counts) total += c;
  CHECK(total == p.beta.size());
}

TEST_CASE("label permutation does not matter") {
  std::vector<double> u{5, 5, 1, 1, 3, 3, 5, 1, 3, 3};
  const std::vector<int> l{2, 2, 0, 0, 1, 1, 2, 0, 1, 1};
  CHECK(segmentation_error(u, labels_of(2, 5, l), std::vector<double>{1.0, 3.0, 5.0}) == 0.0);
  // Same image, labels renamed: label 0 is now the largest beta.
  const std::vector<int> r{0, 0, 2, 2, 1, 1, 0, 2, 1, 1};
  CHECK(segmentation_error(u, labels_of(2, 5, r), std::vector<double>{5.0, 3.0, 1.0}) == 0.0);
}

TEST_CASE("constructed miscount") {
  std::vector<double> u(100);
  std::vector<int> l(100);
  for (std::size_t i = 0; i < 100; ++i) {
    l[i] = i < 50 ? 0 : 1;
    u[i] = l[i];
  }
  for (std::size_t i = 0; i < 10; ++i) l[i * 10] = 1 - l[i * 10];
  const double es = segmentation_error(u, labels_of(10, 10, l), std::vector<double>{0.0, 1.0});
  CHECK(es == doctest::Approx(0.10));
}

TEST_CASE("segmentation error stays in [0, 1]") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> lab(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    auto u = test::random_vector(400, rng);
    std::vector<int> l(400);
    for (int& x : l) x = lab(rng);
    const double es = segmentation_error(u, labels_of(20, 20, l), std::vector<double>{0.1, 0.2, 0.3});
    CHECK(es >= 0.0);
    CHECK(es <= 1.0);
  }
}

TEST_CASE("argument checks") {
  CHECK_THROWS_AS(otsu_multilevel(std::vector<double>(10, 2.0), 2), std::invalid_argument);
  CHECK_THROWS_AS(otsu_multilevel(std::vector<double>{0.0, 1.0}, 5), std::invalid_argument);
  CHECK_THROWS_AS(otsu_multilevel(std::vector<double>{0.0, 1.0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(otsu_multilevel(std::vector<double>{}, 2), std::invalid_argument);
}

}
