#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cgem/entropy.hpp"
#include "cgem/rng.hpp"

using namespace cgem;

namespace {

Eigen::MatrixXd uniform_box(double lo, double hi, int n, uint64_t seed) {
  auto g = rng::stream(seed, "unif");
  Eigen::MatrixXd out(n, 2);
  for (int i = 0; i < n; ++i) {
    out(i, 0) = rng::uniform(g, lo, hi);
    out(i, 1) = rng::uniform(g, lo, hi);
  }
  return out;
}

Eigen::MatrixXd std_gaussian(int n, uint64_t seed) {
  auto g = rng::stream(seed, "gauss");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(n, 2);
  for (int i = 0; i < n; ++i) {
    out(i, 0) = normal(g);
    out(i, 1) = normal(g);
  }
  return out;
}

}  // namespace

TEST_CASE("uniform box cross-entropy matches log(area)") {
  Eigen::MatrixXd states = uniform_box(0.0, 10.0, 100000, 1);
  DensityOptions opts;
  opts.hist_bins = 20;
  opts.box = BoundingBox{{0.0, 0.0}, {10.0, 10.0}};
  auto report =
      cross_entropy_upper_bound(states, DensityFamily::kHistogram, opts, 0.8, 1);
  CHECK(report.value == doctest::Approx(std::log(100.0)).epsilon(0.1 / std::log(100.0)));
  CHECK(report.n_fit + report.n_eval == 100000);
}

TEST_CASE("standard gaussian cross-entropy matches 1 + log(2pi)") {
  Eigen::MatrixXd states = std_gaussian(100000, 2);
  DensityOptions opts;
  auto report =
      cross_entropy_upper_bound(states, DensityFamily::kGaussian, opts, 0.8, 2);
  double expected = 1.0 + std::log(2.0 * M_PI);
  CHECK(std::abs(report.value - expected) < 0.1);
}

TEST_CASE("cross-entropy upper-bounds the generator entropy") {
  // H(rho, rho_hat) = H(rho) + KL >= H(rho); allow small statistical noise.
  Eigen::MatrixXd states = std_gaussian(20000, 3);
  double truth = 1.0 + std::log(2.0 * M_PI);
  DensityOptions opts;
  opts.hist_bins = 25;
  for (auto family : {DensityFamily::kGaussian, DensityFamily::kKde,
                      DensityFamily::kHistogram, DensityFamily::kGmm}) {
    auto report = cross_entropy_upper_bound(states, family, opts, 0.8, 3);
    CHECK(report.value > truth - 0.1);
  }
}

TEST_CASE("cross-entropy rejects tiny inputs") {
  Eigen::MatrixXd states = std_gaussian(99, 4);
  DensityOptions opts;
  CHECK_THROWS_AS(cross_entropy_upper_bound(states, DensityFamily::kGaussian, opts, 0.8, 4),
                  std::invalid_argument);
}

TEST_CASE("multi-seed report carries per-seed values and their median") {
  Eigen::MatrixXd states = std_gaussian(5000, 5);
  DensityOptions opts;
  auto report =
      cross_entropy_multi_seed(states, DensityFamily::kGaussian, opts, 0.8, 5, 5);
  REQUIRE(report.per_seed.size() == 5);
  std::vector<double> sorted = report.per_seed;
  std::sort(sorted.begin(), sorted.end());
  CHECK(report.value == sorted[2]);
}

TEST_CASE("frequency grid counts every state and clamps outliers") {
  Eigen::MatrixXd states(4, 2);
  states << 0.5, 0.5, 9.5, 9.5, -3.0, 5.0, 5.0, 5.0;
  auto grid = frequency_grid(states, {0, 1}, {0.0, 0.0}, {10.0, 10.0}, 10);
  CHECK(grid.total == 4);
  CHECK(grid.clamped == 1);
  CHECK(grid.count(0, 0) == 1);
  CHECK(grid.count(0, 5) == 1);  // (-3,5) clamps onto the left edge column

  uint64_t sum = 0;
  for (int iy = 0; iy < 10; ++iy)
    for (int ix = 0; ix < 10; ++ix) sum += grid.count(ix, iy);
  CHECK(sum == 4);
}

TEST_CASE("all states in one cell light a single cell") {
  Eigen::MatrixXd states(100, 2);
  for (int i = 0; i < 100; ++i) states.row(i) << 2.5, 2.5;
  auto grid = frequency_grid(states, {0, 1}, {0.0, 0.0}, {10.0, 10.0}, 4);
  int nonzero = 0;
  for (int iy = 0; iy < 4; ++iy)
    for (int ix = 0; ix < 4; ++ix) nonzero += grid.count(ix, iy) > 0 ? 1 : 0;
  CHECK(nonzero == 1);
  CHECK(grid.log_frequency(1, 1) == doctest::Approx(std::log(101.0)));
}

TEST_CASE("empty input gives an all-zero grid") {
  Eigen::MatrixXd states(0, 2);
  auto grid = frequency_grid(states, {0, 1}, {0.0, 0.0}, {1.0, 1.0}, 5);
  CHECK(grid.total == 0);
  for (auto c : grid.counts) CHECK(c == 0);
}

TEST_CASE("uniform states fill the grid nearly evenly") {
  Eigen::MatrixXd states = uniform_box(0.0, 1.0, 100000, 6);
  auto grid = frequency_grid(states, {0, 1}, {0.0, 0.0}, {1.0, 1.0}, 20);
  uint64_t lo = grid.counts[0], hi = grid.counts[0];
  for (auto c : grid.counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(lo > 0);
  CHECK(static_cast<double>(hi) / lo < 2.0);
}

TEST_CASE("PGM export is valid P2 with 255 max") {
  Eigen::MatrixXd states = uniform_box(0.0, 1.0, 500, 7);
  auto grid = frequency_grid(states, {0, 1}, {0.0, 0.0}, {1.0, 1.0}, 8);
  std::istringstream pgm(grid.to_pgm());
  std::string magic;
  int w, h, maxval;
  pgm >> magic >> w >> h >> maxval;
  CHECK(magic == "P2");
  CHECK(w == 8);
  CHECK(h == 8);
  CHECK(maxval == 255);
  int count = 0, v;
  int top = -1;
  while (pgm >> v) {
    CHECK(v >= 0);
    CHECK(v <= 255);
    top = std::max(top, v);
    ++count;
  }
  CHECK(count == 64);
  CHECK(top == 255);  // peak cell maps to full intensity
}

TEST_CASE("CSV export is bins x bins") {
  Eigen::MatrixXd states = uniform_box(0.0, 1.0, 100, 8);
  auto grid = frequency_grid(states, {0, 1}, {0.0, 0.0}, {1.0, 1.0}, 5);
  std::istringstream csv(grid.to_csv());
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
    ++rows;
  }
  CHECK(rows == 5);
}

TEST_CASE("ewga hand example and invariants") {
  // Entropies {0, ln 3} with AUCs {0.2, 0.6}: (1*0.2 + 3*0.6)/4 = 0.5.
  std::map<std::string, double> auc = {{"s1", 0.2}, {"s2", 0.6}};
  std::map<std::string, double> ent = {{"s1", 0.0}, {"s2", std::log(3.0)}};
  CHECK(ewga(auc, ent) == doctest::Approx(0.5).epsilon(1e-12));

  // Equal entropies reduce to the arithmetic mean.
  std::map<std::string, double> flat = {{"s1", 2.0}, {"s2", 2.0}};
  CHECK(ewga(auc, flat) == doctest::Approx(0.4));

  // Single set: EWGA equals its AUC.
  std::map<std::string, double> one_auc = {{"s", 0.37}};
  std::map<std::string, double> one_ent = {{"s", 5.0}};
  CHECK(ewga(one_auc, one_ent) == doctest::Approx(0.37));

  // Shift stability and bounds, fuzzed.
  auto g = rng::stream(11, "ewga");
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, double> a, h, h_shift;
    double lo = 1.0, hi = 0.0;
    for (int k = 0; k < 5; ++k) {
      std::string key = "k" + std::to_string(k);
      a[key] = rng::uniform(g);
      h[key] = rng::uniform(g, -3.0, 8.0);
      h_shift[key] = h[key] + 17.5;
      lo = std::min(lo, a[key]);
      hi = std::max(hi, a[key]);
    }
    double w = ewga(a, h);
    CHECK(w >= lo - 1e-12);
    CHECK(w <= hi + 1e-12);
    CHECK(w == doctest::Approx(ewga(a, h_shift)).epsilon(1e-9));
  }

  std::map<std::string, double> bad = {{"other", 1.0}, {"s1", 0.0}};
  CHECK_THROWS_AS(ewga(auc, bad), std::invalid_argument);
}
