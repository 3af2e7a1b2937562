#include "cgem/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cgem/rng.hpp"

namespace cgem {

using nlohmann::json;

json EntropyReport::to_json() const {
  json j = {{"format_version", 1},
            {"kind", "entropy_report"},
            {"family", family},
            {"n_fit", n_fit},
            {"n_eval", n_eval},
            {"cross_entropy_nats", value}};
  if (!per_seed.empty()) j["per_seed"] = per_seed;
  return j;
}

EntropyReport cross_entropy_upper_bound(const Eigen::Ref<const Eigen::MatrixXd>& states,
                                        DensityFamily family,
                                        const DensityOptions& opts,
                                        double split_fraction, uint64_t seed) {
  const Eigen::Index n = states.rows();
  if (n < 100) throw std::invalid_argument("cross-entropy needs >= 100 states");
  if (split_fraction <= 0.0 || split_fraction >= 1.0)
    throw std::invalid_argument("split_fraction must be in (0,1)");

  auto stream = rng::stream(seed, "entropy.split");
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    auto j = static_cast<Eigen::Index>(rng::uniform_index(stream, i + 1));
    std::swap(perm[i], perm[j]);
  }

  Eigen::Index n_fit = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(split_fraction * n)), 1, n - 1);
  Eigen::MatrixXd fit(n_fit, states.cols());
  Eigen::MatrixXd eval(n - n_fit, states.cols());
  for (Eigen::Index i = 0; i < n_fit; ++i) fit.row(i) = states.row(perm[i]);
  for (Eigen::Index i = n_fit; i < n; ++i) eval.row(i - n_fit) = states.row(perm[i]);

  auto fit_rng = rng::stream(seed, "entropy.fit");
  auto model = fit_density(family, fit, opts, fit_rng);

  EntropyReport report;
  report.family = to_string(family);
  report.n_fit = n_fit;
  report.n_eval = n - n_fit;
  report.value = -mean_log_likelihood(*model, eval);
  return report;
}

EntropyReport cross_entropy_multi_seed(const Eigen::Ref<const Eigen::MatrixXd>& states,
                                       DensityFamily family, const DensityOptions& opts,
                                       double split_fraction, uint64_t seed,
                                       int n_seeds) {
  if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
  EntropyReport report;
  for (int s = 0; s < n_seeds; ++s) {
    auto r = cross_entropy_upper_bound(states, family, opts, split_fraction,
                                       rng::derive(seed, "entropy.seed", s));
    report.per_seed.push_back(r.value);
    if (s == 0) {
      report.family = r.family;
      report.n_fit = r.n_fit;
      report.n_eval = r.n_eval;
    }
  }
  std::vector<double> sorted = report.per_seed;
  std::sort(sorted.begin(), sorted.end());
  std::size_t mid = sorted.size() / 2;
  report.value = (sorted.size() % 2 == 1)
                     ? sorted[mid]
                     : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return report;
}

double FrequencyGrid::log_frequency(int ix, int iy) const {
  return std::log1p(static_cast<double>(count(ix, iy)));
}

json FrequencyGrid::to_json() const {
  std::vector<std::vector<double>> logf(bins, std::vector<double>(bins));
  for (int iy = 0; iy < bins; ++iy)
    for (int ix = 0; ix < bins; ++ix) logf[iy][ix] = log_frequency(ix, iy);
  return {{"format_version", 1},
          {"kind", "frequency_grid"},
          {"lo", {lo[0], lo[1]}},
          {"hi", {hi[0], hi[1]}},
          {"bins", bins},
          {"total", total},
          {"clamped", clamped},
          {"counts", counts},
          {"log_frequency", logf}};
}

std::string FrequencyGrid::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  for (int iy = 0; iy < bins; ++iy) {
    for (int ix = 0; ix < bins; ++ix) {
      if (ix) out << ",";
      out << log_frequency(ix, iy);
    }
    out << "\n";
  }
  return out.str();
}

std::string FrequencyGrid::to_pgm() const {
  double max_logf = 0.0;
  for (int iy = 0; iy < bins; ++iy)
    for (int ix = 0; ix < bins; ++ix) max_logf = std::max(max_logf, log_frequency(ix, iy));
  std::ostringstream out;
  out << "P2\n" << bins << " " << bins << "\n255\n";
  for (int iy = 0; iy < bins; ++iy) {
    for (int ix = 0; ix < bins; ++ix) {
      int v = 0;
      if (max_logf > 0.0)
        v = static_cast<int>(std::lround(255.0 * log_frequency(ix, iy) / max_logf));
      if (ix) out << " ";
      out << v;
    }
    out << "\n";
  }
  return out.str();
}

FrequencyGrid frequency_grid(const Eigen::Ref<const Eigen::MatrixXd>& states,
                             std::array<int, 2> projection, std::array<double, 2> lo,
                             std::array<double, 2> hi, int bins) {
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  if (!(hi[0] > lo[0]) || !(hi[1] > lo[1]))
    throw std::invalid_argument("grid bounds are degenerate");
  if (states.cols() <= std::max(projection[0], projection[1]))
    throw std::invalid_argument("projection exceeds state dimension");

  FrequencyGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  grid.bins = bins;
  grid.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  double w0 = (hi[0] - lo[0]) / bins;
  double w1 = (hi[1] - lo[1]) / bins;
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    double x = states(i, projection[0]);
    double y = states(i, projection[1]);
    bool outside = x < lo[0] || x > hi[0] || y < lo[1] || y > hi[1];
    int ix = std::clamp(static_cast<int>((x - lo[0]) / w0), 0, bins - 1);
    int iy = std::clamp(static_cast<int>((y - lo[1]) / w1), 0, bins - 1);
    grid.counts[static_cast<std::size_t>(iy) * bins + ix] += 1;
    grid.total += 1;
    if (outside) grid.clamped += 1;
  }
  return grid;
}

double ewga(const std::map<std::string, double>& auc_by_set,
            const std::map<std::string, double>& entropy_by_set) {
  if (auc_by_set.empty()) throw std::invalid_argument("empty AUC map");
  if (auc_by_set.size() != entropy_by_set.size())
    throw std::invalid_argument("mismatched eval-set keys");
  double max_h = -std::numeric_limits<double>::infinity();
  for (const auto& [key, h] : entropy_by_set) {
    if (!auc_by_set.count(key)) throw std::invalid_argument("mismatched eval-set keys");
    max_h = std::max(max_h, h);
  }
  double num = 0.0, den = 0.0;
  for (const auto& [key, h] : entropy_by_set) {
    double w = std::exp(h - max_h);
    num += w * auc_by_set.at(key);
    den += w;
  }
  return num / den;
}

}  // namespace cgem
