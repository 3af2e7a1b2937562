#include "cgem/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cgem/rng.hpp"

namespace cgem {

using nlohmann::json;

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

DensityFamily density_family_from_string(const std::string& s) {
  if (s == "gaussian") return DensityFamily::kGaussian;
  if (s == "gmm") return DensityFamily::kGmm;
  if (s == "kde") return DensityFamily::kKde;
  if (s == "histogram" || s == "hist") return DensityFamily::kHistogram;
  throw std::invalid_argument("unknown density family: " + s);
}

std::string to_string(DensityFamily family) {
  switch (family) {
    case DensityFamily::kGaussian: return "gaussian";
    case DensityFamily::kGmm: return "gmm";
    case DensityFamily::kKde: return "kde";
    case DensityFamily::kHistogram: return "histogram";
  }
  return "?";
}

json DensityOptions::to_json() const {
  json j = {{"ridge", ridge},
            {"gmm_components", gmm_components},
            {"gmm_max_iter", gmm_max_iter},
            {"gmm_tol", gmm_tol},
            {"gmm_restarts", gmm_restarts},
            {"kde_bandwidth", kde_bandwidth},
            {"hist_bins", hist_bins},
            {"hist_smoothing", hist_smoothing},
            {"log_floor", log_floor}};
  if (box) j["box"] = {{"lo", box->lo}, {"hi", box->hi}};
  return j;
}

DensityOptions DensityOptions::from_json(const json& j) {
  DensityOptions o;
  o.ridge = j.value("ridge", o.ridge);
  o.gmm_components = j.value("gmm_components", o.gmm_components);
  o.gmm_max_iter = j.value("gmm_max_iter", o.gmm_max_iter);
  o.gmm_tol = j.value("gmm_tol", o.gmm_tol);
  o.gmm_restarts = j.value("gmm_restarts", o.gmm_restarts);
  o.kde_bandwidth = j.value("kde_bandwidth", o.kde_bandwidth);
  o.hist_bins = j.value("hist_bins", o.hist_bins);
  o.hist_smoothing = j.value("hist_smoothing", o.hist_smoothing);
  o.log_floor = j.value("log_floor", o.log_floor);
  if (j.contains("box")) {
    BoundingBox b;
    b.lo = j.at("box").at("lo").get<std::vector<double>>();
    b.hi = j.at("box").at("hi").get<std::vector<double>>();
    o.box = b;
  }
  return o;
}

double DensityModel::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) throw std::invalid_argument("query dimension mismatch");
  double v = log_density_raw(x);
  if (!std::isfinite(v)) return log_floor_;
  return std::max(v, log_floor_);
}

double DensityModel::log_density(const std::vector<double>& x) const {
  Eigen::Map<const Eigen::VectorXd> m(x.data(), static_cast<Eigen::Index>(x.size()));
  return log_density(m);
}

Eigen::VectorXd DensityModel::log_density_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = log_density(x.row(i).transpose());
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Gaussian

struct GaussianCore {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol_l;  // lower Cholesky factor of cov
  double log_norm = 0.0;   // -d/2 log(2pi) - 1/2 log|cov|

  void finalize() {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("covariance not positive definite");
    chol_l = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < chol_l.rows(); ++i)
      logdet += 2.0 * std::log(chol_l(i, i));
    log_norm = -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi + logdet);
  }

  double log_pdf(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd z = chol_l.triangularView<Eigen::Lower>().solve(x - mean);
    return log_norm - 0.5 * z.squaredNorm();
  }
};

// Adds ridge, escalating until the Cholesky succeeds. Returns true when the
// raw covariance was rank-deficient and only the jitter made it usable.
bool regularize(GaussianCore& core, double ridge) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(core.cov, Eigen::EigenvaluesOnly);
  double max_ev = es.eigenvalues().maxCoeff();
  bool degenerate = es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, max_ev);
  Eigen::MatrixXd base = core.cov;
  double jitter = ridge;
  for (int attempt = 0; attempt < 40; ++attempt) {
    core.cov = base + jitter * Eigen::MatrixXd::Identity(base.rows(), base.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(core.cov);
    if (llt.info() == Eigen::Success && llt.matrixL()(0, 0) > 0.0) {
      core.finalize();
      return degenerate || attempt > 0;
    }
    jitter *= 10.0;
  }
  throw std::runtime_error("covariance could not be regularized");
}

class GaussianModel final : public DensityModel {
 public:
  GaussianModel(GaussianCore core, double floor, bool warned = false)
      : core_(std::move(core)) {
    log_floor_ = floor;
    fit_warning_ = warned;
  }

  DensityFamily family() const override { return DensityFamily::kGaussian; }
  int dim() const override { return static_cast<int>(core_.mean.size()); }

  double parameter_count() const override {
    double d = static_cast<double>(dim());
    return d + d * (d + 1) / 2.0;
  }

  json to_json() const override {
    json cov = json::array();
    for (Eigen::Index i = 0; i < core_.cov.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < core_.cov.cols(); ++j) row.push_back(core_.cov(i, j));
      cov.push_back(row);
    }
    return {{"format_version", 1},
            {"family", "gaussian"},
            {"dim", dim()},
            {"log_floor", log_floor_},
            {"mean", std::vector<double>(core_.mean.data(), core_.mean.data() + core_.mean.size())},
            {"cov", cov}};
  }

  const GaussianCore& core() const { return core_; }

 protected:
  double log_density_raw(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    return core_.log_pdf(x);
  }

 private:
  GaussianCore core_;
};

GaussianCore fit_gaussian_core(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                               double ridge, bool* warned) {
  GaussianCore core;
  const auto n = static_cast<double>(samples.rows());
  core.mean = samples.colwise().mean();
  Eigen::MatrixXd centered = samples.rowwise() - core.mean.transpose();
  core.cov = (centered.transpose() * centered) / n;
  bool w = regularize(core, ridge);
  if (warned) *warned = w;
  return core;
}

// ---------------------------------------------------------------------------
// GMM

double logsumexp_row(const Eigen::Ref<const Eigen::VectorXd>& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

class GmmModel final : public DensityModel {
 public:
  GmmModel(std::vector<double> log_weights, std::vector<GaussianCore> comps,
           double floor, bool warned = false)
      : log_weights_(std::move(log_weights)), comps_(std::move(comps)) {
    log_floor_ = floor;
    fit_warning_ = warned;
  }

  DensityFamily family() const override { return DensityFamily::kGmm; }
  int dim() const override { return static_cast<int>(comps_[0].mean.size()); }

  double parameter_count() const override {
    double d = static_cast<double>(dim());
    double per = d + d * (d + 1) / 2.0;
    return static_cast<double>(comps_.size()) * per +
           static_cast<double>(comps_.size()) - 1.0;
  }

  json to_json() const override {
    json comps = json::array();
    for (std::size_t k = 0; k < comps_.size(); ++k) {
      json cov = json::array();
      for (Eigen::Index i = 0; i < comps_[k].cov.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < comps_[k].cov.cols(); ++j)
          row.push_back(comps_[k].cov(i, j));
        cov.push_back(row);
      }
      comps.push_back({{"weight", std::exp(log_weights_[k])},
                       {"mean", std::vector<double>(comps_[k].mean.data(),
                                                    comps_[k].mean.data() + comps_[k].mean.size())},
                       {"cov", cov}});
    }
    return {{"format_version", 1},
            {"family", "gmm"},
            {"dim", dim()},
            {"log_floor", log_floor_},
            {"components", comps}};
  }

 protected:
  double log_density_raw(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    Eigen::VectorXd terms(static_cast<Eigen::Index>(comps_.size()));
    for (std::size_t k = 0; k < comps_.size(); ++k)
      terms(static_cast<Eigen::Index>(k)) = log_weights_[k] + comps_[k].log_pdf(x);
    return logsumexp_row(terms);
  }

 private:
  std::vector<double> log_weights_;
  std::vector<GaussianCore> comps_;

  friend struct GmmFitter;
};

struct GmmFitter {
  const Eigen::Ref<const Eigen::MatrixXd>& data;
  const DensityOptions& opts;
  int m;

  // k-means++ style seeding: first center uniform, the rest proportional to
  // squared distance from the nearest chosen center.
  std::vector<Eigen::Index> seed_centers(std::mt19937_64& rng) const {
    const Eigen::Index n = data.rows();
    std::vector<Eigen::Index> centers;
    centers.push_back(static_cast<Eigen::Index>(rng::uniform_index(rng, n)));
    Eigen::VectorXd d2 =
        (data.rowwise() - data.row(centers[0])).rowwise().squaredNorm();
    while (static_cast<int>(centers.size()) < m) {
      double total = d2.sum();
      Eigen::Index pick;
      if (total <= 0.0) {
        pick = static_cast<Eigen::Index>(rng::uniform_index(rng, n));
      } else {
        double u = rng::uniform(rng) * total;
        double acc = 0.0;
        pick = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          acc += d2(i);
          if (u <= acc) {
            pick = i;
            break;
          }
        }
      }
      centers.push_back(pick);
      d2 = d2.cwiseMin((data.rowwise() - data.row(pick)).rowwise().squaredNorm());
    }
    return centers;
  }

  struct EmRun {
    std::vector<double> log_weights;
    std::vector<GaussianCore> comps;
    std::vector<double> train_ll;    // mean log-likelihood per iteration
    std::vector<double> heldout_ll;  // per iteration, when a held-out set is given
    bool warned = false;
  };

  double mixture_ll_row(const EmRun& run, const Eigen::Ref<const Eigen::VectorXd>& x,
                        Eigen::VectorXd& scratch) const {
    for (int k = 0; k < m; ++k)
      scratch(k) = run.log_weights[k] + run.comps[k].log_pdf(x);
    return logsumexp_row(scratch);
  }

  EmRun run_em(std::mt19937_64& rng,
               const Eigen::Ref<const Eigen::MatrixXd>* heldout) const {
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    EmRun run;
    auto centers = seed_centers(rng);
    GaussianCore global = fit_gaussian_core(data, opts.ridge, nullptr);
    for (int k = 0; k < m; ++k) {
      GaussianCore c;
      c.mean = data.row(centers[k]).transpose();
      c.cov = global.cov;
      c.finalize();
      run.comps.push_back(std::move(c));
      run.log_weights.push_back(-std::log(static_cast<double>(m)));
    }

    Eigen::MatrixXd log_resp(n, m);
    Eigen::VectorXd scratch(m);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.gmm_max_iter; ++iter) {
      // E step
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < m; ++k)
          log_resp(i, k) = run.log_weights[k] + run.comps[k].log_pdf(data.row(i).transpose());
        double lse = logsumexp_row(log_resp.row(i).transpose());
        log_resp.row(i).array() -= lse;
        total += lse;
      }
      double ll = total / static_cast<double>(n);
      run.train_ll.push_back(ll);
      if (heldout && heldout->rows() > 0) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < heldout->rows(); ++i)
          h += std::max(mixture_ll_row(run, heldout->row(i).transpose(), scratch),
                        opts.log_floor);
        run.heldout_ll.push_back(h / static_cast<double>(heldout->rows()));
      }
      if (ll - prev_ll < opts.gmm_tol && iter > 0) break;
      prev_ll = ll;

      // M step
      for (int k = 0; k < m; ++k) {
        Eigen::VectorXd resp = log_resp.col(k).array().exp();
        double nk = resp.sum();
        if (nk < 1e-10) {
          // Dead component: reseed on the worst-modeled point.
          Eigen::Index worst;
          Eigen::VectorXd row_ll(n);
          for (Eigen::Index i = 0; i < n; ++i)
            row_ll(i) = logsumexp_row(log_resp.row(i).transpose());
          row_ll.minCoeff(&worst);
          run.comps[k].mean = data.row(worst).transpose();
          run.comps[k].cov = global.cov;
          run.comps[k].finalize();
          run.log_weights[k] = std::log(1.0 / static_cast<double>(n));
          run.warned = true;
          continue;
        }
        Eigen::VectorXd mean = (data.transpose() * resp) / nk;
        Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
        Eigen::MatrixXd cov =
            (centered.transpose() * (centered.array().colwise() * resp.array()).matrix()) / nk;
        run.comps[k].mean = mean;
        run.comps[k].cov = cov;
        run.warned |= regularize(run.comps[k], opts.ridge);
        run.log_weights[k] = std::log(nk / static_cast<double>(n));
        (void)d;
      }
    }
    return run;
  }
};

// ---------------------------------------------------------------------------
// KDE

class KdeModel final : public DensityModel {
 public:
  KdeModel(Eigen::MatrixXd points, Eigen::VectorXd bandwidth, double floor)
      : points_(std::move(points)), bandwidth_(std::move(bandwidth)) {
    log_floor_ = floor;
    log_norm_ = -std::log(static_cast<double>(points_.rows()));
    for (Eigen::Index j = 0; j < bandwidth_.size(); ++j)
      log_norm_ -= std::log(bandwidth_(j));
    log_norm_ -= 0.5 * static_cast<double>(bandwidth_.size()) * kLog2Pi;
  }

  DensityFamily family() const override { return DensityFamily::kKde; }
  int dim() const override { return static_cast<int>(points_.cols()); }
  double parameter_count() const override {
    return static_cast<double>(points_.size()) + static_cast<double>(bandwidth_.size());
  }

  json to_json() const override {
    json pts = json::array();
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < points_.cols(); ++j) row.push_back(points_(i, j));
      pts.push_back(row);
    }
    return {{"format_version", 1},
            {"family", "kde"},
            {"dim", dim()},
            {"log_floor", log_floor_},
            {"bandwidth", std::vector<double>(bandwidth_.data(),
                                              bandwidth_.data() + bandwidth_.size())},
            {"points", pts}};
  }

 protected:
  double log_density_raw(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    Eigen::VectorXd scaled = x.array() / bandwidth_.array();
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd expo(points_.rows());
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < points_.cols(); ++j) {
        double z = scaled(j) - points_(i, j) / bandwidth_(j);
        s += z * z;
      }
      expo(i) = -0.5 * s;
      best = std::max(best, expo(i));
    }
    if (!std::isfinite(best)) return log_floor_;
    double acc = (expo.array() - best).exp().sum();
    return log_norm_ + best + std::log(acc);
  }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd bandwidth_;
  double log_norm_ = 0.0;
};

Eigen::VectorXd scott_bandwidth(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  const double n = static_cast<double>(samples.rows());
  const double d = static_cast<double>(samples.cols());
  double factor = std::pow(n, -1.0 / (d + 4.0));
  Eigen::VectorXd mean = samples.colwise().mean();
  Eigen::VectorXd var =
      (samples.rowwise() - mean.transpose()).array().square().colwise().mean();
  Eigen::VectorXd h = var.array().sqrt() * factor;
  for (Eigen::Index j = 0; j < h.size(); ++j) h(j) = std::max(h(j), 1e-9);
  return h;
}

// ---------------------------------------------------------------------------
// Histogram

class HistogramModel final : public DensityModel {
 public:
  HistogramModel(BoundingBox box, int bins, std::vector<double> log_cell_density,
                 double smoothing, uint64_t n, double floor)
      : box_(std::move(box)),
        bins_(bins),
        log_cell_density_(std::move(log_cell_density)),
        smoothing_(smoothing),
        n_(n) {
    log_floor_ = floor;
  }

  DensityFamily family() const override { return DensityFamily::kHistogram; }
  int dim() const override { return static_cast<int>(box_.lo.size()); }
  double parameter_count() const override {
    return std::pow(static_cast<double>(bins_), static_cast<double>(dim()));
  }

  json to_json() const override {
    return {{"format_version", 1},
            {"family", "histogram"},
            {"dim", dim()},
            {"log_floor", log_floor_},
            {"box", {{"lo", box_.lo}, {"hi", box_.hi}}},
            {"bins", bins_},
            {"smoothing", smoothing_},
            {"n", n_},
            {"log_cell_density", log_cell_density_}};
  }

  static std::size_t cell_count(int bins, int dim) {
    double c = std::pow(static_cast<double>(bins), static_cast<double>(dim));
    if (c > (1u << 26))
      throw std::invalid_argument("histogram grid too large for dimension");
    return static_cast<std::size_t>(c);
  }

  std::size_t cell_index(const Eigen::Ref<const Eigen::VectorXd>& x, bool* inside) const {
    std::size_t idx = 0;
    *inside = true;
    for (int j = 0; j < dim(); ++j) {
      double w = (box_.hi[j] - box_.lo[j]) / bins_;
      if (x(j) < box_.lo[j] || x(j) > box_.hi[j]) *inside = false;
      int b = static_cast<int>((x(j) - box_.lo[j]) / w);
      b = std::clamp(b, 0, bins_ - 1);
      idx = idx * static_cast<std::size_t>(bins_) + static_cast<std::size_t>(b);
    }
    return idx;
  }

 protected:
  double log_density_raw(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    bool inside = false;
    std::size_t idx = cell_index(x, &inside);
    if (!inside) return log_floor_;
    return log_cell_density_[idx];
  }

 private:
  BoundingBox box_;
  int bins_;
  std::vector<double> log_cell_density_;
  double smoothing_;
  uint64_t n_;
};

std::unique_ptr<DensityModel> fit_histogram(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                            const DensityOptions& opts) {
  const int d = static_cast<int>(samples.cols());
  BoundingBox box;
  if (opts.box) {
    box = *opts.box;
    if (static_cast<int>(box.lo.size()) != d || static_cast<int>(box.hi.size()) != d)
      throw std::invalid_argument("histogram box dimension mismatch");
  } else {
    // Sample box, inflated so edge points do not sit exactly on the border.
    box.lo.resize(d);
    box.hi.resize(d);
    for (int j = 0; j < d; ++j) {
      double lo = samples.col(j).minCoeff();
      double hi = samples.col(j).maxCoeff();
      double pad = std::max(1e-9, 1e-6 * (hi - lo));
      box.lo[j] = lo - pad;
      box.hi[j] = hi + pad;
    }
  }
  for (int j = 0; j < d; ++j)
    if (!(box.hi[j] > box.lo[j]))
      throw std::invalid_argument("histogram box is degenerate");

  const int bins = opts.hist_bins;
  if (bins < 1) throw std::invalid_argument("hist_bins must be >= 1");
  std::size_t cells = HistogramModel::cell_count(bins, d);
  std::vector<double> counts(cells, 0.0);

  HistogramModel probe(box, bins, {}, 0.0, 0, opts.log_floor);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    bool inside = false;
    std::size_t idx = probe.cell_index(samples.row(i).transpose(), &inside);
    counts[idx] += 1.0;
  }

  double cell_volume = 1.0;
  for (int j = 0; j < d; ++j) cell_volume *= (box.hi[j] - box.lo[j]) / bins;
  const double alpha = opts.hist_smoothing;
  const double denom =
      (static_cast<double>(samples.rows()) + alpha * static_cast<double>(cells)) *
      cell_volume;
  std::vector<double> log_density(cells);
  for (std::size_t c = 0; c < cells; ++c)
    log_density[c] = std::log((counts[c] + alpha) / denom);

  return std::make_unique<HistogramModel>(box, bins, std::move(log_density), alpha,
                                          static_cast<uint64_t>(samples.rows()),
                                          opts.log_floor);
}

}  // namespace

// ---------------------------------------------------------------------------

FitResult fit_density_traced(DensityFamily family,
                             const Eigen::Ref<const Eigen::MatrixXd>& train,
                             const Eigen::Ref<const Eigen::MatrixXd>& heldout,
                             const DensityOptions& opts, std::mt19937_64& rng) {
  if (train.rows() < 2) throw std::invalid_argument("density fit needs >= 2 samples");
  FitResult result;
  switch (family) {
    case DensityFamily::kGaussian: {
      bool warned = false;
      GaussianCore core = fit_gaussian_core(train, opts.ridge, &warned);
      result.model =
          std::make_unique<GaussianModel>(std::move(core), opts.log_floor, warned);
      break;
    }
    case DensityFamily::kGmm: {
      if (opts.gmm_components < 1)
        throw std::invalid_argument("gmm_components must be >= 1");
      if (train.rows() < opts.gmm_components)
        throw std::invalid_argument("fewer samples than mixture components");
      GmmFitter fitter{train, opts, opts.gmm_components};
      GmmFitter::EmRun best;
      double best_ll = -std::numeric_limits<double>::infinity();
      int restarts = std::max(1, opts.gmm_restarts);
      for (int r = 0; r < restarts; ++r) {
        auto run = fitter.run_em(rng, heldout.rows() > 0 ? &heldout : nullptr);
        if (run.train_ll.back() > best_ll) {
          best_ll = run.train_ll.back();
          best = std::move(run);
        }
      }
      result.model = std::make_unique<GmmModel>(best.log_weights, best.comps,
                                                opts.log_floor, best.warned);
      result.heldout_curve = best.heldout_ll;
      result.train_curve = best.train_ll;
      break;
    }
    case DensityFamily::kKde: {
      Eigen::VectorXd h;
      if (opts.kde_bandwidth > 0.0) {
        h = Eigen::VectorXd::Constant(train.cols(), opts.kde_bandwidth);
      } else {
        h = scott_bandwidth(train);
      }
      result.model = std::make_unique<KdeModel>(train, h, opts.log_floor);
      break;
    }
    case DensityFamily::kHistogram: {
      result.model = fit_histogram(train, opts);
      break;
    }
  }
  if (result.heldout_curve.empty() && heldout.rows() > 0)
    result.heldout_curve.push_back(mean_log_likelihood(*result.model, heldout));
  return result;
}

std::unique_ptr<DensityModel> fit_density(DensityFamily family,
                                          const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                          const DensityOptions& opts,
                                          std::mt19937_64& rng) {
  Eigen::MatrixXd empty(0, samples.cols());
  return fit_density_traced(family, samples, empty, opts, rng).model;
}

double mean_log_likelihood(const DensityModel& model,
                           const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  if (samples.rows() == 0) throw std::invalid_argument("empty evaluation set");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    acc += model.log_density(samples.row(i).transpose());
  return acc / static_cast<double>(samples.rows());
}

std::unique_ptr<DensityModel> density_from_json(const json& j) {
  std::string family = j.at("family").get<std::string>();
  double floor = j.value("log_floor", -27.631021115928547);
  if (family == "gaussian") {
    GaussianCore core;
    auto mean = j.at("mean").get<std::vector<double>>();
    core.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    const auto& cov = j.at("cov");
    core.cov.resize(core.mean.size(), core.mean.size());
    for (Eigen::Index r = 0; r < core.cov.rows(); ++r)
      for (Eigen::Index c = 0; c < core.cov.cols(); ++c)
        core.cov(r, c) = cov.at(r).at(c).get<double>();
    core.finalize();
    return std::make_unique<GaussianModel>(std::move(core), floor);
  }
  if (family == "gmm") {
    std::vector<double> log_w;
    std::vector<GaussianCore> comps;
    for (const auto& cj : j.at("components")) {
      GaussianCore core;
      auto mean = cj.at("mean").get<std::vector<double>>();
      core.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      const auto& cov = cj.at("cov");
      core.cov.resize(core.mean.size(), core.mean.size());
      for (Eigen::Index r = 0; r < core.cov.rows(); ++r)
        for (Eigen::Index c = 0; c < core.cov.cols(); ++c)
          core.cov(r, c) = cov.at(r).at(c).get<double>();
      core.finalize();
      log_w.push_back(std::log(cj.at("weight").get<double>()));
      comps.push_back(std::move(core));
    }
    return std::make_unique<GmmModel>(std::move(log_w), std::move(comps), floor);
  }
  if (family == "kde") {
    auto bw = j.at("bandwidth").get<std::vector<double>>();
    const auto& pts = j.at("points");
    Eigen::MatrixXd points(pts.size(), bw.size());
    for (Eigen::Index r = 0; r < points.rows(); ++r)
      for (Eigen::Index c = 0; c < points.cols(); ++c)
        points(r, c) = pts.at(r).at(c).get<double>();
    Eigen::VectorXd h = Eigen::Map<Eigen::VectorXd>(bw.data(), static_cast<Eigen::Index>(bw.size()));
    return std::make_unique<KdeModel>(std::move(points), h, floor);
  }
  if (family == "histogram") {
    BoundingBox box;
    box.lo = j.at("box").at("lo").get<std::vector<double>>();
    box.hi = j.at("box").at("hi").get<std::vector<double>>();
    return std::make_unique<HistogramModel>(
        std::move(box), j.at("bins").get<int>(),
        j.at("log_cell_density").get<std::vector<double>>(),
        j.value("smoothing", 0.5), j.value("n", static_cast<uint64_t>(0)), floor);
  }
  throw std::invalid_argument("unknown density family in document: " + family);
}

}  // namespace cgem
