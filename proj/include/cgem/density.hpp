#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace cgem {

enum class DensityFamily { kGaussian, kGmm, kKde, kHistogram };

DensityFamily density_family_from_string(const std::string& s);
std::string to_string(DensityFamily family);

struct BoundingBox {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct DensityOptions {
  // Gaussian / GMM
  double ridge = 1e-6;
  int gmm_components = 3;
  int gmm_max_iter = 100;
  double gmm_tol = 1e-7;
  int gmm_restarts = 3;
  // KDE: 0 means Scott's rule per dimension.
  double kde_bandwidth = 0.0;
  // Histogram
  int hist_bins = 20;
  double hist_smoothing = 0.5;
  std::optional<BoundingBox> box;  // histogram grid; defaults to sample box

  double log_floor = -27.631021115928547;  // log(1e-12)

  nlohmann::json to_json() const;
  static DensityOptions from_json(const nlohmann::json& j);
};

// Fitted estimator exposing a floored log-density. Immutable after fit; safe
// for concurrent queries.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual DensityFamily family() const = 0;
  virtual int dim() const = 0;
  virtual nlohmann::json to_json() const = 0;
  // Number of free parameters; used for tie-breaking in model selection.
  virtual double parameter_count() const = 0;

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double log_density(const std::vector<double>& x) const;
  double log_floor() const { return log_floor_; }
  bool fit_warning() const { return fit_warning_; }

  Eigen::VectorXd log_density_batch(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

 protected:
  virtual double log_density_raw(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
  double log_floor_ = -27.631021115928547;
  bool fit_warning_ = false;  // degenerate covariance was jittered
};

struct FitResult {
  std::unique_ptr<DensityModel> model;
  // Held-out mean log-likelihood per training epoch; singleton for
  // closed-form fits.
  std::vector<double> heldout_curve;
  // Training mean log-likelihood per epoch (iterative fits only).
  std::vector<double> train_curve;
};

std::unique_ptr<DensityModel> fit_density(DensityFamily family,
                                          const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                          const DensityOptions& opts,
                                          std::mt19937_64& rng);

// Variant used by the model-selection harness: tracks the held-out score as
// iterative fits progress.
FitResult fit_density_traced(DensityFamily family,
                             const Eigen::Ref<const Eigen::MatrixXd>& train,
                             const Eigen::Ref<const Eigen::MatrixXd>& heldout,
                             const DensityOptions& opts, std::mt19937_64& rng);

std::unique_ptr<DensityModel> density_from_json(const nlohmann::json& j);

double mean_log_likelihood(const DensityModel& model,
                           const Eigen::Ref<const Eigen::MatrixXd>& samples);

}  // namespace cgem
