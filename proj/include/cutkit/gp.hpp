#pragma once

#include "cutkit/common.hpp"
#include "cutkit/timeseries.hpp"

#include <Eigen/Cholesky>
#include <json.hpp>

#include <array>
#include <optional>
#include <vector>

namespace cutkit::gp {

// Exponential-sine (periodic) covariance:
//   k(t, t') = signal_variance * exp(-2 sin^2(pi |t - t'| / period) / length_scale^2)
struct PeriodicKernel {
  double period = 1.0;           // s
  double length_scale = 1.0;     // dimensionless
  double signal_variance = 1.0;  // N^2

  double operator()(double t, double t_prime) const {
    const double s = std::sin(M_PI * std::abs(t - t_prime) / period);
    return signal_variance * std::exp(-2.0 * s * s / (length_scale * length_scale));
  }
  void validate() const;
};

// Residual disturbance targets on a common grid: measured force minus the
// mechanistic prediction. noise_floor carries per-point heteroscedastic
// variance (N^2) introduced by condense(); empty means zero everywhere.
struct ResidualTargets {
  std::vector<double> time;
  std::vector<Vec3> residual;
  std::vector<Vec3> noise_floor;
  bool zero_model = false;  // set when no mechanistic prediction existed

  std::size_t size() const { return residual.size(); }
};

// Residuals against an explicit per-grid-point prediction. An empty
// prediction selects the free-running path (predicted = 0, flagged). Series
// values are mapped back to newtons via their stored moments before pooling.
ResidualTargets compute_residuals(const ts::AlignedDataset& dataset,
                                  const std::vector<Vec3>& predicted);

// Uniform time binning down to at most max_points. Each bin contributes its
// mean time and mean residual; the within-bin variance becomes that point's
// heteroscedastic noise floor.
ResidualTargets condense(const ResidualTargets& targets, int max_points);

struct AxisHyper {
  PeriodicKernel kernel;
  double noise_variance = 0.01;  // N^2
};

// Exact negative log marginal likelihood via Cholesky. Throws on
// factorization failure after the ridge escalation (1e-8 .. 1e-4).
double negative_log_likelihood(const AxisHyper& hyper, const std::vector<double>& time,
                               const Eigen::VectorXd& targets,
                               const Eigen::VectorXd& noise_floor);

struct FitConfig {
  int restarts = 8;
  double noise_init = 0.01;   // N^2, sensor noise under static load
  int fit_max_points = 384;   // targets are condensed to this size for the search
  int max_iterations = 200;   // simplex iterations per start
  std::uint64_t seed = 0;
};

struct StartRecord {
  AxisHyper init;
  double init_nll = 0.0;
  AxisHyper final;
  double final_nll = 0.0;
  bool failed = false;
};

struct AxisFit {
  AxisHyper best;
  double nll = 0.0;
  std::vector<StartRecord> starts;
};

struct HyperoptResult {
  std::array<AxisFit, 3> axis;
};

// Multi-start minimisation of the NLL over (log p, log l, log s2, log noise)
// per axis, Nelder-Mead in log space.
HyperoptResult fit(const ResidualTargets& targets, const FitConfig& config);

// Per-axis zero-mean GP conditioned on the stored targets with a cached
// Cholesky factor of K + diag(noise). Immutable after construction.
class GpModel {
 public:
  GpModel(std::vector<double> time, const std::vector<Vec3>& targets,
          std::array<AxisHyper, 3> axes, std::vector<Vec3> noise_floor = {});

  struct Posterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
  };
  Posterior posterior_axis(int axis, const std::vector<double>& test_times) const;

  std::vector<Vec3> posterior_mean(const std::vector<double>& test_times) const;

  // Joint draw from N(mean, cov) per axis; deterministic in (model, times, seed).
  std::vector<Vec3> sample(const std::vector<double>& test_times, std::uint64_t seed) const;

  // Factored posterior frozen on a grid; draw(seed) reproduces sample() on
  // that grid without refactorizing. Used by the simulator per episode.
  struct SampleCache {
    std::array<Eigen::VectorXd, 3> mean;
    std::array<Eigen::MatrixXd, 3> chol_l;
    std::vector<Vec3> draw(std::uint64_t seed) const;
  };
  SampleCache make_sample_cache(const std::vector<double>& test_times) const;

  double nll_axis(int axis) const;

  const std::array<AxisHyper, 3>& axes() const { return axes_; }
  const std::vector<double>& training_time() const { return time_; }
  std::size_t size() const { return time_.size(); }

  nlohmann::json to_json() const;
  static GpModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static GpModel load(const std::string& path);

  nlohmann::json meta;  // fit provenance carried through persistence

 private:
  std::vector<double> time_;
  std::array<AxisHyper, 3> axes_;
  Eigen::MatrixXd targets_;      // n x 3
  Eigen::MatrixXd noise_floor_;  // n x 3
  std::array<Eigen::LLT<Eigen::MatrixXd>, 3> chol_;
  std::array<Eigen::VectorXd, 3> alpha_;  // (K + noise)^-1 d
};

// Convenience: condense, fit, and condition in one pass (CLI fit-gp path).
GpModel fit_model(const ResidualTargets& targets, const FitConfig& config, int max_points);

}  // namespace cutkit::gp
