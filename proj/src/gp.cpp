#include "cutkit/gp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace cutkit::gp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd kernel_matrix(const PeriodicKernel& k, const std::vector<double>& a,
                              const std::vector<double>& b) {
  Eigen::MatrixXd m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = k(a[i], b[j]);
  return m;
}

// Cholesky of K + diag(noise), escalating a diagonal ridge from 1e-8 to 1e-4
// when the factorization fails.
Eigen::LLT<Eigen::MatrixXd> factor_with_ridge(const Eigen::MatrixXd& k,
                                              const Eigen::VectorXd& noise_diag,
                                              double* applied_ridge = nullptr) {
  Eigen::MatrixXd a = k;
  a.diagonal() += noise_diag;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  double ridge = 0.0;
  if (llt.info() != Eigen::Success) {
    for (ridge = 1e-8; ridge <= 1e-4; ridge *= 10.0) {
      Eigen::MatrixXd ridged = a;
      ridged.diagonal().array() += ridge;
      llt.compute(ridged);
      if (llt.info() == Eigen::Success) break;
    }
  }
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gp: covariance factorization failed after max ridge");
  if (applied_ridge) *applied_ridge = ridge;
  return llt;
}

struct NmResult {
  Eigen::Vector4d x;
  double f = kInf;
};

// Nelder-Mead over (log p, log l, log s2, log noise). Deterministic; keeps
// the best vertex, so the returned value never exceeds the start value.
template <typename F>
NmResult nelder_mead(const Eigen::Vector4d& x0, F&& objective, int max_iterations) {
  constexpr int n = 4;
  std::array<Eigen::Vector4d, n + 1> xs;
  std::array<double, n + 1> fs;
  xs[0] = x0;
  fs[0] = objective(x0);
  for (int i = 0; i < n; ++i) {
    xs[i + 1] = x0;
    xs[i + 1][i] += 0.35;
    fs[i + 1] = objective(xs[i + 1]);
  }
  std::array<int, n + 1> order;

  for (int iter = 0; iter < max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = order[0], worst = order[n], second_worst = order[n - 1];
    if (std::isfinite(fs[best]) &&
        fs[worst] - fs[best] < 1e-7 * (1.0 + std::abs(fs[best])))
      break;

    Eigen::Vector4d centroid = Eigen::Vector4d::Zero();
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += xs[i];
    centroid /= n;

    const Eigen::Vector4d reflected = centroid + (centroid - xs[worst]);
    const double f_r = objective(reflected);
    if (f_r < fs[best]) {
      const Eigen::Vector4d expanded = centroid + 2.0 * (centroid - xs[worst]);
      const double f_e = objective(expanded);
      if (f_e < f_r) {
        xs[worst] = expanded;
        fs[worst] = f_e;
      } else {
        xs[worst] = reflected;
        fs[worst] = f_r;
      }
    } else if (f_r < fs[second_worst]) {
      xs[worst] = reflected;
      fs[worst] = f_r;
    } else {
      const Eigen::Vector4d contracted = centroid + 0.5 * (xs[worst] - centroid);
      const double f_c = objective(contracted);
      if (f_c < fs[worst]) {
        xs[worst] = contracted;
        fs[worst] = f_c;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
          fs[i] = objective(xs[i]);
        }
      }
    }
  }

  NmResult out;
  for (int i = 0; i <= n; ++i)
    if (fs[i] < out.f) {
      out.f = fs[i];
      out.x = xs[i];
    }
  return out;
}

// Dominant period from a log-spaced periodogram scan; seeds half of the
// fit restarts so at least some land in the global NLL basin (the marginal
// likelihood is strongly multimodal in the period).
double estimate_period(const std::vector<double>& time, const Eigen::VectorXd& y, double p_min,
                       double p_max) {
  constexpr int n_freq = 400;
  const double f_lo = 1.0 / p_max, f_hi = 1.0 / p_min;
  const double y_mean = y.mean();
  double best_f = f_lo, best_power = -1.0;
  for (int k = 0; k < n_freq; ++k) {
    const double f = f_lo * std::exp(std::log(f_hi / f_lo) * k / (n_freq - 1));
    double cs = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < time.size(); ++i) {
      const double arg = 2.0 * M_PI * f * time[i];
      cs += (y[static_cast<Eigen::Index>(i)] - y_mean) * std::cos(arg);
      sn += (y[static_cast<Eigen::Index>(i)] - y_mean) * std::sin(arg);
    }
    const double power = cs * cs + sn * sn;
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  return 1.0 / best_f;
}

AxisHyper hyper_from_log(const Eigen::Vector4d& x) {
  AxisHyper h;
  h.kernel.period = std::exp(x[0]);
  h.kernel.length_scale = std::exp(x[1]);
  h.kernel.signal_variance = std::exp(x[2]);
  h.noise_variance = std::exp(x[3]);
  return h;
}

Eigen::Vector4d log_from_hyper(const AxisHyper& h) {
  return {std::log(h.kernel.period), std::log(h.kernel.length_scale),
          std::log(h.kernel.signal_variance), std::log(h.noise_variance)};
}

}  // namespace

void PeriodicKernel::validate() const {
  if (!(period > 0.0) || !(length_scale > 0.0) || !(signal_variance > 0.0))
    throw std::invalid_argument("periodic kernel parameters must be positive");
}

ResidualTargets compute_residuals(const ts::AlignedDataset& dataset,
                                  const std::vector<Vec3>& predicted) {
  const std::size_t grid = dataset.time_grid.size();
  if (!predicted.empty() && predicted.size() != grid)
    throw std::invalid_argument("compute_residuals: prediction/grid size mismatch");

  ResidualTargets out;
  out.zero_model = predicted.empty();
  out.time.reserve(grid * dataset.series.size());
  out.residual.reserve(grid * dataset.series.size());
  for (const auto& s : dataset.series) {
    if (s.size() != grid) throw std::invalid_argument("compute_residuals: series off grid");
    for (std::size_t i = 0; i < grid; ++i) {
      const Vec3 measured = s.values[i].cwiseProduct(s.stddev) + s.mean;
      const Vec3 pred = predicted.empty() ? Vec3::Zero() : predicted[i];
      out.time.push_back(dataset.time_grid[i]);
      out.residual.push_back(measured - pred);
    }
  }
  for (const auto& r : out.residual)
    if (!r.allFinite()) throw std::invalid_argument("compute_residuals: non-finite residual");
  return out;
}

ResidualTargets condense(const ResidualTargets& targets, int max_points) {
  if (max_points < 16) throw std::invalid_argument("condense: max_points must be >= 16");
  const int n = static_cast<int>(targets.size());
  if (n <= max_points) return targets;

  const double t0 = *std::min_element(targets.time.begin(), targets.time.end());
  const double t1 = *std::max_element(targets.time.begin(), targets.time.end());
  const double span = std::max(t1 - t0, 1e-12);

  std::vector<int> count(max_points, 0);
  std::vector<double> time_sum(max_points, 0.0);
  std::vector<Vec3> sum(max_points, Vec3::Zero());
  std::vector<Vec3> sum_sq(max_points, Vec3::Zero());
  std::vector<Vec3> floor_sum(max_points, Vec3::Zero());
  for (int i = 0; i < n; ++i) {
    int b = static_cast<int>((targets.time[i] - t0) / span * max_points);
    b = std::clamp(b, 0, max_points - 1);
    ++count[b];
    time_sum[b] += targets.time[i];
    sum[b] += targets.residual[i];
    sum_sq[b] += targets.residual[i].cwiseProduct(targets.residual[i]);
    if (!targets.noise_floor.empty()) floor_sum[b] += targets.noise_floor[i];
  }

  ResidualTargets out;
  out.zero_model = targets.zero_model;
  for (int b = 0; b < max_points; ++b) {
    if (count[b] == 0) continue;
    const double c = count[b];
    const Vec3 mean = sum[b] / c;
    Vec3 var = sum_sq[b] / c - mean.cwiseProduct(mean);
    var = var.cwiseMax(0.0);
    out.time.push_back(time_sum[b] / c);
    out.residual.push_back(mean);
    out.noise_floor.push_back(var + floor_sum[b] / c);
  }
  return out;
}

double negative_log_likelihood(const AxisHyper& hyper, const std::vector<double>& time,
                               const Eigen::VectorXd& targets,
                               const Eigen::VectorXd& noise_floor) {
  const auto n = static_cast<Eigen::Index>(time.size());
  Eigen::VectorXd noise = Eigen::VectorXd::Constant(n, hyper.noise_variance);
  if (noise_floor.size() == n) noise += noise_floor;
  const Eigen::MatrixXd k = kernel_matrix(hyper.kernel, time, time);
  const auto llt = factor_with_ridge(k, noise);
  const Eigen::VectorXd alpha = llt.solve(targets);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * targets.dot(alpha) + 0.5 * log_det +
         0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

HyperoptResult fit(const ResidualTargets& targets, const FitConfig& config) {
  if (targets.size() < 8) throw std::invalid_argument("fit: need at least 8 training points");
  const ResidualTargets data = condense(targets, std::max(16, config.fit_max_points));
  const auto n = static_cast<Eigen::Index>(data.size());

  std::vector<double> dts;
  for (std::size_t i = 1; i < data.time.size(); ++i)
    dts.push_back(std::abs(data.time[i] - data.time[i - 1]));
  std::sort(dts.begin(), dts.end());
  const double dt_med = std::max(dts.empty() ? 1e-3 : dts[dts.size() / 2], 1e-9);
  const double span =
      *std::max_element(data.time.begin(), data.time.end()) -
      *std::min_element(data.time.begin(), data.time.end());
  const double p_min = 2.0 * dt_med;
  const double p_max = std::max(span / 3.0, p_min * 2.0);

  HyperoptResult result;
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::VectorXd y(n), floor(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y[i] = data.residual[i][axis];
      floor[i] = data.noise_floor.empty() ? 0.0 : data.noise_floor[i][axis];
    }
    const double var = std::max((y.array() - y.mean()).square().mean(), 1e-12);

    // Periods below the sample spacing are aliases; keep the search inside
    // the identifiable band.
    const double log_p_lo = std::log(0.5 * p_min), log_p_hi = std::log(2.0 * p_max);
    auto objective = [&](const Eigen::Vector4d& x) -> double {
      if (x.cwiseAbs().maxCoeff() > 30.0) return kInf;
      if (x[0] < log_p_lo || x[0] > log_p_hi) return kInf;
      try {
        return negative_log_likelihood(hyper_from_log(x), data.time, y, floor);
      } catch (const std::runtime_error&) {
        return kInf;
      }
    };

    const double p_est = std::clamp(estimate_period(data.time, y, p_min, p_max), p_min, p_max);

    AxisFit fit_axis;
    fit_axis.nll = kInf;
    Rng rng = Rng::derive(config.seed, 0x6f70740000ULL + static_cast<std::uint64_t>(axis));
    const int seeded = config.restarts / 2;
    for (int start = 0; start < config.restarts; ++start) {
      StartRecord rec;
      if (start < seeded) {
        // periodogram-seeded: mostly at the estimate, one at its octave in
        // case the scan latched onto the second harmonic
        const double base = (start == seeded - 1 && seeded > 1) ? 2.0 * p_est : p_est;
        rec.init.kernel.period = std::clamp(base * rng.log_uniform(0.95, 1.05),
                                            0.5 * p_min, 2.0 * p_max);
      } else {
        rec.init.kernel.period = rng.log_uniform(p_min, p_max);
      }
      rec.init.kernel.length_scale = rng.log_uniform(0.1, 10.0);
      rec.init.kernel.signal_variance = rng.log_uniform(0.01 * var, 100.0 * var);
      rec.init.noise_variance = config.noise_init;
      rec.init_nll = objective(log_from_hyper(rec.init));
      if (!std::isfinite(rec.init_nll)) {
        rec.failed = true;
        rec.final = rec.init;
        rec.final_nll = kInf;
        fit_axis.starts.push_back(rec);
        continue;
      }
      const NmResult nm =
          nelder_mead(log_from_hyper(rec.init), objective, config.max_iterations);
      rec.final = hyper_from_log(nm.x);
      rec.final_nll = nm.f;
      fit_axis.starts.push_back(rec);
      if (nm.f < fit_axis.nll) {
        fit_axis.nll = nm.f;
        fit_axis.best = rec.final;
      }
    }
    if (!std::isfinite(fit_axis.nll))
      throw std::runtime_error("fit: all restarts failed on axis " + std::to_string(axis));
    result.axis[axis] = std::move(fit_axis);
  }
  return result;
}

GpModel::GpModel(std::vector<double> time, const std::vector<Vec3>& targets,
                 std::array<AxisHyper, 3> axes, std::vector<Vec3> noise_floor)
    : time_(std::move(time)), axes_(axes) {
  const auto n = static_cast<Eigen::Index>(time_.size());
  if (static_cast<Eigen::Index>(targets.size()) != n || n == 0)
    throw std::invalid_argument("GpModel: target/time size mismatch");
  if (!noise_floor.empty() && static_cast<Eigen::Index>(noise_floor.size()) != n)
    throw std::invalid_argument("GpModel: noise floor size mismatch");

  targets_.resize(n, 3);
  noise_floor_.resize(n, 3);
  noise_floor_.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    targets_.row(i) = targets[i].transpose();
    if (!noise_floor.empty()) noise_floor_.row(i) = noise_floor[i].transpose();
  }
  for (int axis = 0; axis < 3; ++axis) {
    axes_[axis].kernel.validate();
    const Eigen::MatrixXd k = kernel_matrix(axes_[axis].kernel, time_, time_);
    const Eigen::VectorXd noise =
        noise_floor_.col(axis).array() + axes_[axis].noise_variance;
    chol_[axis] = factor_with_ridge(k, noise);
    alpha_[axis] = chol_[axis].solve(targets_.col(axis));
  }
}

GpModel::Posterior GpModel::posterior_axis(int axis, const std::vector<double>& test_times) const {
  const auto& hyper = axes_.at(axis);
  const Eigen::MatrixXd k_star = kernel_matrix(hyper.kernel, time_, test_times);
  const Eigen::MatrixXd k_test = kernel_matrix(hyper.kernel, test_times, test_times);
  Posterior out;
  out.mean = k_star.transpose() * alpha_[axis];
  const Eigen::MatrixXd v = chol_[axis].matrixL().solve(k_star);
  out.cov = k_test - v.transpose() * v;
  return out;
}

std::vector<Vec3> GpModel::posterior_mean(const std::vector<double>& test_times) const {
  std::vector<Vec3> out(test_times.size(), Vec3::Zero());
  for (int axis = 0; axis < 3; ++axis) {
    const auto post = posterior_axis(axis, test_times);
    for (std::size_t i = 0; i < test_times.size(); ++i) out[i][axis] = post.mean[i];
  }
  return out;
}

GpModel::SampleCache GpModel::make_sample_cache(const std::vector<double>& test_times) const {
  SampleCache cache;
  for (int axis = 0; axis < 3; ++axis) {
    const auto post = posterior_axis(axis, test_times);
    Eigen::LLT<Eigen::MatrixXd> llt;
    bool ok = false;
    for (double ridge = 1e-10; ridge <= 1e-4; ridge *= 10.0) {
      Eigen::MatrixXd ridged = post.cov;
      ridged.diagonal().array() += ridge;
      llt.compute(ridged);
      if (llt.info() == Eigen::Success) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::runtime_error("gp sample: posterior covariance not factorizable");
    cache.mean[axis] = post.mean;
    cache.chol_l[axis] = llt.matrixL();
  }
  return cache;
}

std::vector<Vec3> GpModel::SampleCache::draw(std::uint64_t seed) const {
  const Eigen::Index m = mean[0].size();
  std::vector<Vec3> out(static_cast<std::size_t>(m), Vec3::Zero());
  for (int axis = 0; axis < 3; ++axis) {
    Rng rng = Rng::derive(seed, 0x73616d70ULL + static_cast<std::uint64_t>(axis));
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
    const Eigen::VectorXd d = mean[axis] + chol_l[axis] * z;
    for (Eigen::Index i = 0; i < m; ++i) out[static_cast<std::size_t>(i)][axis] = d[i];
  }
  return out;
}

std::vector<Vec3> GpModel::sample(const std::vector<double>& test_times,
                                  std::uint64_t seed) const {
  return make_sample_cache(test_times).draw(seed);
}

double GpModel::nll_axis(int axis) const {
  return negative_log_likelihood(axes_.at(axis), time_, targets_.col(axis),
                                 noise_floor_.col(axis));
}

nlohmann::json GpModel::to_json() const {
  nlohmann::json j;
  auto per_axis = nlohmann::json::array();
  for (const auto& a : axes_)
    per_axis.push_back({{"period", a.kernel.period},
                        {"length_scale", a.kernel.length_scale},
                        {"signal_variance", a.kernel.signal_variance},
                        {"noise_variance", a.noise_variance}});
  j["per_axis"] = per_axis;
  auto times = nlohmann::json::array();
  auto residuals = nlohmann::json::array();
  auto floors = nlohmann::json::array();
  for (std::size_t i = 0; i < time_.size(); ++i) {
    times.push_back(time_[i]);
    residuals.push_back({targets_(i, 0), targets_(i, 1), targets_(i, 2)});
    floors.push_back({noise_floor_(i, 0), noise_floor_(i, 1), noise_floor_(i, 2)});
  }
  j["training"] = {{"times", times}, {"residuals", residuals}, {"noise_floor", floors}};
  j["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  return j;
}

GpModel GpModel::from_json(const nlohmann::json& j) {
  std::array<AxisHyper, 3> axes;
  for (int a = 0; a < 3; ++a) {
    const auto& ja = j.at("per_axis").at(a);
    axes[a].kernel.period = ja.at("period").get<double>();
    axes[a].kernel.length_scale = ja.at("length_scale").get<double>();
    axes[a].kernel.signal_variance = ja.at("signal_variance").get<double>();
    axes[a].noise_variance = ja.at("noise_variance").get<double>();
  }
  const auto& tr = j.at("training");
  std::vector<double> time = tr.at("times").get<std::vector<double>>();
  std::vector<Vec3> targets, floors;
  for (const auto& r : tr.at("residuals"))
    targets.emplace_back(r[0].get<double>(), r[1].get<double>(), r[2].get<double>());
  if (tr.contains("noise_floor"))
    for (const auto& r : tr.at("noise_floor"))
      floors.emplace_back(r[0].get<double>(), r[1].get<double>(), r[2].get<double>());
  GpModel model(std::move(time), targets, axes, std::move(floors));
  if (j.contains("meta")) model.meta = j.at("meta");
  return model;
}

void GpModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write gp model: " + path);
  out << to_json().dump(2) << "\n";
}

GpModel GpModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gp model: " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

GpModel fit_model(const ResidualTargets& targets, const FitConfig& config, int max_points) {
  const ResidualTargets condensed = condense(targets, max_points);
  const HyperoptResult hyper = fit(condensed, config);
  std::array<AxisHyper, 3> axes;
  nlohmann::json meta;
  auto fit_meta = nlohmann::json::array();
  for (int a = 0; a < 3; ++a) {
    axes[a] = hyper.axis[a].best;
    fit_meta.push_back({{"nll", hyper.axis[a].nll},
                        {"restarts", static_cast<int>(hyper.axis[a].starts.size())}});
  }
  GpModel model(condensed.time, condensed.residual, axes, condensed.noise_floor);
  meta["fit"] = fit_meta;
  meta["n_train"] = static_cast<int>(condensed.size());
  meta["zero_model"] = condensed.zero_model;
  model.meta = meta;
  return model;
}

}  // namespace cutkit::gp
