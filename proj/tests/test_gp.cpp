#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cutkit/gp.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace cutkit;
using namespace cutkit::gp;

namespace {

ResidualTargets make_targets(const std::vector<double>& time, const std::vector<Vec3>& r) {
  ResidualTargets t;
  t.time = time;
  t.residual = r;
  return t;
}

// Draw a function from the periodic kernel prior on a grid (via its own
// Cholesky, test-local).
Eigen::VectorXd prior_draw(const PeriodicKernel& k, const std::vector<double>& time, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(time.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = k(time[i], time[j]);
  cov.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return Eigen::MatrixXd(llt.matrixL()) * z;
}

}  // namespace

TEST_CASE("kernel: variance at zero distance and exact periodicity") {
  PeriodicKernel k{0.37, 1.3, 2.5};
  CHECK(k(1.234, 1.234) == doctest::Approx(2.5));
  CHECK(k(0.4, 0.4 + 0.37) == doctest::Approx(2.5));
  CHECK(k(0.1, 0.6) == doctest::Approx(k(0.6, 0.1)));
}

TEST_CASE("kernel: closed-form value at half period") {
  PeriodicKernel k{1.0, 1.0, 1.0};
  CHECK(k(0.0, 0.5) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("compute_residuals: measured minus predicted, free-running path flagged") {
  ts::AlignedDataset d;
  d.time_grid = {0.0, 0.1, 0.2};
  ts::NormalizedSeries s;
  s.time = d.time_grid;
  s.mean = Vec3(1.0, -2.0, 0.5);
  s.stddev = Vec3(2.0, 1.0, 3.0);
  s.values = {Vec3(0.5, 1.0, -0.5), Vec3(0.0, 0.0, 0.0), Vec3(-0.5, -1.0, 0.5)};
  d.series = {s};
  d.provenance.resize(1);

  // measured values in newtons
  std::vector<Vec3> measured;
  for (const auto& v : s.values) measured.push_back(v.cwiseProduct(s.stddev) + s.mean);

  SUBCASE("prediction equals measurement -> zero residual") {
    const auto r = compute_residuals(d, measured);
    CHECK_FALSE(r.zero_model);
    for (const auto& v : r.residual) CHECK(v.norm() < 1e-12);
  }
  SUBCASE("no prediction -> residual equals measurement, flagged") {
    const auto r = compute_residuals(d, {});
    CHECK(r.zero_model);
    for (std::size_t i = 0; i < r.residual.size(); ++i)
      CHECK((r.residual[i] - measured[i]).norm() < 1e-12);
  }
  SUBCASE("known sinusoid recovered from measured = predicted + sinusoid") {
    ts::AlignedDataset d2 = d;
    std::vector<Vec3> sin_part;
    for (std::size_t i = 0; i < measured.size(); ++i) {
      const double v = std::sin(2.0 * M_PI * d.time_grid[i] / 0.2);
      sin_part.emplace_back(v, 2 * v, -v);
      // bake predicted + sinusoid into the stored normalized values
      d2.series[0].values[i] =
          (measured[i] + sin_part[i] - s.mean).cwiseQuotient(s.stddev);
    }
    const auto r = compute_residuals(d2, measured);
    for (std::size_t i = 0; i < r.residual.size(); ++i)
      CHECK((r.residual[i] - sin_part[i]).norm() < 1e-12);
  }
  SUBCASE("grid mismatch throws") {
    CHECK_THROWS_AS(compute_residuals(d, std::vector<Vec3>(2, Vec3::Zero())),
                    std::invalid_argument);
  }
}

TEST_CASE("condense: identity below the cap, binning above it") {
  std::vector<double> time;
  std::vector<Vec3> r;
  for (int i = 0; i < 100; ++i) {
    time.push_back(i * 0.01);
    r.emplace_back(i, 2 * i, -i);
  }
  const auto t = make_targets(time, r);
  SUBCASE("identity when already small") {
    const auto c = condense(t, 200);
    CHECK(c.size() == 100);
    CHECK(c.noise_floor.empty());
  }
  SUBCASE("paper-scale arithmetic: 35000 -> 1500 bins") {
    std::vector<double> big_t;
    std::vector<Vec3> big_r;
    Rng rng(1);
    for (int i = 0; i < 35000; ++i) {
      big_t.push_back(i * 0.002);
      big_r.emplace_back(rng.normal(), rng.normal(), rng.normal());
    }
    const auto c = condense(make_targets(big_t, big_r), 1500);
    CHECK(c.size() == 1500);  // ~23 samples per bin
    CHECK(c.noise_floor.size() == 1500);
  }
  SUBCASE("constant residuals give zero bin variance") {
    std::vector<Vec3> flat(100, Vec3(1.0, -2.0, 3.0));
    const auto c = condense(make_targets(time, flat), 20);
    for (const auto& v : c.residual) CHECK((v - Vec3(1.0, -2.0, 3.0)).norm() < 1e-12);
    for (const auto& f : c.noise_floor) CHECK(f.norm() < 1e-12);
  }
  SUBCASE("max_points below 16 rejected") {
    CHECK_THROWS_AS(condense(t, 8), std::invalid_argument);
  }
}

TEST_CASE("posterior: interpolation limit at a training point") {
  std::vector<double> time = {0.0, 0.13, 0.29, 0.41, 0.55};
  std::vector<Vec3> y;
  Rng rng(2);
  for (std::size_t i = 0; i < time.size(); ++i)
    y.emplace_back(rng.normal(), rng.normal(), rng.normal());
  std::array<AxisHyper, 3> axes;
  for (auto& a : axes) a = {{1.0, 1.0, 1.0}, 1e-12};
  GpModel model(time, y, axes);
  for (int axis = 0; axis < 3; ++axis) {
    const auto post = model.posterior_axis(axis, {0.29});
    CHECK(post.mean[0] == doctest::Approx(y[2][axis]).epsilon(1e-6));
    CHECK(std::abs(post.cov(0, 0)) < 1e-6);
  }
}

TEST_CASE("posterior: reversion to the zero-mean prior far from data") {
  std::vector<double> time = {0.0, 0.1, 0.2, 0.35};
  std::vector<Vec3> y(time.size(), Vec3(1.5, -2.0, 0.7));
  std::array<AxisHyper, 3> axes;
  for (auto& a : axes) a = {{1.0, 0.05, 2.0}, 0.01};
  GpModel model(time, y, axes);
  const double far = 5.0 + 0.6;  // 0.25..0.6 away from all training points mod p
  for (int axis = 0; axis < 3; ++axis) {
    const auto post = model.posterior_axis(axis, {far});
    CHECK(std::abs(post.mean[0]) < 1e-6);
    CHECK(post.cov(0, 0) == doctest::Approx(2.0).epsilon(1e-6));
  }
}

TEST_CASE("posterior matches the dense conditioning oracle to 1e-8 relative") {
  Rng rng(3);
  for (int instance = 0; instance < 5; ++instance) {
    const int n = 20, m = 5;
    std::vector<double> train, test;
    for (int i = 0; i < n; ++i) train.push_back(rng.uniform(0.0, 1.0));
    for (int i = 0; i < m; ++i) test.push_back(rng.uniform(0.0, 1.2));
    std::vector<Vec3> y;
    for (int i = 0; i < n; ++i) y.emplace_back(rng.normal(), rng.normal(), rng.normal());
    const PeriodicKernel kernel{0.3, 1.2, 2.0};
    const double noise = 0.1;
    std::array<AxisHyper, 3> axes;
    for (auto& a : axes) a = {kernel, noise};
    GpModel model(train, y, axes);

    for (int axis = 0; axis < 3; ++axis) {
      Eigen::VectorXd y_axis(n);
      for (int i = 0; i < n; ++i) y_axis[i] = y[i][axis];
      const auto expected = oracle::dense_conditioning(
          [&](double a, double b) { return kernel(a, b); }, train, y_axis,
          Eigen::VectorXd::Constant(n, noise), test);
      const auto got = model.posterior_axis(axis, test);
      const double mean_scale = std::max(1.0, expected.mean.cwiseAbs().maxCoeff());
      const double cov_scale = std::max(1.0, expected.cov.cwiseAbs().maxCoeff());
      CHECK((got.mean - expected.mean).cwiseAbs().maxCoeff() / mean_scale < 1e-8);
      CHECK((got.cov - expected.cov).cwiseAbs().maxCoeff() / cov_scale < 1e-8);
    }
  }
}

TEST_CASE("factorized NLL matches the explicit log-determinant oracle") {
  Rng rng(4);
  for (int n : {5, 12, 30}) {
    std::vector<double> time;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      time.push_back(rng.uniform(0.0, 2.0));
      y[i] = rng.normal();
    }
    const AxisHyper hyper{{0.4, 0.8, 1.7}, 0.05};
    const double expected = oracle::dense_nll(
        [&](double a, double b) { return hyper.kernel(a, b); }, time, y,
        Eigen::VectorXd::Constant(n, hyper.noise_variance));
    const double got = negative_log_likelihood(hyper, time, y, Eigen::VectorXd());
    CHECK(std::abs(got - expected) / std::max(1.0, std::abs(expected)) < 1e-8);
  }
}

TEST_CASE("posterior variance never exceeds prior variance plus noise") {
  Rng rng(5);
  std::vector<double> time;
  std::vector<Vec3> y;
  for (int i = 0; i < 24; ++i) {
    time.push_back(rng.uniform(0.0, 1.0));
    y.emplace_back(rng.normal(), rng.normal(), rng.normal());
  }
  std::array<AxisHyper, 3> axes;
  for (auto& a : axes) a = {{0.25, 0.9, 3.0}, 0.2};
  GpModel model(time, y, axes);
  std::vector<double> test;
  for (int i = 0; i < 40; ++i) test.push_back(rng.uniform(-1.0, 2.0));
  for (int axis = 0; axis < 3; ++axis) {
    const auto post = model.posterior_axis(axis, test);
    for (int i = 0; i < 40; ++i) {
      CHECK(post.cov(i, i) >= -1e-9);
      CHECK(post.cov(i, i) <= 3.0 + 0.2 + 1e-9);
    }
  }
}

TEST_CASE("posterior mean is exactly p-periodic") {
  Rng rng(6);
  std::vector<double> time;
  std::vector<Vec3> y;
  for (int i = 0; i < 40; ++i) {
    time.push_back(i * 0.025);  // spans 1.0 s = 5 periods
    y.emplace_back(rng.normal(), rng.normal(), rng.normal());
  }
  std::array<AxisHyper, 3> axes;
  for (auto& a : axes) a = {{0.2, 1.0, 1.0}, 0.05};
  GpModel model(time, y, axes);
  const std::vector<double> base = {0.03, 0.11, 0.17};
  const std::vector<double> shifted = {0.23, 0.31, 0.37};
  const auto m0 = model.posterior_mean(base);
  const auto m1 = model.posterior_mean(shifted);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK((m0[i] - m1[i]).norm() < 1e-9);
}

TEST_CASE("sample: deterministic in the seed, Monte Carlo moments match") {
  std::vector<double> time = {0.0, 0.07, 0.16, 0.21, 0.33, 0.41, 0.52, 0.6};
  Rng rng(7);
  std::vector<Vec3> y;
  for (std::size_t i = 0; i < time.size(); ++i)
    y.emplace_back(rng.normal(), rng.normal(), rng.normal());
  std::array<AxisHyper, 3> axes;
  for (auto& a : axes) a = {{0.3, 1.0, 1.0}, 0.05};
  GpModel model(time, y, axes);

  const auto d1 = model.sample({0.1, 0.2}, 99);
  const auto d2 = model.sample({0.1, 0.2}, 99);
  for (std::size_t i = 0; i < d1.size(); ++i) CHECK((d1[i] - d2[i]).norm() == 0.0);
  const auto d3 = model.sample({0.1, 0.2}, 100);
  CHECK((d1[0] - d3[0]).norm() > 0.0);

  const auto post = model.posterior_axis(1, {0.25});
  const int draws = 10000;
  double mean = 0.0, sq = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double v = model.sample({0.25}, 1000 + k)[0][1];
    mean += v;
    sq += v * v;
  }
  mean /= draws;
  const double var = sq / draws - mean * mean;
  const double se_mean = std::sqrt(post.cov(0, 0) / draws);
  const double se_var = post.cov(0, 0) * std::sqrt(2.0 / (draws - 1));
  CHECK(std::abs(mean - post.mean[0]) < 3.0 * se_mean);
  CHECK(std::abs(var - post.cov(0, 0)) < 3.0 * se_var);
}

TEST_CASE("sample: huge noise reverts draws to the prior") {
  std::vector<double> time;
  std::vector<Vec3> y;
  Rng rng(8);
  for (int i = 0; i < 16; ++i) {
    time.push_back(i * 0.04);
    y.emplace_back(10 * rng.normal(), 10 * rng.normal(), 10 * rng.normal());
  }
  const double s2 = 1.5;
  std::array<AxisHyper, 3> axes;
  for (auto& a : axes) a = {{0.2, 1.0, s2}, 1e6};
  GpModel model(time, y, axes);
  const int draws = 10000;
  double sq = 0.0, mean = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double v = model.sample({0.13}, 555 + k)[0][0];
    mean += v;
    sq += v * v;
  }
  mean /= draws;
  const double var = sq / draws - mean * mean;
  CHECK(std::abs(var - s2) / s2 < 0.05);
}

TEST_CASE("fit: recovers a known period and honors the minimizer contract") {
  const PeriodicKernel truth{0.2, 1.0, 1.0};
  std::vector<double> time;
  for (int i = 0; i < 120; ++i) time.push_back(i * 0.008);  // 0.96 s, ~5 periods
  Rng rng(9);
  Eigen::VectorXd f = prior_draw(truth, time, rng);
  std::vector<Vec3> y;
  for (int i = 0; i < 120; ++i) {
    const double v = f[i] + 0.05 * rng.normal();
    y.emplace_back(v, v, v);
  }
  FitConfig config;
  config.restarts = 8;
  config.noise_init = 0.05 * 0.05;
  config.max_iterations = 150;
  config.seed = 11;
  const auto result = fit(make_targets(time, y), config);

  int recovered_starts = 0;
  for (const auto& rec : result.axis[0].starts) {
    CHECK(result.axis[0].nll <= rec.init_nll + 1e-9);
    double p = rec.final.kernel.period;
    if (std::abs(p - 0.2) / 0.2 < 0.05) ++recovered_starts;
  }
  CHECK(recovered_starts >= 3);
  CHECK(std::abs(result.axis[0].best.kernel.period - 0.2) / 0.2 < 0.05);
}

TEST_CASE("fit: white noise yields signal-to-noise ratio below one") {
  std::vector<double> time;
  std::vector<Vec3> y;
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    time.push_back(i * 0.01);
    y.emplace_back(rng.normal(), rng.normal(), rng.normal());
  }
  FitConfig config;
  config.restarts = 6;
  config.noise_init = 1.0;
  config.max_iterations = 120;
  config.seed = 12;
  const auto result = fit(make_targets(time, y), config);
  for (int axis = 0; axis < 3; ++axis) {
    const auto& best = result.axis[axis].best;
    CHECK(best.kernel.signal_variance / best.noise_variance < 1.0);
  }
}

TEST_CASE("fit: too few points rejected") {
  std::vector<double> time = {0, 0.1, 0.2};
  std::vector<Vec3> y(3, Vec3::Zero());
  CHECK_THROWS_AS(fit(make_targets(time, y), {}), std::invalid_argument);
}

TEST_CASE("model persistence round-trips the posterior") {
  std::vector<double> time = {0.0, 0.11, 0.19, 0.31, 0.42};
  Rng rng(13);
  std::vector<Vec3> y;
  for (std::size_t i = 0; i < time.size(); ++i)
    y.emplace_back(rng.normal(), rng.normal(), rng.normal());
  std::array<AxisHyper, 3> axes;
  for (auto& a : axes) a = {{0.21, 0.9, 1.4}, 0.07};
  GpModel model(time, y, axes);
  const std::string path = "test_gp_roundtrip.json";
  model.save(path);
  const auto restored = GpModel::load(path);
  std::remove(path.c_str());
  CHECK(restored.to_json().dump() == model.to_json().dump());
  const auto a = model.posterior_axis(2, {0.05, 0.5});
  const auto b = restored.posterior_axis(2, {0.05, 0.5});
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
}
