#include "cutkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cutkit::eval {

namespace {

// Regularized incomplete beta I_x(a, b) via the continued fraction expansion.
double betacf(double a, double b, double x) {
  constexpr int max_iter = 300;
  constexpr double eps = 3e-14, fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace

EpisodeMetrics metrics_from_trajectory(const sim::Trajectory& trajectory,
                                       const sim::RewardWeights& weights, double dt) {
  EpisodeMetrics m;
  if (trajectory.states.empty()) return m;
  double prev_mrv = 0.0;
  double path_sum = 0.0, load_sum = 0.0;
  for (const auto& s : trajectory.states) {
    m.reward += s.reward;
    m.mrv_term += weights.q_mrv * (s.mrv - prev_mrv);
    prev_mrv = s.mrv;
    m.time_term -= weights.q_cut * dt;
    m.path_term -= s.path_error.dot(weights.q_d.cwiseProduct(s.path_error));
    m.force_term -= s.force.dot(weights.q_f.cwiseProduct(s.force));
    path_sum += s.path_error.norm();
    load_sum += s.force.norm();
  }
  const auto n = static_cast<double>(trajectory.states.size());
  m.completion_time = trajectory.states.back().time;
  m.mean_path_dev = path_sum / n;
  m.mean_tool_load = load_sum / n;
  m.mrv = trajectory.states.back().mrv;
  return m;
}

double StrategyReport::mean_component(double EpisodeMetrics::*field) const {
  if (episodes.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : episodes) s += e.*field;
  return s / static_cast<double>(episodes.size());
}

double StrategyReport::mean_reward() const { return mean_component(&EpisodeMetrics::reward); }
double StrategyReport::mean_completion_time() const {
  return mean_component(&EpisodeMetrics::completion_time);
}
double StrategyReport::mean_path_dev() const {
  return mean_component(&EpisodeMetrics::mean_path_dev);
}
double StrategyReport::mean_tool_load() const {
  return mean_component(&EpisodeMetrics::mean_tool_load);
}
double StrategyReport::mean_mrv() const { return mean_component(&EpisodeMetrics::mrv); }

std::vector<double> StrategyReport::rewards() const {
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const auto& e : episodes) out.push_back(e.reward);
  return out;
}

nlohmann::json StrategyReport::to_json() const {
  nlohmann::json eps = nlohmann::json::array();
  for (const auto& e : episodes)
    eps.push_back({{"reward", e.reward},
                   {"completion_time", e.completion_time},
                   {"mean_path_dev", e.mean_path_dev},
                   {"mean_tool_load", e.mean_tool_load},
                   {"mrv", e.mrv},
                   {"mrv_term", e.mrv_term},
                   {"time_term", e.time_term},
                   {"path_term", e.path_term},
                   {"force_term", e.force_term}});
  return {{"strategy", strategy},
          {"domain", domain},
          {"episodes", eps},
          {"summary",
           {{"reward", mean_reward()},
            {"completion_time", mean_completion_time()},
            {"mean_path_dev", mean_path_dev()},
            {"mean_tool_load", mean_tool_load()},
            {"mrv", mean_mrv()},
            {"mrv_term", mean_component(&EpisodeMetrics::mrv_term)},
            {"time_term", mean_component(&EpisodeMetrics::time_term)},
            {"path_term", mean_component(&EpisodeMetrics::path_term)},
            {"force_term", mean_component(&EpisodeMetrics::force_term)}}}};
}

StrategyReport StrategyReport::from_json(const nlohmann::json& j) {
  StrategyReport r;
  r.strategy = j.at("strategy").get<std::string>();
  r.domain = j.at("domain").get<std::string>();
  for (const auto& je : j.at("episodes")) {
    EpisodeMetrics e;
    e.reward = je.at("reward").get<double>();
    e.completion_time = je.at("completion_time").get<double>();
    e.mean_path_dev = je.at("mean_path_dev").get<double>();
    e.mean_tool_load = je.at("mean_tool_load").get<double>();
    e.mrv = je.at("mrv").get<double>();
    e.mrv_term = je.at("mrv_term").get<double>();
    e.time_term = je.at("time_term").get<double>();
    e.path_term = je.at("path_term").get<double>();
    e.force_term = je.at("force_term").get<double>();
    r.episodes.push_back(e);
  }
  return r;
}

StrategyReport evaluate_strategy(const sim::EnvConfig& env_config, const sim::PolicyFn& policy,
                                 const std::string& strategy, const std::string& domain,
                                 int episodes, std::uint64_t seed_base,
                                 std::vector<sim::Trajectory>* keep_traces) {
  StrategyReport report;
  report.strategy = strategy;
  report.domain = domain;
  sim::CutEnv env(env_config);
  const int max_steps = static_cast<int>(std::ceil(env_config.horizon / env_config.dt)) + 1;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(Rng::derive(seed_base, static_cast<std::uint64_t>(ep)).next_u64());
    sim::Trajectory traj = sim::rollout(env, policy, max_steps);
    report.episodes.push_back(metrics_from_trajectory(traj, env_config.weights, env_config.dt));
    if (keep_traces) keep_traces->push_back(std::move(traj));
  }
  return report;
}

double student_t_cdf(double t, double dof) {
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * betai(0.5 * dof, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  WelchResult r;
  r.n1 = static_cast<int>(a.size());
  r.n2 = static_cast<int>(b.size());
  if (r.n1 < 2 || r.n2 < 2) return r;
  const double m1 = mean_of(a), m2 = mean_of(b);
  const double v1 = sample_variance(a, m1), v2 = sample_variance(b, m2);
  const double se1 = v1 / r.n1, se2 = v2 / r.n2;
  const double se = se1 + se2;
  if (se <= 0.0) {  // identical constant samples
    r.t = 0.0;
    r.dof = static_cast<double>(r.n1 + r.n2 - 2);
    r.p = 1.0;
    r.valid = true;
    return r;
  }
  r.t = (m1 - m2) / std::sqrt(se);
  r.dof = se * se / (se1 * se1 / (r.n1 - 1) + se2 * se2 / (r.n2 - 1));
  r.p = betai(0.5 * r.dof, 0.5, r.dof / (r.dof + r.t * r.t));
  r.valid = true;
  return r;
}

Comparison compare(const std::vector<StrategyReport>& reports) {
  if (reports.size() < 2) throw std::invalid_argument("compare: need at least 2 reports");
  Comparison c;
  c.reports = reports;
  for (std::size_t i = 0; i < reports.size(); ++i)
    for (std::size_t j = i + 1; j < reports.size(); ++j) {
      Comparison::Pair pair;
      pair.a = reports[i].strategy + "/" + reports[i].domain;
      pair.b = reports[j].strategy + "/" + reports[j].domain;
      pair.test = welch_t_test(reports[i].rewards(), reports[j].rewards());
      c.pairwise.push_back(pair);
    }

  for (const auto& report : reports) {
    ViolinData v;
    std::vector<double> r = report.rewards();
    if (r.empty()) {
      c.violins.push_back(v);
      continue;
    }
    std::sort(r.begin(), r.end());
    for (double q : {0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0})
      v.quantiles.push_back(quantile(r, q));
    const double mean = mean_of(r);
    const double sd = r.size() > 1 ? std::sqrt(sample_variance(r, mean)) : 0.0;
    const double iqr = quantile(r, 0.75) - quantile(r, 0.25);
    double bw = 0.9 * std::min(sd, iqr / 1.34) * std::pow(static_cast<double>(r.size()), -0.2);
    if (!(bw > 0.0)) bw = std::max(1e-9, std::abs(mean) * 1e-3 + 1e-9);
    const double lo = r.front() - 3.0 * bw, hi = r.back() + 3.0 * bw;
    constexpr int grid = 64;
    for (int g = 0; g < grid; ++g) {
      const double x = lo + (hi - lo) * g / (grid - 1);
      double density = 0.0;
      for (double sample : r) {
        const double z = (x - sample) / bw;
        density += std::exp(-0.5 * z * z);
      }
      density /= static_cast<double>(r.size()) * bw * std::sqrt(2.0 * M_PI);
      v.density_x.push_back(x);
      v.density.push_back(density);
    }
    c.violins.push_back(v);
  }
  return c;
}

nlohmann::json Comparison::to_json() const {
  nlohmann::json j;
  auto reports_json = nlohmann::json::array();
  for (const auto& r : reports) reports_json.push_back(r.to_json());
  j["reports"] = reports_json;
  auto tests = nlohmann::json::array();
  for (const auto& p : pairwise)
    tests.push_back({{"a", p.a},
                     {"b", p.b},
                     {"t", p.test.t},
                     {"dof", p.test.dof},
                     {"p", p.test.p},
                     {"valid", p.test.valid}});
  j["welch_tests"] = tests;
  auto violins_json = nlohmann::json::array();
  for (std::size_t i = 0; i < violins.size(); ++i)
    violins_json.push_back({{"strategy", reports[i].strategy},
                            {"domain", reports[i].domain},
                            {"quantiles", violins[i].quantiles},
                            {"density_x", violins[i].density_x},
                            {"density", violins[i].density}});
  j["violins"] = violins_json;
  return j;
}

std::string Comparison::table_csv() const {
  std::ostringstream out;
  out << "strategy,domain,t_s,e_mm,f_N,MRV_mm3,reward,mrv_term,time_term,path_term,force_term\n";
  char buf[400];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                  r.strategy.c_str(), r.domain.c_str(), r.mean_completion_time(),
                  r.mean_path_dev(), r.mean_tool_load(), r.mean_mrv(), r.mean_reward(),
                  r.mean_component(&EpisodeMetrics::mrv_term),
                  r.mean_component(&EpisodeMetrics::time_term),
                  r.mean_component(&EpisodeMetrics::path_term),
                  r.mean_component(&EpisodeMetrics::force_term));
    out << buf;
  }
  return out.str();
}

std::vector<double> moving_average(const std::vector<double>& x, int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(x.size(), 0.0);
  double running = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    running += x[i];
    if (i >= static_cast<std::size_t>(window)) running -= x[i - window];
    const auto n = std::min<std::size_t>(i + 1, window);
    out[i] = running / static_cast<double>(n);
  }
  return out;
}

void export_traces(const std::vector<sim::Trajectory>& trajectories, const std::string& dir,
                   const std::string& prefix, int force_filter_window) {
  std::filesystem::create_directories(dir);
  for (std::size_t ep = 0; ep < trajectories.size(); ++ep) {
    const auto& traj = trajectories[ep];
    std::vector<double> fy, fz;
    fy.reserve(traj.states.size());
    fz.reserve(traj.states.size());
    for (const auto& s : traj.states) {
      fy.push_back(s.force.y());
      fz.push_back(s.force.z());
    }
    const auto fy_filtered = moving_average(fy, force_filter_window);
    const auto fz_filtered = moving_average(fz, force_filter_window);

    char name[64];
    std::snprintf(name, sizeof(name), "%s_ep%03zu.csv", prefix.c_str(), ep);
    std::ofstream out(std::filesystem::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write trace in " + dir);
    out << "t,t_delta,n_delta,Kp_x,Kp_y,Kp_z,e_x,e_z,F_y,F_z\n";
    char buf[320];
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      const auto& s = traj.states[i];
      std::snprintf(buf, sizeof(buf), "%.6g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                    s.time, s.tdelta, s.ndelta, s.kp.x(), s.kp.y(), s.kp.z(),
                    s.path_error.x(), s.path_error.z(), fy_filtered[i], fz_filtered[i]);
      out << buf;
    }
  }
}

}  // namespace cutkit::eval
