#pragma once

#include "cutkit/common.hpp"
#include "cutkit/sim.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace cutkit::eval {

struct EpisodeMetrics {
  double reward = 0.0;
  double completion_time = 0.0;  // s
  double mean_path_dev = 0.0;    // mm, mean |e|
  double mean_tool_load = 0.0;   // N, mean |f|
  double mrv = 0.0;              // mm^3
  // reward component breakdown (sums to reward)
  double mrv_term = 0.0, time_term = 0.0, path_term = 0.0, force_term = 0.0;
};

EpisodeMetrics metrics_from_trajectory(const sim::Trajectory& trajectory,
                                       const sim::RewardWeights& weights, double dt);

struct StrategyReport {
  std::string strategy;
  std::string domain;  // "base" or "augmented"
  std::vector<EpisodeMetrics> episodes;

  double mean_reward() const;
  double mean_completion_time() const;
  double mean_path_dev() const;
  double mean_tool_load() const;
  double mean_mrv() const;
  double mean_component(double EpisodeMetrics::*field) const;
  std::vector<double> rewards() const;

  nlohmann::json to_json() const;
  static StrategyReport from_json(const nlohmann::json& j);
};

// Seeded rollouts of one policy in the given domain; episode seeds derive
// from seed_base so strategies compare on identical seed streams.
StrategyReport evaluate_strategy(const sim::EnvConfig& env_config, const sim::PolicyFn& policy,
                                 const std::string& strategy, const std::string& domain,
                                 int episodes, std::uint64_t seed_base,
                                 std::vector<sim::Trajectory>* keep_traces = nullptr);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
  int n1 = 0, n2 = 0;
  bool valid = false;  // false when either sample has < 2 episodes
};

// Unpaired two-tailed t-test with unequal variances (Welch-Satterthwaite dof).
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

double student_t_cdf(double t, double dof);

struct ViolinData {
  std::vector<double> quantiles;        // min, p5, p25, p50, p75, p95, max
  std::vector<double> density_x;
  std::vector<double> density;          // Gaussian KDE, Silverman bandwidth
};

struct Comparison {
  std::vector<StrategyReport> reports;
  struct Pair {
    std::string a, b;
    WelchResult test;
  };
  std::vector<Pair> pairwise;
  std::vector<ViolinData> violins;  // aligned with reports

  nlohmann::json to_json() const;
  std::string table_csv() const;  // Table-I-shaped metric summary
};

Comparison compare(const std::vector<StrategyReport>& reports);

// Causal moving average; the window is truncated at the start of the series.
std::vector<double> moving_average(const std::vector<double>& x, int window);

// Plot-ready per-episode CSVs: actions plus states with a 50-point moving
// average applied to the forces.
void export_traces(const std::vector<sim::Trajectory>& trajectories, const std::string& dir,
                   const std::string& prefix, int force_filter_window = 50);

}  // namespace cutkit::eval
