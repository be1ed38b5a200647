#pragma once

#include "cutkit/common.hpp"
#include "cutkit/gp.hpp"
#include "cutkit/mechanistic.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cutkit::sim {

// Slab cross-section in the W-frame cutting plane (y feed axis, z normal).
// The occupancy grid is aligned to (y_start, surface_z) so straight cuts at
// grid-commensurate depths sweep whole cell rows.
struct MaterialConfig {
  double surface_z = 0.0;   // mm
  double y_start = 0.0;     // mm
  double y_end = 50.0;      // mm
  double depth = 10.0;      // mm below the surface
  double thickness = 2.0;   // mm, slab extent along x (volume scale)
  double grid = 0.1;        // mm, cell size
};

struct PathConfig {
  Vec3 start = {0.0, 60.0, 0.0};  // mm, W frame
  Vec3 end = {0.0, -10.0, 0.0};
  double speed_nominal = 12.5;    // mm/s (0.75 m/min)
};

struct RewardWeights {
  double q_mrv = 1e-2;            // 1/mm^3
  double q_cut = 0.05;            // 1/s
  Vec3 q_d = {1e-2, 1e-2, 1e-2};  // 1/mm^2, diagonal
  Vec3 q_f = {1e-4, 1e-4, 1e-4};  // 1/N^2, diagonal
};

struct ActionBounds {
  double tdelta_min = -1.0, tdelta_max = 1.0;
  double ndelta_min = 0.0, ndelta_max = 3.0;    // mm
  double kp_min = 25.0, kp_max = 400.0;         // 1/s^2
  double kp_rate = 400.0;                        // 1/s^3
  double tdelta_rate = 2.0;                      // 1/s
  double ndelta_rate = 4.0;                      // mm/s
};

// Per-episode mechanistic constant draw (component-wise uniform). Collapsed
// ranges pin the constants.
struct ConstantRanges {
  Vec3 k_c_min = {60.0, 15.0, 4.0}, k_c_max = {140.0, 50.0, 12.0};  // N/mm^2
  Vec3 k_e_min = {1.0, 0.5, 0.1}, k_e_max = {3.0, 1.5, 0.5};        // N/mm
};

struct AugmentationConfig {
  std::shared_ptr<const gp::GpModel> model;  // null -> no GP disturbance
  double sensor_sigma = 0.0;                 // N, i.i.d. per axis per step
  bool enabled() const { return model != nullptr || sensor_sigma > 0.0; }
};

struct EnvConfig {
  mech::ToolModel tool =
      mech::ToolModel::uniform(4, 1.2, {100.0, 30.0, 8.0}, {2.0, 1.0, 0.3}, 20.0);
  double spindle_rps = 23.0;
  ConstantRanges constant_ranges;
  MaterialConfig material;
  PathConfig path;
  RewardWeights weights;
  ActionBounds bounds;
  double dt = 0.02;        // s, policy period (50 Hz)
  double horizon = 8.0;    // s
  Vec3 kp_init = {200.0, 200.0, 200.0};
  double tdelta_init = 0.0;
  double ndelta_init = 0.0;
  AugmentationConfig augmentation;

  nlohmann::json to_json() const;  // augmentation model stored as its path
  static EnvConfig from_json(const nlohmann::json& j);
  static EnvConfig load(const std::string& path);
  std::string gp_model_path;  // as read from / written to config JSON
};

struct Action {
  Vec3 kp_rate = Vec3::Zero();  // 1/s^3
  double tdelta_rate = 0.0;     // 1/s
  double ndelta_rate = 0.0;     // mm/s

  static constexpr int kDim = 5;
  Eigen::Matrix<double, 5, 1> vec() const;
  static Action from_vec(const Eigen::Matrix<double, 5, 1>& v);
};

struct Observation {
  double path_alignment = 0.0;     // mm^2/s^2, path tangent . tool velocity
  Vec3 path_error = Vec3::Zero();  // mm, setpoint - position
  Vec3 velocity = Vec3::Zero();    // mm/s
  Vec3 force = Vec3::Zero();       // N, measured
  double tdelta = 0.0;
  double ndelta = 0.0;             // mm
  Vec3 kp = Vec3::Zero();          // 1/s^2

  static constexpr int kDim = 15;
  Eigen::Matrix<double, 15, 1> vec() const;
  static Observation from_vec(const Eigen::Matrix<double, 15, 1>& v);
  // Stable serialized layout: (name, offset, size) triples.
  static std::vector<std::tuple<std::string, int, int>> layout();
};

Observation augment_observation(Observation obs, const Vec3& draw);

struct StepRecord {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 path_error = Vec3::Zero();
  Vec3 force = Vec3::Zero();
  double tdelta = 0.0;
  double ndelta = 0.0;
  Vec3 kp = Vec3::Zero();
  double reward = 0.0;
  double mrv = 0.0;  // cumulative
};

struct Trajectory {
  std::vector<Observation> observations;  // observation the action was taken on
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<StepRecord> states;
  double total_reward() const;
};

using PolicyFn = std::function<Action(const Observation&)>;

class CutEnv {
 public:
  explicit CutEnv(EnvConfig config);

  Observation reset(std::uint64_t seed);

  struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool done = false;
  };
  StepResult step(const Action& action);

  // Observation of the current state (post reset or step).
  Observation observation() const { return observe(); }

  bool done() const { return done_; }
  double time() const { return time_; }
  double mrv() const { return mrv_; }
  const EnvConfig& config() const { return config_; }
  const mech::ToolModel& episode_tool() const { return tool_; }
  Vec3 position() const { return position_; }
  // Occupancy probe into the current material state (W-frame mm).
  bool solid_at(double y, double z) const;

 private:
  Observation observe() const;
  void remove_swept(double y0, double z0, double y1, double z1);
  int stamp(double cy, double cz);

  EnvConfig config_;
  mech::ToolModel tool_;  // per-episode constants
  // occupancy grid
  int cells_y_ = 0, cells_z_ = 0;
  std::vector<std::uint8_t> occupied_;
  double grid_y0_ = 0.0, grid_z0_ = 0.0;
  // episode state
  Vec3 position_ = Vec3::Zero();
  Vec3 velocity_ = Vec3::Zero();
  Vec3 setpoint_ = Vec3::Zero();
  Vec3 kp_ = Vec3::Zero();
  double tdelta_ = 0.0, ndelta_ = 0.0;
  double path_s_ = 0.0, path_length_ = 0.0;
  Vec3 path_dir_ = Vec3::Zero();
  mech::SpindleState spindle_;
  Vec3 measured_force_ = Vec3::Zero();
  double time_ = 0.0;
  double mrv_ = 0.0;
  bool done_ = false;
  bool started_ = false;
  int step_index_ = 0;
  std::vector<Vec3> gp_draw_;  // pre-sampled on the episode grid
  std::optional<gp::GpModel::SampleCache> gp_cache_;
  std::optional<Rng> noise_rng_;
};

// Runs at most max_steps from the env's current state; stops at done.
Trajectory rollout(CutEnv& env, const PolicyFn& policy, int max_steps);

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path);

}  // namespace cutkit::sim
