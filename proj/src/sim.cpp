#include "cutkit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace cutkit::sim {

namespace {

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec_from(const nlohmann::json& j, const char* key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

double get_or(const nlohmann::json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

Eigen::Matrix<double, 5, 1> Action::vec() const {
  Eigen::Matrix<double, 5, 1> v;
  v << kp_rate.x(), kp_rate.y(), kp_rate.z(), tdelta_rate, ndelta_rate;
  return v;
}

Action Action::from_vec(const Eigen::Matrix<double, 5, 1>& v) {
  Action a;
  a.kp_rate = {v[0], v[1], v[2]};
  a.tdelta_rate = v[3];
  a.ndelta_rate = v[4];
  return a;
}

Eigen::Matrix<double, 15, 1> Observation::vec() const {
  Eigen::Matrix<double, 15, 1> v;
  v << path_alignment, path_error.x(), path_error.y(), path_error.z(), velocity.x(),
      velocity.y(), velocity.z(), force.x(), force.y(), force.z(), tdelta, ndelta, kp.x(),
      kp.y(), kp.z();
  return v;
}

Observation Observation::from_vec(const Eigen::Matrix<double, 15, 1>& v) {
  Observation o;
  o.path_alignment = v[0];
  o.path_error = {v[1], v[2], v[3]};
  o.velocity = {v[4], v[5], v[6]};
  o.force = {v[7], v[8], v[9]};
  o.tdelta = v[10];
  o.ndelta = v[11];
  o.kp = {v[12], v[13], v[14]};
  return o;
}

std::vector<std::tuple<std::string, int, int>> Observation::layout() {
  return {{"path_alignment", 0, 1}, {"path_error", 1, 3}, {"velocity", 4, 3},
          {"force", 7, 3},          {"tdelta", 10, 1},    {"ndelta", 11, 1},
          {"kp", 12, 3}};
}

Observation augment_observation(Observation obs, const Vec3& draw) {
  if (!draw.allFinite()) throw std::invalid_argument("augment_observation: non-finite draw");
  obs.force += draw;
  return obs;
}

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum;
}

nlohmann::json EnvConfig::to_json() const {
  nlohmann::json j;
  j["tool"] = tool.to_json();
  j["spindle_rps"] = spindle_rps;
  j["constant_ranges"] = {{"k_c_min", vec_json(constant_ranges.k_c_min)},
                          {"k_c_max", vec_json(constant_ranges.k_c_max)},
                          {"k_e_min", vec_json(constant_ranges.k_e_min)},
                          {"k_e_max", vec_json(constant_ranges.k_e_max)}};
  j["material"] = {{"surface_z_mm", material.surface_z}, {"y_start_mm", material.y_start},
                   {"y_end_mm", material.y_end},         {"depth_mm", material.depth},
                   {"thickness_mm", material.thickness}, {"grid_mm", material.grid}};
  j["path"] = {{"start", vec_json(path.start)},
               {"end", vec_json(path.end)},
               {"speed_nominal", path.speed_nominal}};
  j["weights"] = {{"q_mrv", weights.q_mrv},
                  {"q_cut", weights.q_cut},
                  {"q_d", vec_json(weights.q_d)},
                  {"q_f", vec_json(weights.q_f)}};
  j["bounds"] = {{"tdelta_min", bounds.tdelta_min},   {"tdelta_max", bounds.tdelta_max},
                 {"ndelta_min", bounds.ndelta_min},   {"ndelta_max", bounds.ndelta_max},
                 {"kp_min", bounds.kp_min},           {"kp_max", bounds.kp_max},
                 {"kp_rate", bounds.kp_rate},         {"tdelta_rate", bounds.tdelta_rate},
                 {"ndelta_rate", bounds.ndelta_rate}};
  j["dt"] = dt;
  j["horizon"] = horizon;
  j["kp_init"] = vec_json(kp_init);
  j["tdelta_init"] = tdelta_init;
  j["ndelta_init"] = ndelta_init;
  j["augmentation"] = {{"gp_model_path", gp_model_path},
                       {"sensor_sigma", augmentation.sensor_sigma}};
  return j;
}

EnvConfig EnvConfig::from_json(const nlohmann::json& j) {
  EnvConfig c;
  if (j.contains("tool")) c.tool = mech::ToolModel::from_json(j.at("tool"));
  c.spindle_rps = get_or(j, "spindle_rps", c.spindle_rps);
  if (j.contains("constant_ranges")) {
    const auto& r = j.at("constant_ranges");
    c.constant_ranges.k_c_min = vec_from(r, "k_c_min", c.constant_ranges.k_c_min);
    c.constant_ranges.k_c_max = vec_from(r, "k_c_max", c.constant_ranges.k_c_max);
    c.constant_ranges.k_e_min = vec_from(r, "k_e_min", c.constant_ranges.k_e_min);
    c.constant_ranges.k_e_max = vec_from(r, "k_e_max", c.constant_ranges.k_e_max);
  }
  if (j.contains("material")) {
    const auto& m = j.at("material");
    c.material.surface_z = get_or(m, "surface_z_mm", c.material.surface_z);
    c.material.y_start = get_or(m, "y_start_mm", c.material.y_start);
    c.material.y_end = get_or(m, "y_end_mm", c.material.y_end);
    c.material.depth = get_or(m, "depth_mm", c.material.depth);
    c.material.thickness = get_or(m, "thickness_mm", c.material.thickness);
    c.material.grid = get_or(m, "grid_mm", c.material.grid);
  }
  if (j.contains("path")) {
    const auto& p = j.at("path");
    c.path.start = vec_from(p, "start", c.path.start);
    c.path.end = vec_from(p, "end", c.path.end);
    c.path.speed_nominal = get_or(p, "speed_nominal", c.path.speed_nominal);
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    c.weights.q_mrv = get_or(w, "q_mrv", c.weights.q_mrv);
    c.weights.q_cut = get_or(w, "q_cut", c.weights.q_cut);
    c.weights.q_d = vec_from(w, "q_d", c.weights.q_d);
    c.weights.q_f = vec_from(w, "q_f", c.weights.q_f);
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    c.bounds.tdelta_min = get_or(b, "tdelta_min", c.bounds.tdelta_min);
    c.bounds.tdelta_max = get_or(b, "tdelta_max", c.bounds.tdelta_max);
    c.bounds.ndelta_min = get_or(b, "ndelta_min", c.bounds.ndelta_min);
    c.bounds.ndelta_max = get_or(b, "ndelta_max", c.bounds.ndelta_max);
    c.bounds.kp_min = get_or(b, "kp_min", c.bounds.kp_min);
    c.bounds.kp_max = get_or(b, "kp_max", c.bounds.kp_max);
    c.bounds.kp_rate = get_or(b, "kp_rate", c.bounds.kp_rate);
    c.bounds.tdelta_rate = get_or(b, "tdelta_rate", c.bounds.tdelta_rate);
    c.bounds.ndelta_rate = get_or(b, "ndelta_rate", c.bounds.ndelta_rate);
  }
  c.dt = get_or(j, "dt", c.dt);
  c.horizon = get_or(j, "horizon", c.horizon);
  c.kp_init = vec_from(j, "kp_init", c.kp_init);
  c.tdelta_init = get_or(j, "tdelta_init", c.tdelta_init);
  c.ndelta_init = get_or(j, "ndelta_init", c.ndelta_init);
  if (j.contains("augmentation")) {
    const auto& a = j.at("augmentation");
    c.augmentation.sensor_sigma = get_or(a, "sensor_sigma", 0.0);
    if (a.contains("gp_model_path")) c.gp_model_path = a.at("gp_model_path").get<std::string>();
    if (!c.gp_model_path.empty())
      c.augmentation.model = std::make_shared<gp::GpModel>(gp::GpModel::load(c.gp_model_path));
  }
  return c;
}

EnvConfig EnvConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open env config: " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

CutEnv::CutEnv(EnvConfig config) : config_(std::move(config)) {
  config_.tool.validate();
  if (!(config_.dt > 0.0)) throw std::invalid_argument("env: dt must be positive");
  if (!(config_.material.grid > 0.0)) throw std::invalid_argument("env: grid must be positive");
  if (!(config_.horizon > 0.0)) throw std::invalid_argument("env: horizon must be positive");
  if ((config_.path.end - config_.path.start).norm() <= 0.0)
    throw std::invalid_argument("env: degenerate reference path");
  cells_y_ = static_cast<int>(
      std::llround((config_.material.y_end - config_.material.y_start) / config_.material.grid));
  cells_z_ = static_cast<int>(std::llround(config_.material.depth / config_.material.grid));
  if (cells_y_ < 0 || cells_z_ < 0) throw std::invalid_argument("env: negative material extent");
  grid_y0_ = config_.material.y_start;
  grid_z0_ = config_.material.surface_z - config_.material.depth;
}

bool CutEnv::solid_at(double y, double z) const {
  const int iy = static_cast<int>(std::floor((y - grid_y0_) / config_.material.grid));
  const int iz = static_cast<int>(std::floor((z - grid_z0_) / config_.material.grid));
  if (iy < 0 || iy >= cells_y_ || iz < 0 || iz >= cells_z_) return false;
  return occupied_[static_cast<std::size_t>(iz) * cells_y_ + iy] != 0;
}

int CutEnv::stamp(double cy, double cz) {
  // cz is the tool reference point (lowest point of the disc).
  const double r = config_.tool.tool_radius;
  const double g = config_.material.grid;
  const double center_z = cz + r;
  int removed = 0;
  const int iz0 = std::max(0, static_cast<int>(std::floor((cz - grid_z0_) / g)));
  const int iz1 = std::min(cells_z_ - 1,
                           static_cast<int>(std::floor((center_z + r - grid_z0_) / g)));
  for (int iz = iz0; iz <= iz1; ++iz) {
    const double zc = grid_z0_ + (iz + 0.5) * g;
    const double dz = zc - center_z;
    const double chord_sq = r * r - dz * dz;
    if (chord_sq <= 0.0) continue;
    const double w = std::sqrt(chord_sq);
    const int iy0 = std::max(0, static_cast<int>(std::ceil((cy - w - grid_y0_) / g - 0.5)));
    const int iy1 =
        std::min(cells_y_ - 1, static_cast<int>(std::floor((cy + w - grid_y0_) / g - 0.5)));
    for (int iy = iy0; iy <= iy1; ++iy) {
      auto& cell = occupied_[static_cast<std::size_t>(iz) * cells_y_ + iy];
      if (cell) {
        cell = 0;
        ++removed;
      }
    }
  }
  return removed;
}

void CutEnv::remove_swept(double y0, double z0, double y1, double z1) {
  const double dist = std::hypot(y1 - y0, z1 - z0);
  const int substeps = std::max(1, static_cast<int>(std::ceil(dist / (config_.material.grid * 0.5))));
  int removed = 0;
  for (int k = 1; k <= substeps; ++k) {
    const double w = static_cast<double>(k) / substeps;
    removed += stamp(y0 + w * (y1 - y0), z0 + w * (z1 - z0));
  }
  mrv_ += static_cast<double>(removed) * config_.material.grid * config_.material.grid *
          config_.material.thickness;
}

Observation CutEnv::reset(std::uint64_t seed) {
  tool_ = config_.tool;
  Rng constants = Rng::derive(seed, 0x636f6e73ULL);
  const auto& cr = config_.constant_ranges;
  for (int a = 0; a < 3; ++a) {
    tool_.k_c[a] = constants.uniform(cr.k_c_min[a], cr.k_c_max[a]);
    tool_.k_e[a] = constants.uniform(cr.k_e_min[a], cr.k_e_max[a]);
  }

  occupied_.assign(static_cast<std::size_t>(cells_y_) * cells_z_, 1);
  position_ = config_.path.start;
  velocity_ = Vec3::Zero();
  kp_ = config_.kp_init.cwiseMax(config_.bounds.kp_min).cwiseMin(config_.bounds.kp_max);
  tdelta_ = std::clamp(config_.tdelta_init, config_.bounds.tdelta_min, config_.bounds.tdelta_max);
  ndelta_ = std::clamp(config_.ndelta_init, config_.bounds.ndelta_min, config_.bounds.ndelta_max);
  path_s_ = 0.0;
  path_length_ = (config_.path.end - config_.path.start).norm();
  path_dir_ = (config_.path.end - config_.path.start).normalized();
  setpoint_ = config_.path.start + Vec3(0.0, 0.0, -ndelta_);
  spindle_ = {config_.spindle_rps, config_.path.speed_nominal * (1.0 + tdelta_), 0.0};
  time_ = 0.0;
  mrv_ = 0.0;
  done_ = false;
  started_ = true;
  step_index_ = 0;

  const int n_steps = static_cast<int>(std::ceil(config_.horizon / config_.dt));
  if (config_.augmentation.model) {
    if (!gp_cache_) {
      std::vector<double> grid_times(n_steps + 1);
      for (int k = 0; k <= n_steps; ++k) grid_times[k] = k * config_.dt;
      gp_cache_ = config_.augmentation.model->make_sample_cache(grid_times);
    }
    gp_draw_ = gp_cache_->draw(Rng::derive(seed, 0x64726177ULL).next_u64());
  } else {
    gp_draw_.clear();
  }
  if (config_.augmentation.sensor_sigma > 0.0)
    noise_rng_ = Rng::derive(seed, 0x6e6f697aULL);
  else
    noise_rng_.reset();

  // Initial measured force at the start pose.
  const double center_y = position_.y();
  const double center_z = position_.z() + config_.tool.tool_radius;
  const auto engagement = mech::engagement_from_geometry(
      center_y, center_z, tool_, spindle_,
      [this](double y, double z) { return solid_at(y, z); }, config_.material.grid);
  measured_force_ = mech::model_to_world(mech::total_force(tool_, spindle_, engagement));
  if (!gp_draw_.empty()) measured_force_ += gp_draw_[0];
  if (noise_rng_)
    for (int a = 0; a < 3; ++a)
      measured_force_[a] += config_.augmentation.sensor_sigma * noise_rng_->normal();

  return observe();
}

CutEnv::StepResult CutEnv::step(const Action& action) {
  if (!started_) throw std::logic_error("step before reset");
  if (done_) throw std::logic_error("step after episode end");
  const auto& b = config_.bounds;

  Action a = action;
  for (int i = 0; i < 3; ++i) a.kp_rate[i] = std::clamp(a.kp_rate[i], -b.kp_rate, b.kp_rate);
  a.tdelta_rate = std::clamp(a.tdelta_rate, -b.tdelta_rate, b.tdelta_rate);
  a.ndelta_rate = std::clamp(a.ndelta_rate, -b.ndelta_rate, b.ndelta_rate);

  const double dt = config_.dt;
  for (int i = 0; i < 3; ++i)
    kp_[i] = std::clamp(kp_[i] + a.kp_rate[i] * dt, b.kp_min, b.kp_max);
  tdelta_ = std::clamp(tdelta_ + a.tdelta_rate * dt, b.tdelta_min, b.tdelta_max);
  ndelta_ = std::clamp(ndelta_ + a.ndelta_rate * dt, b.ndelta_min, b.ndelta_max);

  const double feed = config_.path.speed_nominal * (1.0 + tdelta_);
  path_s_ = std::min(path_s_ + feed * dt, path_length_);
  setpoint_ = config_.path.start + path_dir_ * path_s_ + Vec3(0.0, 0.0, -ndelta_);

  // Exact critically damped second-order tracking per axis; never overshoots
  // a step setpoint from rest.
  const Vec3 old_position = position_;
  for (int i = 0; i < 3; ++i) {
    const double omega = std::sqrt(kp_[i]);
    const double e0 = position_[i] - setpoint_[i];
    const double v0 = velocity_[i];
    const double decay = std::exp(-omega * dt);
    const double slope = v0 + omega * e0;
    position_[i] = setpoint_[i] + decay * (e0 + slope * dt);
    velocity_[i] = decay * (v0 - omega * slope * dt);
  }

  const double sweep = 2.0 * M_PI * spindle_.spindle_speed * dt;
  const double theta_start = spindle_.rotation_angle;
  spindle_.rotation_angle += sweep;
  spindle_.feed_rate = feed;

  const double center_y = position_.y();
  const double center_z = position_.z() + config_.tool.tool_radius;
  // Measured force: mean mechanistic force over the rotation swept during
  // this control period (what a 500 Hz sensor delivers to the 50 Hz policy);
  // flutes alias badly when sampled once per period.
  Vec3 f = Vec3::Zero();
  mech::SpindleState probe = spindle_;
  constexpr int kForceSubsamples = 32;
  for (int k = 1; k <= kForceSubsamples; ++k) {
    probe.rotation_angle = theta_start + sweep * k / kForceSubsamples;
    const auto engagement = mech::engagement_from_geometry(
        center_y, center_z, tool_, probe,
        [this](double y, double z) { return solid_at(y, z); }, config_.material.grid);
    f += mech::model_to_world(mech::total_force(tool_, probe, engagement));
  }
  f /= kForceSubsamples;

  ++step_index_;
  if (!gp_draw_.empty())
    f += gp_draw_[std::min<std::size_t>(step_index_, gp_draw_.size() - 1)];
  if (noise_rng_)
    for (int i = 0; i < 3; ++i)
      f[i] += config_.augmentation.sensor_sigma * noise_rng_->normal();
  measured_force_ = f;

  const double mrv_before = mrv_;
  remove_swept(old_position.y(), old_position.z(), position_.y(), position_.z());
  const double delta_mrv = mrv_ - mrv_before;

  time_ += dt;
  done_ = path_s_ >= path_length_ - 1e-12 || time_ >= config_.horizon - 1e-12;

  const Vec3 e = setpoint_ - position_;
  const auto& w = config_.weights;
  const double reward = w.q_mrv * delta_mrv - w.q_cut * dt -
                        e.dot(w.q_d.cwiseProduct(e)) - f.dot(w.q_f.cwiseProduct(f));

  return {observe(), reward, done_};
}

Observation CutEnv::observe() const {
  Observation o;
  const double feed = config_.path.speed_nominal * (1.0 + tdelta_);
  o.path_alignment = (feed * path_dir_).dot(velocity_);
  o.path_error = setpoint_ - position_;
  o.velocity = velocity_;
  o.force = measured_force_;
  o.tdelta = tdelta_;
  o.ndelta = ndelta_;
  o.kp = kp_;
  return o;
}

Trajectory rollout(CutEnv& env, const PolicyFn& policy, int max_steps) {
  Trajectory traj;
  Observation obs = env.observation();
  for (int k = 0; k < max_steps && !env.done(); ++k) {
    const Action act = policy(obs);
    const auto res = env.step(act);
    traj.observations.push_back(obs);
    traj.actions.push_back(act);
    traj.rewards.push_back(res.reward);
    StepRecord rec;
    rec.time = env.time();
    rec.position = env.position();
    rec.path_error = res.obs.path_error;
    rec.force = res.obs.force;
    rec.tdelta = res.obs.tdelta;
    rec.ndelta = res.obs.ndelta;
    rec.kp = res.obs.kp;
    rec.reward = res.reward;
    rec.mrv = env.mrv();
    traj.states.push_back(rec);
    obs = res.obs;
  }
  return traj;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory: " + path);
  out << "t,e_x,e_z,F_y,F_z,t_delta,n_delta,Kp_x,Kp_y,Kp_z,reward\n";
  char buf[320];
  for (const auto& s : trajectory.states) {
    std::snprintf(buf, sizeof(buf), "%.6g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  s.time, s.path_error.x(), s.path_error.z(), s.force.y(), s.force.z(),
                  s.tdelta, s.ndelta, s.kp.x(), s.kp.y(), s.kp.z(), s.reward);
    out << buf;
  }
}

}  // namespace cutkit::sim
