#include "cutkit/imitation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace cutkit::il {

namespace {

Eigen::MatrixXd xavier(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j[0].size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

void adam_update(Eigen::MatrixXd& w, const Eigen::MatrixXd& g, Eigen::MatrixXd& m,
                 Eigen::MatrixXd& v, double lr, long t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v.array().matrix() + (1.0 - b2) * g.array().square().matrix();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void adam_update(Eigen::VectorXd& w, const Eigen::VectorXd& g, Eigen::VectorXd& m,
                 Eigen::VectorXd& v, double lr, long t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v.array().matrix() + (1.0 - b2) * g.array().square().matrix();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

// Bounds of the 5 action components in vector order.
void action_bounds_arrays(const sim::ActionBounds& b, Eigen::Matrix<double, 5, 1>& lo,
                          Eigen::Matrix<double, 5, 1>& hi) {
  lo << -b.kp_rate, -b.kp_rate, -b.kp_rate, -b.tdelta_rate, -b.ndelta_rate;
  hi << b.kp_rate, b.kp_rate, b.kp_rate, b.tdelta_rate, b.ndelta_rate;
}

sim::EnvConfig strip_augmentation(sim::EnvConfig config) {
  config.augmentation = {};
  config.gp_model_path.clear();
  return config;
}

double mean_probe_reward(const sim::EnvConfig& base, const Policy& policy, int n_probe,
                         std::uint64_t seed) {
  sim::CutEnv env(base);
  const int max_steps = static_cast<int>(std::ceil(base.horizon / base.dt)) + 1;
  double sum = 0.0;
  for (int i = 0; i < n_probe; ++i) {
    env.reset(Rng::derive(seed, 0x70726f6265ULL + i).next_u64());
    sum += sim::rollout(env, policy.fn(), max_steps).total_reward();
  }
  return sum / n_probe;
}

}  // namespace

Mlp::Mlp(int in_dim, int hidden, int out_dim, Rng& init_rng) {
  w1_ = xavier(hidden, in_dim, init_rng);
  w2_ = xavier(hidden, hidden, init_rng);
  w3_ = xavier(out_dim, hidden, init_rng);
  b1_ = Eigen::VectorXd::Zero(hidden);
  b2_ = Eigen::VectorXd::Zero(hidden);
  b3_ = Eigen::VectorXd::Zero(out_dim);
  mw1_ = Eigen::MatrixXd::Zero(hidden, in_dim);
  mw2_ = Eigen::MatrixXd::Zero(hidden, hidden);
  mw3_ = Eigen::MatrixXd::Zero(out_dim, hidden);
  vw1_ = mw1_;
  vw2_ = mw2_;
  vw3_ = mw3_;
  mb1_ = Eigen::VectorXd::Zero(hidden);
  mb2_ = Eigen::VectorXd::Zero(hidden);
  mb3_ = Eigen::VectorXd::Zero(out_dim);
  vb1_ = mb1_;
  vb2_ = mb2_;
  vb3_ = mb3_;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd a1 = ((w1_ * x + b1_).array().tanh()).matrix();
  const Eigen::VectorXd a2 = ((w2_ * a1 + b2_).array().tanh()).matrix();
  return w3_ * a2 + b3_;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd a1 = ((w1_ * x).colwise() + b1_).array().tanh();
  const Eigen::MatrixXd a2 = ((w2_ * a1).colwise() + b2_).array().tanh();
  return (w3_ * a2).colwise() + b3_;
}

double Mlp::train_epoch(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lr,
                        int batch, Rng& shuffle_rng) {
  const auto n = x.cols();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(order[i], order[shuffle_rng.uniform_int(0, static_cast<int>(i))]);

  double loss_sum = 0.0;
  Eigen::Index done = 0;
  while (done < n) {
    const Eigen::Index b = std::min<Eigen::Index>(batch, n - done);
    Eigen::MatrixXd xb(x.rows(), b), yb(y.rows(), b);
    for (Eigen::Index k = 0; k < b; ++k) {
      xb.col(k) = x.col(order[done + k]);
      yb.col(k) = y.col(order[done + k]);
    }
    done += b;

    const Eigen::MatrixXd a1 = ((w1_ * xb).colwise() + b1_).array().tanh();
    const Eigen::MatrixXd a2 = ((w2_ * a1).colwise() + b2_).array().tanh();
    const Eigen::MatrixXd out = (w3_ * a2).colwise() + b3_;
    const Eigen::MatrixXd err = out - yb;
    loss_sum += err.array().square().sum();

    const double scale = 2.0 / static_cast<double>(b * out.rows());
    const Eigen::MatrixXd d_out = scale * err;
    gw3_ = d_out * a2.transpose();
    gb3_ = d_out.rowwise().sum();
    const Eigen::MatrixXd d_a2 =
        (w3_.transpose() * d_out).array() * (1.0 - a2.array().square());
    gw2_ = d_a2 * a1.transpose();
    gb2_ = d_a2.rowwise().sum();
    const Eigen::MatrixXd d_a1 =
        (w2_.transpose() * d_a2).array() * (1.0 - a1.array().square());
    gw1_ = d_a1 * xb.transpose();
    gb1_ = d_a1.rowwise().sum();

    adam_step(lr);
  }
  return loss_sum / static_cast<double>(n * y.rows());
}

void Mlp::adam_step(double lr) {
  ++adam_t_;
  adam_update(w1_, gw1_, mw1_, vw1_, lr, adam_t_);
  adam_update(w2_, gw2_, mw2_, vw2_, lr, adam_t_);
  adam_update(w3_, gw3_, mw3_, vw3_, lr, adam_t_);
  adam_update(b1_, gb1_, mb1_, vb1_, lr, adam_t_);
  adam_update(b2_, gb2_, mb2_, vb2_, lr, adam_t_);
  adam_update(b3_, gb3_, mb3_, vb3_, lr, adam_t_);
}

nlohmann::json Mlp::to_json() const {
  return {{"layers",
           {{{"w", matrix_json(w1_)}, {"b", vector_json(b1_)}},
            {{"w", matrix_json(w2_)}, {"b", vector_json(b2_)}},
            {{"w", matrix_json(w3_)}, {"b", vector_json(b3_)}}}}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  const auto& layers = j.at("layers");
  if (layers.size() != 3) throw std::invalid_argument("mlp: expected 3 layers");
  Mlp m;
  m.w1_ = matrix_from(layers[0].at("w"));
  m.b1_ = vector_from(layers[0].at("b"));
  m.w2_ = matrix_from(layers[1].at("w"));
  m.b2_ = vector_from(layers[1].at("b"));
  m.w3_ = matrix_from(layers[2].at("w"));
  m.b3_ = vector_from(layers[2].at("b"));
  m.mw1_ = Eigen::MatrixXd::Zero(m.w1_.rows(), m.w1_.cols());
  m.mw2_ = Eigen::MatrixXd::Zero(m.w2_.rows(), m.w2_.cols());
  m.mw3_ = Eigen::MatrixXd::Zero(m.w3_.rows(), m.w3_.cols());
  m.vw1_ = m.mw1_;
  m.vw2_ = m.mw2_;
  m.vw3_ = m.mw3_;
  m.mb1_ = Eigen::VectorXd::Zero(m.b1_.size());
  m.mb2_ = Eigen::VectorXd::Zero(m.b2_.size());
  m.mb3_ = Eigen::VectorXd::Zero(m.b3_.size());
  m.vb1_ = m.mb1_;
  m.vb2_ = m.mb2_;
  m.vb3_ = m.mb3_;
  return m;
}

nlohmann::json ExpertConfig::to_json() const {
  return {{"contact_force", contact_force}, {"doc_target", doc_target},
          {"kp_high", kp_high},             {"kp_low_z", kp_low_z},
          {"feed_approach", feed_approach}, {"feed_cut", feed_cut},
          {"force_ref", force_ref},         {"force_backoff", force_backoff},
          {"kp_force_slope", kp_force_slope}, {"drive_gain", drive_gain}};
}

ExpertConfig ExpertConfig::from_json(const nlohmann::json& j) {
  ExpertConfig c;
  c.contact_force = j.value("contact_force", c.contact_force);
  c.doc_target = j.value("doc_target", c.doc_target);
  c.kp_high = j.value("kp_high", c.kp_high);
  c.kp_low_z = j.value("kp_low_z", c.kp_low_z);
  c.feed_approach = j.value("feed_approach", c.feed_approach);
  c.feed_cut = j.value("feed_cut", c.feed_cut);
  c.force_ref = j.value("force_ref", c.force_ref);
  c.force_backoff = j.value("force_backoff", c.force_backoff);
  c.kp_force_slope = j.value("kp_force_slope", c.kp_force_slope);
  c.drive_gain = j.value("drive_gain", c.drive_gain);
  return c;
}

sim::Action Policy::act(const sim::Observation& obs) const {
  Eigen::Matrix<double, 5, 1> lo, hi;
  action_bounds_arrays(bounds, lo, hi);

  Eigen::Matrix<double, 5, 1> raw;
  if (kind == Kind::ScriptedExpert) {
    const double load = obs.force.norm();
    const bool cutting = load > expert.contact_force;
    Vec3 kp_target(expert.kp_high, expert.kp_high, expert.kp_high);
    double tdelta_target = expert.feed_approach;
    if (cutting) {
      const double overload = std::max(0.0, load - expert.force_ref);
      kp_target.z() = std::clamp(expert.kp_low_z + expert.kp_force_slope * overload,
                                 bounds.kp_min, bounds.kp_max);
      tdelta_target = expert.feed_cut - expert.force_backoff * overload;
    }
    const double ndelta_target = expert.doc_target;
    raw << expert.drive_gain * (kp_target.x() - obs.kp.x()),
        expert.drive_gain * (kp_target.y() - obs.kp.y()),
        expert.drive_gain * (kp_target.z() - obs.kp.z()),
        expert.drive_gain * (tdelta_target - obs.tdelta),
        expert.drive_gain * (ndelta_target - obs.ndelta);
  } else if (kind == Kind::Linear) {
    raw = lin_w * obs.vec() + lin_b;
  } else {
    if (!net) throw std::logic_error("learned policy without network");
    const Eigen::VectorXd x =
        (obs.vec() - obs_mean).cwiseQuotient(obs_scale);
    Eigen::VectorXd out = net->forward(x);
    if (act_scale.size() == out.size())  // nets without it emit raw actions
      out = out.cwiseProduct(act_scale) + act_mean;
    raw = out;
  }
  return sim::Action::from_vec(raw.cwiseMax(lo).cwiseMin(hi));
}

sim::PolicyFn Policy::fn() const {
  return [p = *this](const sim::Observation& obs) { return p.act(obs); };
}

nlohmann::json Policy::to_json() const {
  nlohmann::json j;
  j["bounds"] = {{"kp_rate", bounds.kp_rate},
                 {"tdelta_rate", bounds.tdelta_rate},
                 {"ndelta_rate", bounds.ndelta_rate}};
  if (kind == Kind::ScriptedExpert) {
    j["kind"] = "scripted_expert";
    j["expert"] = expert.to_json();
  } else if (kind == Kind::Linear) {
    j["kind"] = "linear";
    j["linear"] = {{"w", matrix_json(lin_w)}, {"b", vector_json(lin_b)}};
  } else {
    j["kind"] = "learned";
    j["dims"] = {{"in", net->in_dim()}, {"out", net->out_dim()}};
    j["net"] = net->to_json();
    j["normalization"] = {{"mean", vector_json(obs_mean)},
                          {"scale", vector_json(obs_scale)},
                          {"action_mean", vector_json(act_mean)},
                          {"action_scale", vector_json(act_scale)}};
  }
  j["provenance"] = provenance.is_null() ? nlohmann::json::object() : provenance;
  return j;
}

Policy Policy::from_json(const nlohmann::json& j) {
  Policy p;
  const std::string kind = j.at("kind").get<std::string>();
  p.bounds.kp_rate = j.at("bounds").value("kp_rate", p.bounds.kp_rate);
  p.bounds.tdelta_rate = j.at("bounds").value("tdelta_rate", p.bounds.tdelta_rate);
  p.bounds.ndelta_rate = j.at("bounds").value("ndelta_rate", p.bounds.ndelta_rate);
  if (kind == "scripted_expert") {
    p.kind = Kind::ScriptedExpert;
    p.expert = ExpertConfig::from_json(j.at("expert"));
  } else if (kind == "linear") {
    p.kind = Kind::Linear;
    p.lin_w = matrix_from(j.at("linear").at("w"));
    p.lin_b = vector_from(j.at("linear").at("b"));
  } else if (kind == "learned") {
    p.kind = Kind::Learned;
    p.net = Mlp::from_json(j.at("net"));
    p.obs_mean = vector_from(j.at("normalization").at("mean"));
    p.obs_scale = vector_from(j.at("normalization").at("scale"));
    p.act_mean = vector_from(j.at("normalization").at("action_mean"));
    p.act_scale = vector_from(j.at("normalization").at("action_scale"));
  } else {
    throw std::invalid_argument("unknown policy kind: " + kind);
  }
  if (j.contains("provenance")) p.provenance = j.at("provenance");
  return p;
}

void Policy::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write policy: " + path);
  out << to_json().dump(2) << "\n";
}

Policy Policy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy: " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

Policy scripted_expert(const ExpertConfig& config, const sim::ActionBounds& bounds) {
  Policy p;
  p.kind = Policy::Kind::ScriptedExpert;
  p.expert = config;
  p.bounds = bounds;
  return p;
}

Policy linear_policy(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                     const sim::ActionBounds& bounds) {
  if (w.rows() != sim::Action::kDim || w.cols() != sim::Observation::kDim ||
      b.size() != sim::Action::kDim)
    throw std::invalid_argument("linear_policy: weight dimensions must be action x observation");
  Policy p;
  p.kind = Policy::Kind::Linear;
  p.lin_w = w;
  p.lin_b = b;
  p.bounds = bounds;
  return p;
}

double beta_schedule(int episode, double beta_horizon) {
  if (beta_horizon <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - static_cast<double>(episode) / beta_horizon);
}

void collect(sim::CutEnv& env, const Policy& expert, const Policy* learner, double beta,
             const gp::GpModel::SampleCache* gp_cache, std::uint64_t seed,
             DemoBuffer& buffer) {
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("collect: beta outside [0, 1]");
  if (beta < 1.0 && learner == nullptr)
    throw std::invalid_argument("collect: beta < 1 requires a learner");

  sim::Observation obs = env.reset(Rng::derive(seed, 0x657049ULL).next_u64());
  std::vector<Vec3> correction;
  if (gp_cache) correction = gp_cache->draw(Rng::derive(seed, 0x6470ULL).next_u64());
  Rng mix = Rng::derive(seed, 0x6d6978ULL);

  const std::size_t begin = buffer.size();
  const int max_steps =
      static_cast<int>(std::ceil(env.config().horizon / env.config().dt)) + 1;
  for (int k = 0; k < max_steps && !env.done(); ++k) {
    const sim::Action label = expert.act(obs);
    sim::Observation stored = obs;
    if (!correction.empty())
      stored = sim::augment_observation(
          stored, correction[std::min<std::size_t>(k, correction.size() - 1)]);
    buffer.observations.push_back(stored.vec());
    buffer.actions.push_back(label.vec());

    const bool expert_drives = beta >= 1.0 || mix.bernoulli(beta);
    const sim::Action drive = expert_drives ? label : learner->act(obs);
    obs = env.step(drive).obs;
  }
  buffer.episodes.push_back({begin, buffer.size(), seed, beta});
}

void collect(sim::CutEnv& env, const Policy& expert, const Policy* learner, double beta,
             const gp::GpModel* gp_model, std::uint64_t seed, DemoBuffer& buffer) {
  if (gp_model == nullptr) {
    collect(env, expert, learner, beta, static_cast<const gp::GpModel::SampleCache*>(nullptr),
            seed, buffer);
    return;
  }
  const int n_steps = static_cast<int>(std::ceil(env.config().horizon / env.config().dt));
  std::vector<double> times(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) times[k] = k * env.config().dt;
  const auto cache = gp_model->make_sample_cache(times);
  collect(env, expert, learner, beta, &cache, seed, buffer);
}

Policy train_bc(const DemoBuffer& buffer, const Policy& init, const ImitationConfig& config) {
  if (buffer.size() == 0) throw std::invalid_argument("train_bc: empty buffer");
  const int in_dim = sim::Observation::kDim;
  const int out_dim = sim::Action::kDim;
  const auto n = static_cast<Eigen::Index>(buffer.size());

  Eigen::MatrixXd obs_raw(in_dim, n), y(out_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    obs_raw.col(i) = buffer.observations[i];
    y.col(i) = buffer.actions[i];
  }

  // Normalization is frozen the first time a policy is trained; later
  // DAgger rounds keep the mapping the warm-started net was trained under.
  Policy out = init;
  out.kind = Policy::Kind::Learned;
  if (out.obs_scale.size() != in_dim) {
    out.obs_mean = obs_raw.rowwise().mean();
    Eigen::VectorXd var =
        (obs_raw.colwise() - Eigen::VectorXd(out.obs_mean)).array().square().rowwise().mean();
    out.obs_scale = var.array().sqrt().max(1e-8);
  }
  // Whiten the action targets as well; raw gain rates are two orders of
  // magnitude larger than the feed and DoC rates and would own the loss.
  if (out.act_scale.size() != out_dim) {
    out.act_mean = y.rowwise().mean();
    Eigen::VectorXd act_var =
        (y.colwise() - Eigen::VectorXd(out.act_mean)).array().square().rowwise().mean();
    out.act_scale = act_var.array().sqrt().max(1e-8);
  }

  Rng rng = Rng::derive(config.seed, 0x747261696eULL);
  if (!out.net || out.net->in_dim() != in_dim || out.net->out_dim() != out_dim)
    out.net = Mlp(in_dim, config.hidden, out_dim, rng);

  const Eigen::MatrixXd x = (obs_raw.colwise() - Eigen::VectorXd(out.obs_mean))
                                .array()
                                .colwise() /
                            Eigen::ArrayXd(out.obs_scale.array());
  const Eigen::MatrixXd y_white = (y.colwise() - Eigen::VectorXd(out.act_mean))
                                      .array()
                                      .colwise() /
                                  Eigen::ArrayXd(out.act_scale.array());

  std::vector<double> losses;
  const int epochs = config.algorithm == ImitationConfig::Algo::BC ? config.bc_epochs
                                                                   : config.epochs_per_round;
  for (int e = 0; e < epochs; ++e)
    losses.push_back(out.net->train_epoch(x, y_white, config.lr, config.batch, rng));

  out.provenance["loss_history"] = losses;
  out.provenance["pairs"] = static_cast<int>(n);
  return out;
}

namespace {

// Shared warm start: pre-train the learner on clean expert rollouts until its
// clean-environment reward is within tolerance of the expert's.
Policy warmstart(const sim::EnvConfig& base, const Policy& expert,
                 const ImitationConfig& config) {
  sim::CutEnv env(base);
  DemoBuffer clean;
  for (int i = 0; i < config.warmstart_episodes; ++i)
    collect(env, expert, nullptr, 1.0, static_cast<const gp::GpModel::SampleCache*>(nullptr),
            Rng::derive(config.seed, 0x7761726dULL + i).next_u64(), clean);

  const double expert_reward = mean_probe_reward(base, expert, 3, config.seed);

  ImitationConfig round = config;
  round.algorithm = ImitationConfig::Algo::DAgger;  // use epochs_per_round granularity
  round.epochs_per_round = config.warmstart_epochs_per_round;

  Policy learner;
  learner.bounds = expert.bounds;
  double reward = -std::numeric_limits<double>::infinity();
  int rounds = 0;
  for (; rounds < config.warmstart_rounds; ++rounds) {
    learner = train_bc(clean, learner, round);
    reward = mean_probe_reward(base, learner, 3, config.seed);
    if (std::abs(reward - expert_reward) <=
        config.warmstart_tolerance * std::abs(expert_reward))
      break;
  }
  learner.provenance["warmstart"] = {{"rounds", rounds + 1},
                                     {"expert_reward", expert_reward},
                                     {"learner_reward", reward}};
  return learner;
}

nlohmann::json episode_provenance(const DemoBuffer& buffer) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : buffer.episodes)
    out.push_back({{"seed", e.seed},
                   {"beta", e.beta},
                   {"pairs", static_cast<int>(e.end - e.begin)}});
  return out;
}

}  // namespace

Policy run_bc(const sim::EnvConfig& base_env, const Policy& expert, const gp::GpModel* gp_model,
              const ImitationConfig& config) {
  const sim::EnvConfig base = strip_augmentation(base_env);
  sim::CutEnv env(base);

  std::optional<gp::GpModel::SampleCache> cache;
  if (gp_model) {
    const int n_steps = static_cast<int>(std::ceil(base.horizon / base.dt));
    std::vector<double> times(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) times[k] = k * base.dt;
    cache = gp_model->make_sample_cache(times);
  }

  Policy learner = warmstart(base, expert, config);

  DemoBuffer buffer;
  for (int i = 0; i < config.episodes; ++i)
    collect(env, expert, nullptr, 1.0, cache ? &*cache : nullptr,
            Rng::derive(config.seed, 0x6263ULL * 1000 + i).next_u64(), buffer);

  ImitationConfig bc = config;
  bc.algorithm = ImitationConfig::Algo::BC;
  Policy trained = train_bc(buffer, learner, bc);
  trained.provenance["algorithm"] = "bc";
  trained.provenance["episodes"] = episode_provenance(buffer);
  trained.provenance["seed"] = config.seed;
  trained.provenance["warmstart"] = learner.provenance.value("warmstart", nlohmann::json());
  return trained;
}

Policy run_dagger(const sim::EnvConfig& base_env, const Policy& expert,
                  const gp::GpModel* gp_model, const ImitationConfig& config) {
  const sim::EnvConfig base = strip_augmentation(base_env);
  sim::CutEnv env(base);

  std::optional<gp::GpModel::SampleCache> cache;
  if (gp_model) {
    const int n_steps = static_cast<int>(std::ceil(base.horizon / base.dt));
    std::vector<double> times(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) times[k] = k * base.dt;
    cache = gp_model->make_sample_cache(times);
  }

  Policy learner = warmstart(base, expert, config);
  const nlohmann::json warm_meta = learner.provenance.value("warmstart", nlohmann::json());

  ImitationConfig round = config;
  round.algorithm = ImitationConfig::Algo::DAgger;

  DemoBuffer buffer;
  for (int i = 0; i < config.episodes; ++i) {
    const double beta = beta_schedule(i, config.beta_horizon);
    collect(env, expert, &learner, beta, cache ? &*cache : nullptr,
            Rng::derive(config.seed, 0x6461ULL * 1000 + i).next_u64(), buffer);
    learner = train_bc(buffer, learner, round);
  }
  learner.provenance["algorithm"] = "dagger";
  learner.provenance["episodes"] = episode_provenance(buffer);
  learner.provenance["seed"] = config.seed;
  learner.provenance["warmstart"] = warm_meta;
  return learner;
}

}  // namespace cutkit::il
