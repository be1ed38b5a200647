#pragma once

#include "cutkit/common.hpp"
#include "cutkit/gp.hpp"
#include "cutkit/sim.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cutkit::il {

// Small feedforward regressor (2 tanh hidden layers, linear output) trained
// by explicit backpropagation with Adam updates.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int in_dim, int hidden, int out_dim, Rng& init_rng);

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  // columns are samples
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;

  // One pass over the shuffled dataset in minibatches; returns mean MSE.
  double train_epoch(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lr,
                     int batch, Rng& shuffle_rng);

  int in_dim() const { return static_cast<int>(w1_.cols()); }
  int out_dim() const { return static_cast<int>(w3_.rows()); }

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  void adam_step(double lr);

  Eigen::MatrixXd w1_, w2_, w3_;
  Eigen::VectorXd b1_, b2_, b3_;
  // gradients and Adam moments
  Eigen::MatrixXd gw1_, gw2_, gw3_, mw1_, mw2_, mw3_, vw1_, vw2_, vw3_;
  Eigen::VectorXd gb1_, gb2_, gb3_, mb1_, mb2_, mb3_, vb1_, vb2_, vb3_;
  long adam_t_ = 0;
};

// Deterministic gain/feed/DoC schedule standing in for a trained expert:
// stiff approach at nominal feed while ramping DoC, then high feed and soft
// normal-axis gain once contact force is sensed. Feed and normal-axis gain
// back off proportionally to the sensed tool load above force_ref, so the
// policy reacts sharply to force fluctuations.
struct ExpertConfig {
  double contact_force = 1.0;    // N, |f| threshold for phase switch
  double doc_target = 1.5;       // mm
  double kp_high = 380.0;        // 1/s^2
  double kp_low_z = 60.0;        // 1/s^2, normal axis after impact
  double feed_approach = 0.0;    // t_delta target pre-contact
  double feed_cut = 0.5;         // t_delta target post-contact
  double force_ref = 3.0;        // N, backoff knee
  double force_backoff = 0.15;   // t_delta per N above force_ref
  double kp_force_slope = 30.0;  // 1/s^2 of normal-axis stiffening per N above force_ref
  double drive_gain = 6.0;       // 1/s, proportional rate toward targets

  nlohmann::json to_json() const;
  static ExpertConfig from_json(const nlohmann::json& j);
};

struct Policy {
  enum class Kind { ScriptedExpert, Learned, Linear };
  Kind kind = Kind::ScriptedExpert;

  ExpertConfig expert;
  std::optional<Mlp> net;
  // baked-in normalization: the net maps whitened observations to whitened
  // actions so no action dimension dominates the squared error
  Eigen::VectorXd obs_mean, obs_scale;
  Eigen::VectorXd act_mean, act_scale;
  Eigen::MatrixXd lin_w;  // Linear: action = clamp(W o + b)
  Eigen::VectorXd lin_b;

  sim::ActionBounds bounds;
  nlohmann::json provenance;

  // Pure function of (policy, observation); output clamped to rate bounds.
  sim::Action act(const sim::Observation& obs) const;
  sim::PolicyFn fn() const;

  nlohmann::json to_json() const;
  static Policy from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Policy load(const std::string& path);
};

Policy scripted_expert(const ExpertConfig& config, const sim::ActionBounds& bounds);

Policy linear_policy(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                     const sim::ActionBounds& bounds);

struct DemoBuffer {
  std::vector<Eigen::Matrix<double, sim::Observation::kDim, 1>> observations;  // corrected
  std::vector<Eigen::Matrix<double, sim::Action::kDim, 1>> actions;            // expert labels
  struct Episode {
    std::size_t begin = 0, end = 0;
    std::uint64_t seed = 0;
    double beta = 1.0;
  };
  std::vector<Episode> episodes;
  std::size_t size() const { return observations.size(); }
};

struct ImitationConfig {
  enum class Algo { BC, DAgger };
  Algo algorithm = Algo::DAgger;
  int episodes = 50;
  double lr = 1e-3;
  int batch = 64;
  double beta_horizon = 45.0;  // episodes over which beta decays 1 -> 0
  int epochs_per_round = 6;    // DAgger retraining after each episode
  int bc_epochs = 40;          // single BC training round
  int hidden = 64;
  int warmstart_episodes = 4;
  int warmstart_rounds = 20;
  int warmstart_epochs_per_round = 10;
  double warmstart_tolerance = 0.05;  // relative reward gap vs the expert
  std::uint64_t seed = 0;
};

// DAgger mixing probability: beta(0) = 1, beta(i >= horizon) = 0, linear.
double beta_schedule(int episode, double beta_horizon);

// Rolls one episode of the (already base-domain) environment. The env is
// driven per-step by the expert with probability beta, otherwise by the
// learner; stored pairs are always (o_e + d', expert(o_e)).
void collect(sim::CutEnv& env, const Policy& expert, const Policy* learner, double beta,
             const gp::GpModel::SampleCache* gp_cache, std::uint64_t seed, DemoBuffer& buffer);
void collect(sim::CutEnv& env, const Policy& expert, const Policy* learner, double beta,
             const gp::GpModel* gp_model, std::uint64_t seed, DemoBuffer& buffer);

// Mean-squared-error regression of expert actions onto corrected
// observations; returns the trained policy with per-epoch losses in
// provenance["loss_history"].
Policy train_bc(const DemoBuffer& buffer, const Policy& init, const ImitationConfig& config);

Policy run_bc(const sim::EnvConfig& base_env, const Policy& expert, const gp::GpModel* gp_model,
              const ImitationConfig& config);
Policy run_dagger(const sim::EnvConfig& base_env, const Policy& expert,
                  const gp::GpModel* gp_model, const ImitationConfig& config);

}  // namespace cutkit::il
