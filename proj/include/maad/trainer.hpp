#pragma once

// On-policy imitation learner: rollouts scored by a surrogate-reward backend,
// a replay buffer feeding the inverse dynamics model, PPO updates of the
// policy with an optional action regularizer, and a discriminator step for
// the adversarial backend.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "maad/agent.hpp"
#include "maad/data.hpp"
#include "maad/envs.hpp"
#include "maad/idm.hpp"
#include "maad/rewards.hpp"

namespace maad {

enum class RegularizerKind {
  kNone,         // plain surrogate-reward learner
  kIdm,          // KL(p_idm(a | s, s') || pi(a | s)) on expert transitions
  kTrueActions,  // behavioral cloning on expert actions
};

std::string to_string(RegularizerKind kind);
RegularizerKind regularizer_from_string(const std::string& name);

struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double ppo_clip = 0.2;
  int ppo_epochs = 6;
  int batch_size = 64;
  int rollout_length = 2048;
  double lr = 1e-4;
  double clip_norm = 0.5;
  double lambda_reg = 1.0;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  int workers = 1;
  std::uint64_t seed = 0;
  RewardBackend reward_backend = RewardBackend::kAil;
  RegularizerKind regularizer = RegularizerKind::kIdm;
  std::int64_t max_env_steps = 300000;
  std::vector<int> policy_hidden{128, 128};
  double init_log_std = 0.0;

  // Inverse dynamics model.
  int idm_components = 1;
  int idm_hidden = 128;
  double idm_lr = 1e-4;
  Index replay_capacity = ReplayBuffer::kDefaultCapacity;
  double idm_holdout = 0.1;
  double idm_tol = 1e-3;
  int idm_patience = 3;
  int idm_max_epochs = 50;
  Index idm_epoch_batches = 32;
  int idm_kl_samples = 128;

  // Adversarial backend.
  std::vector<int> disc_hidden{128, 128};
  double disc_lr = 1e-4;
  double gp_coef = 10.0;
  int disc_updates = 1;
  int subsample_rate = 20;

  // Transport backend.
  double sinkhorn_epsilon = 0.01;
  int sinkhorn_iters = 100;
  double ot_scale = 20.0;

  // Behavioral cloning baseline.
  int bc_epochs = 200;
  int bc_eval_every = 10;

  int eval_episodes = 50;
  std::uint64_t eval_seed_base = 1000000;

  /// Throws ContractViolation on out-of-range values.
  void validate() const;
};

/// Applies environment-dependent adjustments: for the trajectory-level
/// backends (tm, ot) rollout_length is rounded down to whole episodes.
TrainConfig resolve_config(TrainConfig config, const EnvSpec& env);

/// Normalization anchor: scripted-expert and zero-action returns on the
/// evaluation seeds.
struct ExpertAnchor {
  double expert_return = 0.0;
  double random_return = 0.0;
  int episodes = 50;
  std::uint64_t seed_base = 1000000;

  double normalize(double ret) const {
    return (ret - random_return) / (expert_return - random_return);
  }
};

ExpertAnchor compute_anchor(const EnvSpec& spec, int episodes, std::uint64_t seed_base);

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  Vec returns;
  std::vector<DemoTrajectory> trajectories;
};

/// Maps a batch of states (columns) to actions (columns).
using BatchController = std::function<Mat(const Mat& states)>;

/// Runs `n_episodes` episodes in lockstep from env_reset(spec, seed_base + i).
EvalResult evaluate_controller(const BatchController& controller, const EnvSpec& spec,
                               int n_episodes, std::uint64_t seed_base);

/// Deterministic (mean-action) evaluation of a policy.
EvalResult evaluate(const GaussianPolicy& policy, const EnvSpec& spec, int n_episodes = 50,
                    std::uint64_t seed_base = 1000000);

struct Metrics {
  int iteration = 0;
  std::int64_t env_steps = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double normalized_return = 0.0;
  double idm_nll = 0.0;
  double reg_kl = 0.0;
  double disc_loss = 0.0;
  double mean_tm_reward = 0.0;
  double mean_ot_reward = 0.0;
  double wall_time_s = 0.0;
};

/// Column names of the metrics CSV (wall-clock time lives in a separate file
/// so that metrics are reproducible bit for bit).
std::string metrics_csv_header();
std::string metrics_csv_row(const Metrics& m);

/// One worker's rollout, columns are time steps.
struct RolloutBatch {
  Mat states;
  Mat actions;          // sampled, pre-clipping
  Mat applied_actions;  // what the environment executed
  Mat next_states;
  Vec logprobs;
  Vec values;
  Vec rewards;
  std::vector<bool> dones;
  double last_value = 0.0;

  Index size() const { return states.cols(); }
};

class Trainer {
 public:
  Trainer(TrainConfig config, EnvSpec env, const std::vector<DemoTrajectory>& experts,
          ExpertAnchor anchor);

  /// Collect, push to replay, fit the IDM, update the policy, update the
  /// discriminator, evaluate.
  Metrics train_iteration();

  /// Runs iterations until max_env_steps; `on_row` sees every metrics row.
  std::vector<Metrics> run(const std::function<void(const Metrics&)>& on_row = {});

  bool finished() const { return env_steps_ >= config_.max_env_steps; }

  const TrainConfig& config() const { return config_; }
  const EnvSpec& env() const { return env_; }
  const GaussianPolicy& policy() const { return policy_; }
  GaussianPolicy& mutable_policy() { return policy_; }
  const Mlp& value_net() const { return value_net_; }
  const MdnIdm& idm() const { return idm_; }
  const Discriminator& discriminator() const { return disc_; }
  const ReplayBuffer& replay() const { return replay_; }
  std::int64_t env_steps() const { return env_steps_; }
  const std::vector<Transition>& reg_pairs() const { return reg_pairs_; }
  const std::vector<Transition>& disc_pairs() const { return disc_pairs_; }

  /// Rollout collection alone (exposed for tests).
  std::vector<RolloutBatch> collect();

  struct UpdateStats {
    double reg_kl = 0.0;
    double policy_loss = 0.0;
  };
  /// The PPO phase of an iteration on already-collected rollouts.
  UpdateStats update_policy(const std::vector<RolloutBatch>& rollouts);

  /// Gradient of the combined objective on one minibatch for a single
  /// worker, over packed [policy | value] parameters. Exposed for tests.
  Vec objective_gradient(const RolloutBatch& batch, const Vec& advantages, const Vec& returns,
                         const std::vector<Index>& idx, const std::vector<Index>& reg_idx,
                         const RegTargets* targets, double* reg_value = nullptr) const;

 private:
  struct Worker {
    Rng rng;
    EnvState state;
    std::int64_t episode_index = 0;
    bool needs_reset = true;
  };

  RolloutBatch collect_worker(Worker& w) const;
  void fill_trajectory_rewards(RolloutBatch& batch, Index begin, Index end,
                               std::int64_t episode_index) const;
  double update_discriminator(const std::vector<RolloutBatch>& rollouts);

  TrainConfig config_;
  EnvSpec env_;
  ExpertAnchor anchor_;
  std::vector<DemoTrajectory> expert_obs_;  // observation-only copies
  std::vector<Transition> reg_pairs_;
  std::vector<Transition> disc_pairs_;

  GaussianPolicy policy_;
  Mlp value_net_;
  AdamState policy_opt_;
  MdnIdm idm_;
  AdamState idm_opt_;
  Discriminator disc_;
  AdamState disc_opt_;
  ReplayBuffer replay_;

  std::vector<Worker> workers_;
  Rng idm_rng_;
  Rng disc_rng_;
  Rng update_rng_;
  int iteration_ = 0;
  std::int64_t env_steps_ = 0;
};

/// Supervised baseline: maximizes expert-action likelihood for bc_epochs
/// epochs, logging a metrics row every bc_eval_every epochs. The env_steps
/// column counts expert samples consumed.
std::vector<Metrics> train_bc(const TrainConfig& config, const EnvSpec& env,
                              const std::vector<DemoTrajectory>& experts,
                              const ExpertAnchor& anchor, GaussianPolicy* trained = nullptr,
                              const std::function<void(const Metrics&)>& on_row = {});

}  // namespace maad
