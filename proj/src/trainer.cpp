#include "maad/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <thread>

#include "maad/errors.hpp"

namespace maad {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Random stream ids under one run seed.
enum Stream : std::uint64_t {
  kPolicyInit = 1,
  kValueInit,
  kIdmInit,
  kDiscInit,
  kIdmFit,
  kDiscUpdate,
  kPolicyUpdate,
  kSubsample,
  kWorkerBase = 100,
};

std::uint64_t subsample_seed(std::uint64_t run_seed, std::size_t traj) {
  Rng rng = make_rng(run_seed, kSubsample + 1000 * (traj + 1));
  return rng();
}

Mat columns(const Mat& m, const std::vector<Index>& idx) {
  Mat out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = m.col(idx[k]);
  return out;
}

Vec entries(const Vec& v, const std::vector<Index>& idx) {
  Vec out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = v[idx[k]];
  return out;
}

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

std::vector<Index> draw_indices(Index n, Index count, Rng& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> out(static_cast<std::size_t>(count));
  for (auto& i : out) i = pick(rng);
  return out;
}

double mean_and_std(const Vec& x, double& std_out) {
  const double mean = x.mean();
  std_out = std::sqrt((x.array() - mean).square().mean());
  return mean;
}

}  // namespace

std::string to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::kNone: return "none";
    case RegularizerKind::kIdm: return "idm";
    case RegularizerKind::kTrueActions: return "true_actions";
  }
  return "none";
}

RegularizerKind regularizer_from_string(const std::string& name) {
  if (name == "none") return RegularizerKind::kNone;
  if (name == "idm") return RegularizerKind::kIdm;
  if (name == "true_actions") return RegularizerKind::kTrueActions;
  throw ContractViolation("unknown regularizer '" + name + "'");
}

void TrainConfig::validate() const {
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(ppo_clip > 0.0 && ppo_clip < 1.0, "ppo_clip must lie in (0, 1)");
  require(ppo_epochs >= 1, "ppo_epochs must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(rollout_length >= 1, "rollout_length must be at least 1");
  require(lr > 0.0 && idm_lr > 0.0 && disc_lr > 0.0, "learning rates must be positive");
  require(clip_norm > 0.0, "clip_norm must be positive");
  require(lambda_reg >= 0.0, "lambda_reg must be non-negative");
  require(entropy_coef >= 0.0 && value_coef >= 0.0, "loss coefficients must be non-negative");
  require(workers >= 1, "workers must be at least 1");
  require(max_env_steps >= 1, "max_env_steps must be positive");
  require(!policy_hidden.empty() && !disc_hidden.empty(), "hidden layer lists must be non-empty");
  require(idm_components >= 1 && idm_hidden >= 1, "IDM needs at least one component and unit");
  require(replay_capacity >= 1, "replay_capacity must be positive");
  require(idm_holdout > 0.0 && idm_holdout < 1.0, "idm_holdout must lie in (0, 1)");
  require(idm_patience >= 1 && idm_max_epochs >= 1, "IDM patience and epochs must be positive");
  require(idm_epoch_batches >= 0, "idm_epoch_batches must be non-negative");
  require(idm_kl_samples >= 1, "idm_kl_samples must be positive");
  require(gp_coef >= 0.0 && disc_updates >= 0, "discriminator settings out of range");
  require(subsample_rate >= 1, "subsample_rate must be at least 1");
  require(sinkhorn_epsilon > 0.0 && sinkhorn_iters >= 1, "Sinkhorn settings out of range");
  require(ot_scale > 0.0, "ot_scale must be positive");
  require(bc_epochs >= 1 && bc_eval_every >= 1, "BC epochs must be positive");
  require(eval_episodes >= 1, "eval_episodes must be at least 1");
}

TrainConfig resolve_config(TrainConfig config, const EnvSpec& env) {
  env.validate();
  if (config.reward_backend == RewardBackend::kTm || config.reward_backend == RewardBackend::kOt) {
    require(config.rollout_length >= env.horizon,
            "trajectory-level backends need rollout_length of at least one episode");
    config.rollout_length -= config.rollout_length % env.horizon;
  }
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate_controller(const BatchController& controller, const EnvSpec& spec,
                               int n_episodes, std::uint64_t seed_base) {
  require(n_episodes >= 1, "evaluate: need at least one episode");
  const int sd = spec.state_dim();
  const auto n = static_cast<std::size_t>(n_episodes);
  std::vector<EnvState> states(n);
  EvalResult out;
  out.returns = Vec::Zero(n_episodes);
  out.trajectories.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    states[i] = env_reset(spec, seed_base + i);
    out.trajectories[i].states.resize(sd, spec.horizon + 1);
    out.trajectories[i].actions.resize(spec.action_dim(), spec.horizon);
    out.trajectories[i].states.col(0) = states[i].vector();
  }
  Mat batch(sd, n_episodes);
  for (int t = 0; t < spec.horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) batch.col(static_cast<Index>(i)) = states[i].vector();
    const Mat actions = controller(batch);
    require(actions.rows() == spec.action_dim() && actions.cols() == n_episodes,
            "evaluate: controller returned the wrong shape");
    for (std::size_t i = 0; i < n; ++i) {
      const StepResult r = env_step(spec, states[i], actions.col(static_cast<Index>(i)));
      out.returns[static_cast<Index>(i)] += task_reward(spec, r.state);
      out.trajectories[i].actions.col(t) = clip_action(spec, actions.col(static_cast<Index>(i)));
      out.trajectories[i].states.col(t + 1) = r.state.vector();
      states[i] = r.state;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.trajectories[i].ep_return = out.returns[static_cast<Index>(i)];
  out.mean_return = mean_and_std(out.returns, out.std_return);
  return out;
}

EvalResult evaluate(const GaussianPolicy& policy, const EnvSpec& spec, int n_episodes,
                    std::uint64_t seed_base) {
  return evaluate_controller([&](const Mat& s) { return policy.mean_net.forward(s); }, spec,
                             n_episodes, seed_base);
}

ExpertAnchor compute_anchor(const EnvSpec& spec, int episodes, std::uint64_t seed_base) {
  const auto expert = [&](const Mat& s) {
    Mat a(spec.action_dim(), s.cols());
    for (Index i = 0; i < s.cols(); ++i) a.col(i) = expert_action(spec, EnvState::from_vector(s.col(i)));
    return a;
  };
  const auto zero = [&](const Mat& s) { return Mat::Zero(spec.action_dim(), s.cols()).eval(); };
  ExpertAnchor anchor;
  anchor.episodes = episodes;
  anchor.seed_base = seed_base;
  anchor.expert_return = evaluate_controller(expert, spec, episodes, seed_base).mean_return;
  anchor.random_return = evaluate_controller(zero, spec, episodes, seed_base).mean_return;
  if (!(std::abs(anchor.expert_return - anchor.random_return) > 1e-12))
    throw DegenerateInput("compute_anchor: expert and zero-policy returns coincide");
  return anchor;
}

// ---------------------------------------------------------------------------
// Metrics CSV

std::string metrics_csv_header() {
  return "iteration,env_steps,mean_return,std_return,normalized_return,idm_nll,reg_kl,"
         "disc_loss,mean_tm_reward,mean_ot_reward";
}

std::string metrics_csv_row(const Metrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", m.iteration,
                static_cast<long long>(m.env_steps), m.mean_return, m.std_return,
                m.normalized_return, m.idm_nll, m.reg_kl, m.disc_loss, m.mean_tm_reward,
                m.mean_ot_reward);
  return buf;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(TrainConfig config, EnvSpec env, const std::vector<DemoTrajectory>& experts,
                 ExpertAnchor anchor)
    : config_(resolve_config(std::move(config), env)),
      env_(std::move(env)),
      anchor_(anchor),
      replay_(env_.state_dim(), env_.action_dim(), config_.replay_capacity),
      idm_rng_(make_rng(config_.seed, kIdmFit)),
      disc_rng_(make_rng(config_.seed, kDiscUpdate)),
      update_rng_(make_rng(config_.seed, kPolicyUpdate)) {
  if (experts.empty()) throw ContractViolation("Trainer: expert dataset is empty");
  const int sd = env_.state_dim(), ad = env_.action_dim();
  for (const auto& e : experts) {
    e.validate();
    require(e.states.rows() == sd, "Trainer: expert state dimension does not match the environment");
  }
  const bool true_actions = config_.regularizer == RegularizerKind::kTrueActions;
  if (true_actions)
    for (const auto& e : experts)
      if (!e.has_actions())
        throw ContractViolation("Trainer: the true-action regularizer needs expert actions");

  expert_obs_.reserve(experts.size());
  for (const auto& e : experts) expert_obs_.push_back({e.states, Mat(ad, 0), e.ep_return});

  // Adversarial learners see a fixed subsample of expert pairs; the
  // trajectory-level learners keep every pair.
  const bool sparse = config_.reward_backend == RewardBackend::kAil ||
                      config_.reward_backend == RewardBackend::kNone;
  for (std::size_t i = 0; i < experts.size(); ++i) {
    const DemoTrajectory& src = true_actions ? experts[i] : expert_obs_[i];
    std::vector<Transition> pairs =
        sparse ? subsample_pairs(src, config_.subsample_rate, subsample_seed(config_.seed, i))
               : all_pairs(src);
    reg_pairs_.insert(reg_pairs_.end(), pairs.begin(), pairs.end());
  }
  if (config_.reward_backend == RewardBackend::kAil) disc_pairs_ = reg_pairs_;
  require(!reg_pairs_.empty(), "Trainer: no expert transitions after subsampling");

  Rng init_p = make_rng(config_.seed, kPolicyInit);
  policy_ = GaussianPolicy(sd, ad, config_.policy_hidden, init_p, config_.init_log_std);
  Rng init_v = make_rng(config_.seed, kValueInit);
  std::vector<int> vsizes{sd};
  vsizes.insert(vsizes.end(), config_.policy_hidden.begin(), config_.policy_hidden.end());
  vsizes.push_back(1);
  value_net_ = Mlp::random(std::move(vsizes), init_v);
  policy_opt_ = make_adam(policy_.num_params() + value_net_.num_params(), config_.lr);

  Rng init_i = make_rng(config_.seed, kIdmInit);
  idm_ = MdnIdm(sd, ad, config_.idm_components, config_.idm_hidden, init_i);
  idm_opt_ = make_adam(idm_.num_params(), config_.idm_lr);
  Rng init_d = make_rng(config_.seed, kDiscInit);
  disc_ = Discriminator(sd, config_.disc_hidden, init_d);
  disc_opt_ = make_adam(disc_.net.num_params(), config_.disc_lr);

  workers_.resize(static_cast<std::size_t>(config_.workers));
  for (std::size_t w = 0; w < workers_.size(); ++w)
    workers_[w].rng = make_rng(config_.seed, kWorkerBase + w);
}

void Trainer::fill_trajectory_rewards(RolloutBatch& batch, Index begin, Index end,
                                      std::int64_t episode_index) const {
  const Index len = end - begin;
  ObsTrajectory agent;
  agent.states.resize(env_.state_dim(), len + 1);
  agent.states.leftCols(len) = batch.states.middleCols(begin, len);
  agent.states.col(len) = batch.next_states.col(end - 1);
  const ObsTrajectory expert{
      expert_obs_[static_cast<std::size_t>(episode_index) % expert_obs_.size()].states};
  const Vec r = config_.reward_backend == RewardBackend::kTm
                    ? tm_rewards(agent, expert)
                    : ot_rewards(agent, expert, config_.sinkhorn_epsilon, config_.sinkhorn_iters,
                                 config_.ot_scale);
  // Transition t is credited with the score of the state it arrives in.
  for (Index t = 0; t < len; ++t) batch.rewards[begin + t] = t + 1 < r.size() ? r[t + 1] : 0.0;
}

RolloutBatch Trainer::collect_worker(Worker& w) const {
  const Index n = config_.rollout_length;
  const int sd = env_.state_dim(), ad = env_.action_dim();
  RolloutBatch b;
  b.states.resize(sd, n);
  b.actions.resize(ad, n);
  b.applied_actions.resize(ad, n);
  b.next_states.resize(sd, n);
  b.rewards = Vec::Zero(n);
  b.dones.assign(static_cast<std::size_t>(n), false);

  const bool per_episode = config_.reward_backend == RewardBackend::kTm ||
                           config_.reward_backend == RewardBackend::kOt;
  Index episode_begin = 0;
  for (Index t = 0; t < n; ++t) {
    if (w.needs_reset) {
      w.state = env_reset(env_, w.rng);
      w.needs_reset = false;
      episode_begin = t;
    }
    const Vec s = w.state.vector();
    const Vec a = policy_.sample(s, w.rng);
    const StepResult r = env_step(env_, w.state, a);
    b.states.col(t) = s;
    b.actions.col(t) = a;
    b.applied_actions.col(t) = clip_action(env_, a);
    b.next_states.col(t) = r.state.vector();
    w.state = r.state;
    if (r.done) {
      b.dones[static_cast<std::size_t>(t)] = true;
      w.needs_reset = true;
      if (per_episode) fill_trajectory_rewards(b, episode_begin, t + 1, w.episode_index);
      ++w.episode_index;
    }
  }
  if (per_episode && !w.needs_reset)
    throw ContractViolation("collect: trajectory-level backend needs whole episodes per rollout");

  b.logprobs = policy_.logprob(b.states, b.actions);
  b.values = value_net_.forward(b.states).row(0).transpose();
  b.last_value = w.needs_reset ? 0.0 : value_net_.apply(w.state.vector())[0];
  return b;
}

std::vector<RolloutBatch> Trainer::collect() {
  std::vector<RolloutBatch> out(workers_.size());
  if (workers_.size() == 1) {
    out[0] = collect_worker(workers_[0]);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers_.size());
    for (std::size_t w = 0; w < workers_.size(); ++w)
      threads.emplace_back([&, w] {
        try {
          out[w] = collect_worker(workers_[w]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  if (config_.reward_backend == RewardBackend::kAil)
    for (auto& b : out) b.rewards = ail_rewards(disc_, b.states, b.next_states);
  return out;
}

Vec Trainer::objective_gradient(const RolloutBatch& batch, const Vec& advantages,
                                const Vec& returns, const std::vector<Index>& idx,
                                const std::vector<Index>& reg_idx, const RegTargets* targets,
                                double* reg_value) const {
  const Index np = policy_.num_params();
  Vec grad(np + value_net_.num_params());
  const Mat s = columns(batch.states, idx);
  const Vec adv = normalize_advantages(entries(advantages, idx));
  const LossGrad pg = ppo_policy_loss(policy_, entries(batch.logprobs, idx), s,
                                      columns(batch.actions, idx), adv, config_.ppo_clip);
  grad.head(np) = pg.grad;
  if (config_.entropy_coef > 0.0)
    grad.segment(np - policy_.log_std.size(), policy_.log_std.size()).array() -= config_.entropy_coef;

  if (config_.lambda_reg > 0.0 && !reg_idx.empty()) {
    LossGrad rg;
    if (config_.regularizer == RegularizerKind::kIdm) {
      require(targets != nullptr, "objective_gradient: IDM targets missing");
      rg = reg_loss(policy_, *targets, reg_idx);
    } else if (config_.regularizer == RegularizerKind::kTrueActions) {
      Mat es(env_.state_dim(), static_cast<Index>(reg_idx.size()));
      Mat ea(env_.action_dim(), static_cast<Index>(reg_idx.size()));
      for (std::size_t k = 0; k < reg_idx.size(); ++k) {
        const Transition& tr = reg_pairs_[static_cast<std::size_t>(reg_idx[k])];
        es.col(static_cast<Index>(k)) = tr.s;
        ea.col(static_cast<Index>(k)) = tr.a;
      }
      rg = bc_loss(policy_, es, ea);
    }
    if (rg.grad.size() == np) {
      grad.head(np) += config_.lambda_reg * rg.grad;
      if (reg_value) *reg_value = rg.value;
    }
  }
  const LossGrad vg = value_loss(value_net_, s, entries(returns, idx));
  grad.tail(value_net_.num_params()) = config_.value_coef * vg.grad;
  return grad;
}

Trainer::UpdateStats Trainer::update_policy(const std::vector<RolloutBatch>& rollouts) {
  require(rollouts.size() == workers_.size(), "update_policy: one rollout per worker expected");
  std::vector<Advantages> adv(rollouts.size());
  for (std::size_t w = 0; w < rollouts.size(); ++w)
    adv[w] = gae(rollouts[w].rewards, rollouts[w].values, rollouts[w].dones, rollouts[w].last_value,
                 config_.gamma, config_.gae_lambda);

  const bool regularize = config_.lambda_reg > 0.0 && config_.regularizer != RegularizerKind::kNone;
  RegTargets targets;
  if (regularize && config_.regularizer == RegularizerKind::kIdm)
    targets = make_reg_targets(idm_, reg_pairs_, update_rng_, config_.idm_kl_samples);

  const Index n = rollouts[0].size();
  const Index bs = std::min<Index>(config_.batch_size, n);
  const Index np = policy_.num_params();
  const auto n_reg = static_cast<Index>(reg_pairs_.size());
  UpdateStats stats;
  int reg_count = 0;
  std::vector<std::vector<Index>> order(rollouts.size(), iota_indices(n));
  Vec params(policy_opt_.first_moment.size());

  for (int epoch = 0; epoch < config_.ppo_epochs; ++epoch) {
    for (auto& o : order) std::shuffle(o.begin(), o.end(), update_rng_);
    for (Index start = 0; start < n; start += bs) {
      const Index len = std::min(bs, n - start);
      Vec grad = Vec::Zero(params.size());
      for (std::size_t w = 0; w < rollouts.size(); ++w) {
        const std::vector<Index> idx(order[w].begin() + start, order[w].begin() + start + len);
        std::vector<Index> reg_idx;
        if (regularize) reg_idx = draw_indices(n_reg, bs, update_rng_);
        double reg = kNaN;
        grad += objective_gradient(rollouts[w], adv[w].advantages, adv[w].returns, idx, reg_idx,
                                   regularize ? &targets : nullptr, &reg);
        if (std::isfinite(reg)) {
          stats.reg_kl += reg;
          ++reg_count;
        }
      }
      grad /= static_cast<double>(rollouts.size());
      clip_global_norm(grad, config_.clip_norm);
      params << policy_.packed(), value_net_.params();
      adam_step(policy_opt_, params, grad);
      policy_.unpack(params.head(np));
      value_net_.params() = params.tail(value_net_.num_params());
    }
  }
  stats.reg_kl = reg_count > 0 ? stats.reg_kl / reg_count : kNaN;
  return stats;
}

double Trainer::update_discriminator(const std::vector<RolloutBatch>& rollouts) {
  TripletBatch agent;
  Index total = 0;
  for (const auto& b : rollouts) total += b.size();
  agent.s.resize(env_.state_dim(), total);
  agent.s_next.resize(env_.state_dim(), total);
  Index off = 0;
  for (const auto& b : rollouts) {
    agent.s.middleCols(off, b.size()) = b.states;
    agent.s_next.middleCols(off, b.size()) = b.next_states;
    off += b.size();
  }
  const TripletBatch expert_all = to_batch(disc_pairs_);
  const Index bs = std::min<Index>(config_.batch_size, total);
  std::vector<Index> order = iota_indices(total);
  double loss_sum = 0.0;
  int steps = 0;
  for (int pass = 0; pass < config_.disc_updates; ++pass) {
    std::shuffle(order.begin(), order.end(), disc_rng_);
    for (Index start = 0; start < total; start += bs) {
      const Index len = std::min(bs, total - start);
      const std::vector<Index> idx(order.begin() + start, order.begin() + start + len);
      const std::vector<Index> eidx = draw_indices(expert_all.size(), len, disc_rng_);
      const TripletBatch a{columns(agent.s, idx), Mat(), columns(agent.s_next, idx)};
      const TripletBatch e{columns(expert_all.s, eidx), Mat(), columns(expert_all.s_next, eidx)};
      const DiscLoss dl = disc_loss(disc_, e, a, config_.gp_coef, disc_rng_);
      adam_step(disc_opt_, disc_.net.params(), dl.grad);
      loss_sum += dl.total;
      ++steps;
    }
  }
  return steps > 0 ? loss_sum / steps : kNaN;
}

Metrics Trainer::train_iteration() {
  const auto t0 = std::chrono::steady_clock::now();
  Metrics m;
  m.iteration = ++iteration_;
  m.idm_nll = m.disc_loss = m.mean_tm_reward = m.mean_ot_reward = kNaN;

  // (1) rollouts scored by the surrogate reward
  const std::vector<RolloutBatch> rollouts = collect();

  // (2) replay
  for (const auto& b : rollouts)
    for (Index t = 0; t < b.size(); ++t)
      replay_.push(Transition{b.states.col(t), b.applied_actions.col(t), b.next_states.col(t)});

  // (3) inverse dynamics model
  if (config_.regularizer == RegularizerKind::kIdm && config_.lambda_reg > 0.0) {
    IdmFitConfig fc;
    fc.batch_size = config_.batch_size;
    fc.holdout_fraction = config_.idm_holdout;
    fc.tol = config_.idm_tol;
    fc.patience = config_.idm_patience;
    fc.max_epochs = config_.idm_max_epochs;
    fc.epoch_batches = config_.idm_epoch_batches;
    m.idm_nll = idm_fit(idm_, idm_opt_, replay_, fc, idm_rng_).heldout_nll;
  }

  // (4) policy
  m.reg_kl = update_policy(rollouts).reg_kl;

  // (5) discriminator
  if (config_.reward_backend == RewardBackend::kAil && config_.disc_updates > 0)
    m.disc_loss = update_discriminator(rollouts);

  double reward_sum = 0.0;
  Index reward_count = 0;
  for (const auto& b : rollouts) {
    reward_sum += b.rewards.sum();
    reward_count += b.size();
  }
  if (config_.reward_backend == RewardBackend::kTm) m.mean_tm_reward = reward_sum / reward_count;
  if (config_.reward_backend == RewardBackend::kOt) m.mean_ot_reward = reward_sum / reward_count;

  env_steps_ += static_cast<std::int64_t>(config_.workers) * config_.rollout_length;
  m.env_steps = env_steps_;
  const EvalResult ev = evaluate(policy_, env_, config_.eval_episodes, config_.eval_seed_base);
  m.mean_return = ev.mean_return;
  m.std_return = ev.std_return;
  m.normalized_return = anchor_.normalize(ev.mean_return);
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

std::vector<Metrics> Trainer::run(const std::function<void(const Metrics&)>& on_row) {
  std::vector<Metrics> rows;
  while (!finished()) {
    rows.push_back(train_iteration());
    if (on_row) on_row(rows.back());
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Behavioral cloning

std::vector<Metrics> train_bc(const TrainConfig& config, const EnvSpec& env,
                              const std::vector<DemoTrajectory>& experts,
                              const ExpertAnchor& anchor, GaussianPolicy* trained,
                              const std::function<void(const Metrics&)>& on_row) {
  config.validate();
  env.validate();
  std::vector<Transition> pairs;
  for (const auto& e : experts) {
    e.validate();
    if (!e.has_actions()) throw ContractViolation("train_bc: demonstrations carry no actions");
    const auto p = all_pairs(e);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  require(!pairs.empty(), "train_bc: no demonstration pairs");
  const TripletBatch data = to_batch(pairs);

  Rng init = make_rng(config.seed, kPolicyInit);
  GaussianPolicy policy(env.state_dim(), env.action_dim(), config.policy_hidden, init,
                        config.init_log_std);
  AdamState opt = make_adam(policy.num_params(), config.lr);
  Rng rng = make_rng(config.seed, kPolicyUpdate);
  std::vector<Index> order = iota_indices(data.size());
  const Index bs = std::min<Index>(config.batch_size, data.size());
  std::vector<Metrics> rows;
  std::int64_t samples = 0;
  auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.bc_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < data.size(); start += bs) {
      const Index len = std::min(bs, data.size() - start);
      const std::vector<Index> idx(order.begin() + start, order.begin() + start + len);
      LossGrad lg = bc_loss(policy, columns(data.s, idx), columns(data.a, idx));
      clip_global_norm(lg.grad, config.clip_norm);
      Vec theta = policy.packed();
      adam_step(opt, theta, lg.grad);
      policy.unpack(theta);
      samples += len;
    }
    if (epoch % config.bc_eval_every == 0 || epoch == config.bc_epochs) {
      Metrics m;
      m.iteration = epoch;
      m.env_steps = samples;
      m.idm_nll = m.reg_kl = m.disc_loss = m.mean_tm_reward = m.mean_ot_reward = kNaN;
      const EvalResult ev = evaluate(policy, env, config.eval_episodes, config.eval_seed_base);
      m.mean_return = ev.mean_return;
      m.std_return = ev.std_return;
      m.normalized_return = anchor.normalize(ev.mean_return);
      const auto t1 = std::chrono::steady_clock::now();
      m.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
      t0 = t1;
      rows.push_back(m);
      if (on_row) on_row(m);
    }
  }
  if (trained) *trained = std::move(policy);
  return rows;
}

}  // namespace maad
