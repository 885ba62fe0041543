#include "maad/agent.hpp"

#include <algorithm>
#include <cmath>

#include "maad/errors.hpp"

namespace maad {

GaussianPolicy::GaussianPolicy(int state_dim, int action_dim, const std::vector<int>& hidden,
                               Rng& rng, double init_log_std) {
  std::vector<int> sizes{state_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_dim);
  mean_net = Mlp::random(std::move(sizes), rng, 0.01);
  log_std = Vec::Constant(action_dim, init_log_std);
}

Vec GaussianPolicy::packed() const {
  Vec theta(num_params());
  theta << mean_net.params(), log_std;
  return theta;
}

void GaussianPolicy::unpack(const Vec& theta) {
  require(theta.size() == num_params(), "GaussianPolicy::unpack: wrong parameter count");
  mean_net.params() = theta.head(mean_net.num_params());
  log_std = theta.tail(log_std.size()).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

DiagGaussian GaussianPolicy::dist(const Vec& s) const { return {mean_net.apply(s), log_std}; }

Vec GaussianPolicy::mean_action(const Vec& s) const { return mean_net.apply(s); }

Vec GaussianPolicy::sample(const Vec& s, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec a = mean_net.apply(s);
  for (Index d = 0; d < a.size(); ++d) a[d] += std::exp(log_std[d]) * normal(rng);
  return a;
}

Vec GaussianPolicy::logprob(const Mat& states, const Mat& actions) const {
  require(actions.rows() == action_dim() && actions.cols() == states.cols(),
          "GaussianPolicy::logprob: action shape mismatch");
  const Mat mu = mean_net.forward(states);
  const Vec inv_std = (-log_std.array()).exp();
  const double norm = log_std.sum() + kHalfLog2Pi * static_cast<double>(action_dim());
  Vec out(states.cols());
  for (Index i = 0; i < states.cols(); ++i)
    out[i] = -0.5 * ((actions.col(i) - mu.col(i)).array() * inv_std.array()).square().sum() - norm;
  return out;
}

Advantages gae(const Vec& rewards, const Vec& values, const std::vector<bool>& dones,
               double last_value, double gamma, double lam) {
  const Index T = rewards.size();
  if (values.size() != T || static_cast<Index>(dones.size()) != T)
    throw ContractViolation("gae: rewards, values and dones must have equal length");
  Advantages out;
  out.advantages.resize(T);
  double next_adv = 0.0;
  double next_value = last_value;
  for (Index t = T - 1; t >= 0; --t) {
    const double live = dones[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_adv = delta + gamma * lam * live * next_adv;
    out.advantages[t] = next_adv;
    next_value = values[t];
  }
  out.returns = out.advantages + values;
  return out;
}

Vec normalize_advantages(const Vec& adv) {
  if (adv.size() == 0) return adv;
  const double mean = adv.mean();
  const Vec centered = adv.array() - mean;
  const double std = std::sqrt(centered.squaredNorm() / static_cast<double>(adv.size()));
  return std > 1e-12 ? Vec(centered / std) : centered;
}

namespace {

// Chains per-sample d loss / d mean and the summed d loss / d log_std into a
// packed policy gradient.
Vec policy_grad(const GaussianPolicy& policy, const MlpCache& cache, const Mat& d_mean,
                const Vec& d_log_std) {
  Vec grad = Vec::Zero(policy.num_params());
  policy.mean_net.backward(cache, d_mean, grad.head(policy.mean_net.num_params()));
  grad.tail(policy.log_std.size()) = d_log_std;
  return grad;
}

}  // namespace

LossGrad ppo_policy_loss(const GaussianPolicy& policy, const Vec& old_logprobs, const Mat& states,
                         const Mat& actions, const Vec& advantages, double clip) {
  const Index n = states.cols();
  require(n > 0, "ppo_policy_loss: empty batch");
  require(actions.cols() == n && old_logprobs.size() == n && advantages.size() == n,
          "ppo_policy_loss: batch length mismatch");
  require(actions.rows() == policy.action_dim(), "ppo_policy_loss: action dimension mismatch");
  MlpCache cache;
  const Mat mu = policy.mean_net.forward(states, cache);
  const Vec inv_var = (-2.0 * policy.log_std.array()).exp();
  const double norm = policy.log_std.sum() + kHalfLog2Pi * static_cast<double>(policy.action_dim());
  const double inv_n = 1.0 / static_cast<double>(n);

  Mat d_mean(policy.action_dim(), n);
  Vec d_log_std = Vec::Zero(policy.action_dim());
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vec diff = actions.col(i) - mu.col(i);
    const double logp = -0.5 * diff.cwiseAbs2().dot(inv_var) - norm;
    const double ratio = std::exp(logp - old_logprobs[i]);
    if (!std::isfinite(ratio)) throw NumericError("ppo_policy_loss: non-finite ratio", ratio);
    const double a = advantages[i];
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * a;
    total -= std::min(unclipped, clipped);
    // The unclipped branch carries gradient; the clipped one is flat in theta.
    const double d_logp = unclipped <= clipped ? -unclipped * inv_n : 0.0;
    d_mean.col(i) = d_logp * diff.cwiseProduct(inv_var);
    d_log_std.array() += d_logp * (diff.array().square() * inv_var.array() - 1.0);
  }
  return {total * inv_n, policy_grad(policy, cache, d_mean, d_log_std)};
}

LossGrad value_loss(const Mlp& value_net, const Mat& states, const Vec& returns) {
  const Index n = states.cols();
  require(n > 0 && returns.size() == n, "value_loss: batch length mismatch");
  MlpCache cache;
  const Mat v = value_net.forward(states, cache);
  const Mat diff = v - returns.transpose();
  LossGrad out;
  out.value = diff.squaredNorm() / static_cast<double>(n);
  out.grad = Vec::Zero(value_net.num_params());
  value_net.backward(cache, 2.0 * diff / static_cast<double>(n), out.grad);
  return out;
}

LossGrad bc_loss(const GaussianPolicy& policy, const Mat& states, const Mat& actions) {
  if (actions.cols() == 0 || actions.rows() == 0)
    throw ContractViolation("bc_loss: demonstration batch carries no actions");
  const Index n = states.cols();
  require(n > 0 && actions.cols() == n, "bc_loss: batch length mismatch");
  require(actions.rows() == policy.action_dim(), "bc_loss: action dimension mismatch");
  MlpCache cache;
  const Mat mu = policy.mean_net.forward(states, cache);
  const Vec inv_var = (-2.0 * policy.log_std.array()).exp();
  const double norm = policy.log_std.sum() + kHalfLog2Pi * static_cast<double>(policy.action_dim());
  const double inv_n = 1.0 / static_cast<double>(n);
  Mat d_mean(policy.action_dim(), n);
  Vec d_log_std = Vec::Zero(policy.action_dim());
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vec diff = actions.col(i) - mu.col(i);
    total += 0.5 * diff.cwiseAbs2().dot(inv_var) + norm;
    d_mean.col(i) = -inv_n * diff.cwiseProduct(inv_var);
    d_log_std.array() -= inv_n * (diff.array().square() * inv_var.array() - 1.0);
  }
  return {finite_or_throw(total * inv_n, "behavioral cloning loss"),
          policy_grad(policy, cache, d_mean, d_log_std)};
}

LossGrad reg_loss(const GaussianPolicy& policy, const RegTargets& targets,
                  const std::vector<Index>& indices) {
  require(!indices.empty(), "reg_loss: empty batch");
  const auto n = static_cast<Index>(indices.size());
  Mat states(policy.state_dim(), n);
  for (Index k = 0; k < n; ++k) {
    const Index i = indices[static_cast<std::size_t>(k)];
    require(i >= 0 && i < targets.size(), "reg_loss: target index out of range");
    states.col(k) = targets.states.col(i);
  }
  MlpCache cache;
  const Mat mu = policy.mean_net.forward(states, cache);
  const double inv_n = 1.0 / static_cast<double>(n);
  Mat d_mean(policy.action_dim(), n);
  Vec d_log_std = Vec::Zero(policy.action_dim());
  double total = 0.0;
  Vec gm, gs;
  for (Index k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(indices[static_cast<std::size_t>(k)]);
    const DiagGaussian pi(mu.col(k), policy.log_std);
    if (targets.num_components == 1) {
      require(targets.gaussians[i].dim() == policy.action_dim(), "reg_loss: action dimension mismatch");
      total += diag_gaussian_kl(targets.gaussians[i], pi);
      diag_gaussian_kl_grad_q(targets.gaussians[i], pi, gm, gs);
      d_mean.col(k) = inv_n * gm;
      d_log_std += inv_n * gs;
      continue;
    }
    const Mat& draws = targets.samples[i];
    const double M = static_cast<double>(draws.cols());
    double kl = 0.0;
    Vec acc_m = Vec::Zero(policy.action_dim()), acc_s = Vec::Zero(policy.action_dim());
    for (Index j = 0; j < draws.cols(); ++j) {
      kl += targets.sample_logp[i][j] - diag_gaussian_logprob(pi, draws.col(j));
      diag_gaussian_logprob_grad(pi, draws.col(j), gm, gs);
      acc_m -= gm;
      acc_s -= gs;
    }
    total += kl / M;
    d_mean.col(k) = (inv_n / M) * acc_m;
    d_log_std += (inv_n / M) * acc_s;
  }
  return {finite_or_throw(total * inv_n, "regularizer KL"),
          policy_grad(policy, cache, d_mean, d_log_std)};
}

LossGrad reg_loss(const GaussianPolicy& policy, const MdnIdm& idm,
                  const std::vector<Transition>& expert_pairs, Rng& rng, int samples) {
  require(idm.action_dim() == policy.action_dim(), "reg_loss: IDM and policy action dims differ");
  const RegTargets targets = make_reg_targets(idm, expert_pairs, rng, samples);
  std::vector<Index> all(expert_pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  return reg_loss(policy, targets, all);
}

double r_squared(const Mat& predicted, const Mat& reference) {
  require(predicted.rows() == reference.rows() && predicted.cols() == reference.cols(),
          "r_squared: shape mismatch");
  require(reference.cols() >= 2, "r_squared: need at least two samples");
  double sum = 0.0;
  for (Index d = 0; d < reference.rows(); ++d) {
    const double mean = reference.row(d).mean();
    const double ss_tot = (reference.row(d).array() - mean).square().sum();
    if (!(ss_tot > 0.0)) throw DegenerateInput("r_squared: reference has zero variance");
    const double ss_res = (predicted.row(d) - reference.row(d)).squaredNorm();
    sum += 1.0 - ss_res / ss_tot;
  }
  return sum / static_cast<double>(reference.rows());
}

}  // namespace maad
