#pragma once

// Policy, critic and the losses the PPO-based learner combines: the clipped
// surrogate, the critic regression, behavioral cloning on true actions and
// the IDM-to-policy KL regularizer. All losses return analytic gradients with
// respect to the packed parameters of the network they train.

#include <vector>

#include "maad/data.hpp"
#include "maad/envs.hpp"
#include "maad/idm.hpp"
#include "maad/numkit.hpp"

namespace maad {

/// Diagonal Gaussian policy with a state-dependent mean and a
/// state-independent log standard deviation.
struct GaussianPolicy {
  Mlp mean_net;
  Vec log_std;

  GaussianPolicy() = default;
  GaussianPolicy(int state_dim, int action_dim, const std::vector<int>& hidden, Rng& rng,
                 double init_log_std = 0.0);

  int state_dim() const { return mean_net.input_dim(); }
  int action_dim() const { return mean_net.output_dim(); }

  Index num_params() const { return mean_net.num_params() + log_std.size(); }
  /// [mean_net | log_std]
  Vec packed() const;
  void unpack(const Vec& theta);

  DiagGaussian dist(const Vec& s) const;
  Vec mean_action(const Vec& s) const;
  Vec sample(const Vec& s, Rng& rng) const;
  Vec logprob(const Mat& states, const Mat& actions) const;
};

struct Advantages {
  Vec advantages;
  Vec returns;
};

/// Generalized advantage estimation. `dones[t]` marks the last step of an
/// episode; `last_value` bootstraps the step after the final one.
Advantages gae(const Vec& rewards, const Vec& values, const std::vector<bool>& dones,
               double last_value, double gamma, double lam);

/// Standardizes to zero mean and unit (population) standard deviation.
Vec normalize_advantages(const Vec& adv);

/// Clipped surrogate, mean of -min(rho A, clip(rho, 1-eps, 1+eps) A).
LossGrad ppo_policy_loss(const GaussianPolicy& policy, const Vec& old_logprobs, const Mat& states,
                         const Mat& actions, const Vec& advantages, double clip);

/// Mean squared error of the critic against `returns`.
LossGrad value_loss(const Mlp& value_net, const Mat& states, const Vec& returns);

/// Mean of -log pi(a | s) over demonstration pairs. Throws ContractViolation
/// when the batch carries no actions.
LossGrad bc_loss(const GaussianPolicy& policy, const Mat& states, const Mat& actions);

/// Mean over the selected targets of KL(p_idm(. | s, s') || pi(. | s)). The
/// IDM is frozen inside `targets`: the returned gradient covers policy
/// parameters only.
LossGrad reg_loss(const GaussianPolicy& policy, const RegTargets& targets,
                  const std::vector<Index>& indices);

/// Convenience form over a batch of expert (s, s') pairs.
LossGrad reg_loss(const GaussianPolicy& policy, const MdnIdm& idm,
                  const std::vector<Transition>& expert_pairs, Rng& rng, int samples = 128);

/// 1 - SS_res / SS_tot per action dimension, averaged. Columns are samples.
double r_squared(const Mat& predicted, const Mat& reference);

}  // namespace maad
