#pragma once

// Surrogate rewards: adversarial (discriminator on (s, s') pairs), trajectory
// matching (negative Euclidean distance to the time-aligned expert state) and
// entropic optimal transport (Sinkhorn plan over a cosine cost).

#include <vector>

#include "maad/data.hpp"
#include "maad/numkit.hpp"

namespace maad {

enum class RewardBackend { kAil, kTm, kOt, kNone };

std::string to_string(RewardBackend backend);
RewardBackend reward_backend_from_string(const std::string& name);

inline constexpr double kDiscClamp = 1e-6;

struct Discriminator {
  Mlp net;  // [s, s'] -> logit

  Discriminator() = default;
  Discriminator(int state_dim, const std::vector<int>& hidden, Rng& rng);

  int state_dim() const { return net.input_dim() / 2; }
  Mat inputs(const Mat& s, const Mat& s_next) const;
  Vec logits(const Mat& s, const Mat& s_next) const;
  /// sigmoid(logit), columns are samples.
  Vec prob(const Mat& s, const Mat& s_next) const;
};

struct DiscLoss {
  double total = 0.0;
  double bce = 0.0;
  double penalty = 0.0;
  Vec grad;  // with respect to Discriminator::net parameters
};

/// Mean binary cross-entropy (expert = 1, agent = 0) over all pairs, plus
/// gp_coef * mean (||d logit / d input|| - 1)^2 at random interpolates of
/// expert and agent pairs.
DiscLoss disc_loss(const Discriminator& d, const TripletBatch& expert, const TripletBatch& agent,
                   double gp_coef, Rng& rng);

/// -log(1 - clamp(D(s, s'), delta, 1 - delta)).
double ail_reward(const Discriminator& d, const Vec& s, const Vec& s_next);
Vec ail_rewards(const Discriminator& d, const Mat& s, const Mat& s_next);
double ail_reward_from_prob(double prob);

/// r_t = -||s_t - s^e_t|| over the first min(T_agent, T_expert) states.
Vec tm_rewards(const ObsTrajectory& agent, const ObsTrajectory& expert);

/// C(t, t') = 1 - <s_t, s^e_t'> / (||s_t|| ||s^e_t'|| + 1e-8).
Mat cosine_cost(const Mat& agent_states, const Mat& expert_states);

struct TransportPlan {
  Mat plan;
  double marginal_violation = 0.0;  // max abs deviation of row/column sums
  double iterate_violation = 0.0;   // same, for the last iterate before rounding
  double cost = 0.0;                // <C, plan>
};

/// Log-domain Sinkhorn with uniform marginals, run for exactly `iters`
/// iterations. The last iterate is then rounded onto the set of couplings
/// with exactly the uniform marginals (row/column shrink plus a rank-one
/// correction), which moves it by at most twice its marginal error in L1.
TransportPlan sinkhorn(const Mat& cost, double epsilon, int iters);

/// r_t = -scale * sum_t' C(t, t') plan(t, t').
Vec ot_rewards(const ObsTrajectory& agent, const ObsTrajectory& expert, double epsilon = 0.01,
               int iters = 100, double scale = 20.0);

}  // namespace maad
