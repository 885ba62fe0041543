#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "maad/envs.hpp"
#include "maad/numkit.hpp"

namespace maad {

/// State-action trajectory. `states` is state_dim x (L+1), `actions` is
/// action_dim x L, or empty (zero columns) for observation-only records.
struct DemoTrajectory {
  Mat states;
  Mat actions;
  double ep_return = 0.0;

  Index length() const { return states.cols() > 0 ? states.cols() - 1 : 0; }
  bool has_actions() const { return actions.cols() > 0; }
  void validate() const;
};

/// State-only trajectory.
struct ObsTrajectory {
  Mat states;

  Index length() const { return states.cols() > 0 ? states.cols() - 1 : 0; }
  void validate() const;
};

struct Transition {
  Vec s;
  Vec a;  // empty when the source carries no actions
  Vec s_next;
};

/// Column-stacked triplets; `a` has zero rows when actions are absent.
struct TripletBatch {
  Mat s;
  Mat a;
  Mat s_next;

  Index size() const { return s.cols(); }
};

TripletBatch to_batch(const std::vector<Transition>& transitions);

using ActionSource = std::function<Vec(const Vec& state, Rng& rng)>;

/// Runs one full episode of `spec` from env_reset(spec, seed). Stored actions
/// are the ones the environment applied (after clipping). ep_return is the
/// undiscounted task reward.
DemoTrajectory collect_rollout(const ActionSource& policy, const EnvSpec& spec, std::uint64_t seed);

ObsTrajectory strip_actions(const DemoTrajectory& demo);

/// floor(L / rate) transitions chosen uniformly without replacement, in
/// their original order. Actions are carried along when present.
std::vector<Transition> subsample_pairs(const DemoTrajectory& traj, int rate, std::uint64_t seed);
std::vector<Transition> subsample_pairs(const ObsTrajectory& traj, int rate, std::uint64_t seed);

/// All transitions of a trajectory in order.
std::vector<Transition> all_pairs(const DemoTrajectory& traj);

/// FIFO buffer of (s, a, s') triplets with fixed capacity.
class ReplayBuffer {
 public:
  static constexpr Index kDefaultCapacity = 100000;

  ReplayBuffer(int state_dim, int action_dim, Index capacity = kDefaultCapacity);

  Index size() const { return size_; }
  Index capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

  void push(const Transition& t);
  void push(const std::vector<Transition>& batch);

  /// Entry i in insertion order (0 = oldest retained).
  Transition at(Index i) const;

  TripletBatch gather(const std::vector<Index>& indices) const;

  /// Uniform with replacement. Throws EmptyBufferError on an empty buffer.
  std::vector<Transition> sample(Index batch_size, Rng& rng) const;
  std::vector<Transition> sample(Index batch_size, std::uint64_t seed) const;

 private:
  Index physical(Index i) const { return (start_ + i) % capacity_; }

  int state_dim_;
  int action_dim_;
  Index capacity_;
  Index start_ = 0;
  Index size_ = 0;
  Mat states_;
  Mat actions_;
  Mat next_states_;
};

void save_trajectories(const std::string& path, const std::vector<DemoTrajectory>& dataset);
std::vector<DemoTrajectory> load_trajectories(const std::string& path);

}  // namespace maad
