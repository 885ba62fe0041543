#pragma once

// Deterministic toy continuous-control environments. The state vector is
// [positions; velocities]; actions are accelerations (linear_point) or
// acceleration magnitudes (mirror_actuator, where the actuator ignores the
// sign of the command).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "maad/numkit.hpp"

namespace maad {

enum class DynamicsKind { kLinearPoint, kMirrorActuator };

std::string to_string(DynamicsKind kind);
DynamicsKind dynamics_kind_from_string(const std::string& name);

struct EnvSpec {
  std::string name = "linear_point";
  DynamicsKind dynamics_kind = DynamicsKind::kLinearPoint;
  int position_dim = 2;
  Vec action_low = Vec::Constant(2, -1.0);
  Vec action_high = Vec::Constant(2, 1.0);
  double dt = 0.05;
  int horizon = 200;
  // Scripted expert gains.
  double k_p = 2.0;
  double k_d = 1.0;

  int state_dim() const { return 2 * position_dim; }
  int action_dim() const { return position_dim; }

  /// Throws ContractViolation when the invariants do not hold.
  void validate() const;

  static EnvSpec linear_point(int position_dim = 2);
  static EnvSpec mirror_actuator(int position_dim = 1);
};

struct EnvState {
  Vec positions;
  Vec velocities;
  int step_index = 0;

  Vec vector() const;
  static EnvState from_vector(const Vec& s, int step_index = 0);
};

struct StepResult {
  EnvState state;
  bool done = false;
};

EnvState env_reset(const EnvSpec& spec, std::uint64_t seed);
EnvState env_reset(const EnvSpec& spec, Rng& rng);

Vec clip_action(const EnvSpec& spec, const Vec& a);

StepResult env_step(const EnvSpec& spec, const EnvState& s, const Vec& a);

/// Task reward of arriving in `next`; used only for evaluation, never seen
/// by the imitation learners.
double task_reward(const EnvSpec& spec, const EnvState& next);

Vec expert_action(const EnvSpec& spec, const EnvState& s);

/// Every in-bounds action that maps s to s_next. Throws InfeasibleTransition
/// when no such action exists.
std::vector<Vec> analytic_inverse(const EnvSpec& spec, const EnvState& s, const EnvState& s_next);

/// Same, on flat state vectors.
std::vector<Vec> analytic_inverse(const EnvSpec& spec, const Vec& s, const Vec& s_next);

}  // namespace maad
