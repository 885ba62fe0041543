#include "maad/envs.hpp"

#include <cmath>

#include "maad/errors.hpp"

namespace maad {

namespace {
constexpr double kInverseTol = 1e-9;
}

std::string to_string(DynamicsKind kind) {
  return kind == DynamicsKind::kLinearPoint ? "linear_point" : "mirror_actuator";
}

DynamicsKind dynamics_kind_from_string(const std::string& name) {
  if (name == "linear_point") return DynamicsKind::kLinearPoint;
  if (name == "mirror_actuator") return DynamicsKind::kMirrorActuator;
  throw ContractViolation("unknown dynamics kind '" + name + "'");
}

void EnvSpec::validate() const {
  require(position_dim >= 1, "EnvSpec: position_dim must be >= 1");
  require(action_low.size() == action_dim() && action_high.size() == action_dim(),
          "EnvSpec: action bounds must have action_dim entries");
  require((action_low.array() < action_high.array()).all(),
          "EnvSpec: action_low must be < action_high elementwise");
  require(dt > 0.0, "EnvSpec: dt must be positive");
  require(horizon >= 1, "EnvSpec: horizon must be >= 1");
}

EnvSpec EnvSpec::linear_point(int position_dim) {
  EnvSpec spec;
  spec.name = "linear_point";
  spec.dynamics_kind = DynamicsKind::kLinearPoint;
  spec.position_dim = position_dim;
  spec.action_low = Vec::Constant(position_dim, -1.0);
  spec.action_high = Vec::Constant(position_dim, 1.0);
  return spec;
}

EnvSpec EnvSpec::mirror_actuator(int position_dim) {
  EnvSpec spec = linear_point(position_dim);
  spec.name = "mirror_actuator";
  spec.dynamics_kind = DynamicsKind::kMirrorActuator;
  return spec;
}

Vec EnvState::vector() const {
  Vec s(positions.size() + velocities.size());
  s << positions, velocities;
  return s;
}

EnvState EnvState::from_vector(const Vec& s, int step_index) {
  require(s.size() % 2 == 0, "state vector must hold positions and velocities");
  const Index d = s.size() / 2;
  return EnvState{s.head(d), s.tail(d), step_index};
}

EnvState env_reset(const EnvSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  EnvState s;
  s.positions.resize(spec.position_dim);
  for (Index i = 0; i < s.positions.size(); ++i) s.positions[i] = u(rng);
  s.velocities = Vec::Zero(spec.position_dim);
  s.step_index = 0;
  return s;
}

EnvState env_reset(const EnvSpec& spec, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x5eed);
  return env_reset(spec, rng);
}

Vec clip_action(const EnvSpec& spec, const Vec& a) {
  return a.cwiseMax(spec.action_low).cwiseMin(spec.action_high);
}

StepResult env_step(const EnvSpec& spec, const EnvState& s, const Vec& a) {
  require(a.size() == spec.action_dim(), "env_step: action dimension mismatch");
  for (Index i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i])) throw ContractViolation("env_step: non-finite action");
  Vec accel = clip_action(spec, a);
  if (spec.dynamics_kind == DynamicsKind::kMirrorActuator) accel = accel.cwiseAbs();
  StepResult out;
  out.state.velocities = s.velocities + accel * spec.dt;
  out.state.positions = s.positions + out.state.velocities * spec.dt;
  out.state.step_index = s.step_index + 1;
  out.done = out.state.step_index >= spec.horizon;
  return out;
}

double task_reward(const EnvSpec&, const EnvState& next) {
  return -(next.positions.squaredNorm() + 0.1 * next.velocities.squaredNorm());
}

Vec expert_action(const EnvSpec& spec, const EnvState& s) {
  Vec a = clip_action(spec, -spec.k_p * s.positions - spec.k_d * s.velocities);
  if (spec.dynamics_kind == DynamicsKind::kMirrorActuator) a = a.cwiseAbs();
  return a;
}

std::vector<Vec> analytic_inverse(const EnvSpec& spec, const EnvState& s, const EnvState& s_next) {
  const Index d = spec.position_dim;
  require(s.positions.size() == d && s_next.positions.size() == d &&
              s.velocities.size() == d && s_next.velocities.size() == d,
          "analytic_inverse: state dimension mismatch");
  const Vec expected_pos = s.positions + s_next.velocities * spec.dt;
  if ((expected_pos - s_next.positions).cwiseAbs().maxCoeff() > kInverseTol)
    throw InfeasibleTransition("analytic_inverse: positions inconsistent with velocities");

  Vec m = (s_next.velocities - s.velocities) / spec.dt;
  if (spec.dynamics_kind == DynamicsKind::kLinearPoint) {
    if ((m.array() < spec.action_low.array() - kInverseTol).any() ||
        (m.array() > spec.action_high.array() + kInverseTol).any())
      throw InfeasibleTransition("analytic_inverse: required action outside bounds");
    return {clip_action(spec, m)};
  }

  // mirror_actuator: every sign pattern of the magnitude is a root.
  const Vec limit = spec.action_low.cwiseAbs().cwiseMax(spec.action_high.cwiseAbs());
  if ((m.array() < -kInverseTol).any() || (m.array() > limit.array() + kInverseTol).any())
    throw InfeasibleTransition("analytic_inverse: required magnitude outside actuator range");
  m = m.cwiseMax(0.0).cwiseMin(limit);
  std::vector<Vec> roots{m};
  for (Index i = 0; i < d; ++i) {
    if (m[i] == 0.0) continue;
    const std::size_t n = roots.size();
    for (std::size_t r = 0; r < n; ++r) {
      Vec flipped = roots[r];
      flipped[i] = -flipped[i];
      roots.push_back(std::move(flipped));
    }
  }
  // Each root must also lie within the (possibly asymmetric) bounds.
  std::vector<Vec> feasible;
  for (auto& r : roots)
    if ((r.array() >= spec.action_low.array() - kInverseTol).all() &&
        (r.array() <= spec.action_high.array() + kInverseTol).all())
      feasible.push_back(std::move(r));
  if (feasible.empty()) throw InfeasibleTransition("analytic_inverse: no in-bounds root");
  return feasible;
}

std::vector<Vec> analytic_inverse(const EnvSpec& spec, const Vec& s, const Vec& s_next) {
  return analytic_inverse(spec, EnvState::from_vector(s), EnvState::from_vector(s_next));
}

}  // namespace maad
