#include <doctest.h>

#include "maad/envs.hpp"
#include "maad/errors.hpp"

using namespace maad;

namespace {

EnvState state1(double x, double v) {
  EnvState s;
  s.positions = Vec::Constant(1, x);
  s.velocities = Vec::Constant(1, v);
  return s;
}

}  // namespace

TEST_CASE("env_reset: deterministic, zero velocity, positions in the unit box") {
  const EnvSpec spec = EnvSpec::linear_point();
  const EnvState a = env_reset(spec, 7), b = env_reset(spec, 7);
  CHECK(a.positions == b.positions);
  CHECK(a.velocities.isZero(0.0));
  CHECK(a.step_index == 0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const EnvState s = env_reset(spec, seed);
    CHECK(s.positions.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("env_step: linear_point integrates acceleration") {
  const EnvSpec spec = EnvSpec::linear_point(1);
  const StepResult r = env_step(spec, state1(0.0, 0.0), Vec::Ones(1));
  CHECK(r.state.positions[0] == doctest::Approx(0.0025));
  CHECK(r.state.velocities[0] == doctest::Approx(0.05));
  CHECK(r.state.step_index == 1);
  CHECK_FALSE(r.done);

  const StepResult clipped = env_step(spec, state1(0.0, 0.0), Vec::Constant(1, 5.0));
  CHECK(clipped.state.vector() == r.state.vector());
}

TEST_CASE("env_step: mirror actuator ignores the command sign") {
  const EnvSpec spec = EnvSpec::mirror_actuator();
  const EnvState s = state1(0.3, -0.2);
  const StepResult up = env_step(spec, s, Vec::Ones(1));
  const StepResult down = env_step(spec, s, -Vec::Ones(1));
  CHECK(up.state.vector() == down.state.vector());
  CHECK(up.state.velocities[0] == doctest::Approx(-0.15));
}

TEST_CASE("env_step: done exactly at the horizon and errors") {
  const EnvSpec spec = EnvSpec::linear_point();
  EnvState s = env_reset(spec, 3);
  int steps = 0;
  bool done = false;
  while (!done) {
    const StepResult r = env_step(spec, s, Vec::Zero(2));
    s = r.state;
    done = r.done;
    ++steps;
  }
  CHECK(steps == spec.horizon);

  Vec bad = Vec::Zero(2);
  bad[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(env_step(spec, env_reset(spec, 0), bad), ContractViolation);
  CHECK_THROWS_AS(env_step(spec, env_reset(spec, 0), Vec::Zero(3)), ContractViolation);
}

TEST_CASE("env_step is pure") {
  const EnvSpec spec = EnvSpec::linear_point();
  const EnvState s = env_reset(spec, 11);
  Vec a(2);
  a << 0.3, -0.7;
  CHECK(env_step(spec, s, a).state.vector() == env_step(spec, s, a).state.vector());
}

TEST_CASE("expert_action: regulator law") {
  const EnvSpec spec = EnvSpec::linear_point(1);
  CHECK(expert_action(spec, state1(0.0, 0.0))[0] == 0.0);
  CHECK(expert_action(spec, state1(1.0, 0.0))[0] == doctest::Approx(-1.0));
  CHECK(expert_action(spec, state1(0.1, 0.05))[0] == doctest::Approx(-0.25));
}

TEST_CASE("expert_action: PD rollout settles near the origin") {
  for (const EnvSpec& spec : {EnvSpec::linear_point(), EnvSpec::mirror_actuator()}) {
    for (std::uint64_t seed = 0; seed <= 2; ++seed) {
      EnvState s = env_reset(spec, seed);
      for (int t = 0; t < spec.horizon; ++t) s = env_step(spec, s, expert_action(spec, s)).state;
      if (spec.dynamics_kind == DynamicsKind::kLinearPoint) CHECK(s.positions.norm() <= 0.05);
    }
  }
}

TEST_CASE("analytic_inverse: examples") {
  const EnvSpec lp = EnvSpec::linear_point(1);
  const auto one = analytic_inverse(lp, state1(0.0, 0.0), state1(0.0025, 0.05));
  REQUIRE(one.size() == 1);
  CHECK(one[0][0] == doctest::Approx(1.0));

  const EnvSpec mirror = EnvSpec::mirror_actuator();
  const auto two = analytic_inverse(mirror, state1(0.0, 0.0), state1(0.0025, 0.05));
  REQUIRE(two.size() == 2);
  CHECK(two[0][0] == doctest::Approx(1.0));
  CHECK(two[1][0] == doctest::Approx(-1.0));

  const auto zero = analytic_inverse(mirror, state1(0.2, 0.0), state1(0.2, 0.0));
  for (const Vec& a : zero) CHECK(a[0] == 0.0);
}

TEST_CASE("analytic_inverse: infeasible transitions") {
  const EnvSpec lp = EnvSpec::linear_point(1);
  // Would need acceleration 10.
  CHECK_THROWS_AS(analytic_inverse(lp, state1(0.0, 0.0), state1(0.025, 0.5)), InfeasibleTransition);
  // Position inconsistent with the velocity update.
  CHECK_THROWS_AS(analytic_inverse(lp, state1(0.0, 0.0), state1(0.3, 0.05)), InfeasibleTransition);
  // Mirror actuator cannot decelerate.
  const EnvSpec mirror = EnvSpec::mirror_actuator();
  CHECK_THROWS_AS(analytic_inverse(mirror, state1(0.0, 0.0), state1(-0.0025, -0.05)),
                  InfeasibleTransition);
}

TEST_CASE("analytic_inverse: round trip over random in-bounds actions") {
  Rng rng = make_rng(9, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const EnvSpec& spec : {EnvSpec::linear_point(), EnvSpec::mirror_actuator()}) {
    for (int i = 0; i < 2000; ++i) {
      EnvState s = env_reset(spec, rng);
      s.velocities = Vec::NullaryExpr(spec.position_dim, [&] { return u(rng); });
      const Vec a = Vec::NullaryExpr(spec.action_dim(), [&] { return u(rng); });
      const auto roots = analytic_inverse(spec, s, env_step(spec, s, a).state);
      bool found = false;
      for (const Vec& r : roots) {
        const Vec target = spec.dynamics_kind == DynamicsKind::kMirrorActuator ? Vec(a.cwiseAbs()) : a;
        const Vec got = spec.dynamics_kind == DynamicsKind::kMirrorActuator ? Vec(r.cwiseAbs()) : r;
        found = found || (got - target).cwiseAbs().maxCoeff() <= 1e-10;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("EnvSpec::validate") {
  EnvSpec spec = EnvSpec::linear_point();
  CHECK_NOTHROW(spec.validate());
  spec.horizon = 0;
  CHECK_THROWS_AS(spec.validate(), ContractViolation);
  spec = EnvSpec::linear_point();
  spec.action_low[0] = 2.0;
  CHECK_THROWS_AS(spec.validate(), ContractViolation);
}
