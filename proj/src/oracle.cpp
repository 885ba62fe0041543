#include "maad/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/LU>

#include "maad/errors.hpp"

namespace maad {

namespace {

constexpr double kSumTol = 1e-12;

void check_distribution(const Eigen::Ref<const Vec>& p, const char* what) {
  if ((p.array() < 0.0).any() || !p.allFinite())
    throw ContractViolation(std::string(what) + ": negative or non-finite probability");
  if (std::abs(p.sum() - 1.0) > kSumTol)
    throw ContractViolation(std::string(what) + ": probabilities do not sum to 1");
}

// p log(p / q) with the conventions 0 log 0 = 0 and p > 0, q = 0 -> error.
double kl_term(double p, double q, const char* what) {
  if (p <= 0.0) return 0.0;
  if (q <= 0.0) throw AbsoluteContinuityError(std::string(what) + ": reference has zero mass");
  return p * std::log(p / q);
}

Vec dirichlet_ones(Rng& rng, int n) {
  std::exponential_distribution<double> e(1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = e(rng);
  return v / v.sum();
}

}  // namespace

void TabularMdp::validate() const {
  require(n_states > 0 && n_actions > 0, "TabularMdp: sizes must be positive");
  require(gamma > 0.0 && gamma < 1.0, "TabularMdp: gamma must lie in (0, 1)");
  require(static_cast<int>(transitions.size()) == n_actions, "TabularMdp: one matrix per action");
  require(rho0.size() == n_states, "TabularMdp: rho0 has the wrong size");
  check_distribution(rho0, "TabularMdp rho0");
  for (const Mat& t : transitions) {
    require(t.rows() == n_states && t.cols() == n_states, "TabularMdp: transition shape");
    for (int s = 0; s < n_states; ++s) check_distribution(t.row(s).transpose(), "TabularMdp T(.|s,a)");
  }
}

void TabularPolicy::validate(const TabularMdp& mdp) const {
  require(probs.rows() == mdp.n_states && probs.cols() == mdp.n_actions, "TabularPolicy: shape");
  for (int s = 0; s < mdp.n_states; ++s) check_distribution(probs.row(s).transpose(), "TabularPolicy");
}

OccupancyTables occupancy_tables(const TabularMdp& mdp, const TabularPolicy& pi) {
  mdp.validate();
  pi.validate(mdp);
  const int S = mdp.n_states, A = mdp.n_actions;
  Mat p_pi = Mat::Zero(S, S);
  for (int a = 0; a < A; ++a) p_pi += pi.probs.col(a).asDiagonal() * mdp.transitions[static_cast<std::size_t>(a)];

  const Mat system = Mat::Identity(S, S) - mdp.gamma * p_pi.transpose();
  const Eigen::FullPivLU<Mat> lu(system);
  if (!lu.isInvertible()) throw NumericError("occupancy_tables: singular occupancy system");

  OccupancyTables out;
  out.rho_s = lu.solve(mdp.rho0);
  out.rho_sa = out.rho_s.asDiagonal() * pi.probs;
  out.rho_ss = out.rho_s.asDiagonal() * p_pi;
  out.rho_a_given_ss.assign(static_cast<std::size_t>(A), Mat::Zero(S, S));
  for (int s = 0; s < S; ++s)
    for (int s2 = 0; s2 < S; ++s2) {
      if (!(out.rho_ss(s, s2) > 0.0)) continue;
      double norm = 0.0;
      for (int a = 0; a < A; ++a) norm += mdp.T(s, a, s2) * pi(s, a);
      for (int a = 0; a < A; ++a)
        out.rho_a_given_ss[static_cast<std::size_t>(a)](s, s2) = mdp.T(s, a, s2) * pi(s, a) / norm;
    }
  return out;
}

Vec env_inverse_posterior(const TabularMdp& mdp, const TabularPolicy& pi, int s, int s_next) {
  require(s >= 0 && s < mdp.n_states && s_next >= 0 && s_next < mdp.n_states,
          "env_inverse_posterior: state out of range");
  Vec post(mdp.n_actions);
  for (int a = 0; a < mdp.n_actions; ++a) post[a] = mdp.T(s, a, s_next) * pi(s, a);
  const double norm = post.sum();
  if (!(norm > 0.0)) throw InfeasibleTransition("env_inverse_posterior: transition has zero probability");
  return post / norm;
}

SasTable policy_joint(const TabularMdp& mdp, const TabularPolicy& pi) {
  const OccupancyTables occ = occupancy_tables(mdp, pi);
  SasTable joint(static_cast<std::size_t>(mdp.n_actions));
  for (int a = 0; a < mdp.n_actions; ++a)
    joint[static_cast<std::size_t>(a)] =
        (1.0 - mdp.gamma) * occ.rho_sa.col(a).asDiagonal() * mdp.transitions[static_cast<std::size_t>(a)];
  return joint;
}

IddResult idd_check(const TabularMdp& mdp, const TabularPolicy& agent, const TabularPolicy& expert) {
  const OccupancyTables oa = occupancy_tables(mdp, agent);
  const OccupancyTables oe = occupancy_tables(mdp, expert);
  const double z = 1.0 - mdp.gamma;
  const int S = mdp.n_states, A = mdp.n_actions;
  IddResult r;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) r.kl_ild += kl_term(z * oa.rho_sa(s, a), z * oe.rho_sa(s, a), "idd_check ILD");
  for (int s = 0; s < S; ++s)
    for (int s2 = 0; s2 < S; ++s2)
      r.kl_ilo += kl_term(z * oa.rho_ss(s, s2), z * oe.rho_ss(s, s2), "idd_check ILO");
  for (int a = 0; a < A; ++a) {
    const auto ai = static_cast<std::size_t>(a);
    for (int s = 0; s < S; ++s)
      for (int s2 = 0; s2 < S; ++s2) {
        const double w = z * oa.rho_sa(s, a) * mdp.T(s, a, s2);
        if (!(w > 0.0)) continue;
        const double p = oa.rho_a_given_ss[ai](s, s2);
        const double q = oe.rho_a_given_ss[ai](s, s2);
        if (!(q > 0.0)) throw AbsoluteContinuityError("idd_check: expert inverse model has zero mass");
        r.kl_idd += w * std::log(p / q);
      }
  }
  r.residual = r.kl_ild - r.kl_ilo - r.kl_idd;
  return r;
}

BoundResult bound_check(const TabularMdp& mdp, const TabularPolicy& behavior,
                        const TabularPolicy& pi_theta, const SasTable* joint) {
  pi_theta.validate(mdp);
  const SasTable own = joint ? SasTable{} : policy_joint(mdp, behavior);
  const SasTable& J = joint ? *joint : own;
  require(static_cast<int>(J.size()) == mdp.n_actions, "bound_check: joint needs one slice per action");
  const int S = mdp.n_states, A = mdp.n_actions;
  BoundResult r;
  for (int s = 0; s < S; ++s)
    for (int s2 = 0; s2 < S; ++s2) {
      double mass = 0.0, theta_norm = 0.0;
      for (int a = 0; a < A; ++a) {
        mass += J[static_cast<std::size_t>(a)](s, s2);
        theta_norm += mdp.T(s, a, s2) * pi_theta(s, a);
      }
      if (!(mass > 0.0)) continue;
      for (int a = 0; a < A; ++a) {
        const double w = J[static_cast<std::size_t>(a)](s, s2);
        if (!(w > 0.0)) continue;
        const double t = mdp.T(s, a, s2);
        const double pth = pi_theta(s, a);
        if (!(t > 0.0) || !(pth > 0.0))
          throw AbsoluteContinuityError("bound_check: joint mass where T or pi_theta vanishes");
        const double inv_env = w / mass;                  // rho(a | s, s')
        const double inv_theta = t * pth / theta_norm;    // rho_theta(a | s, s')
        r.lhs += w * std::log(inv_env / inv_theta);
        r.kl_term += w * std::log(inv_env / pth);
        r.integral_term += w * std::log(theta_norm / t);
      }
    }
  r.residual = r.lhs - r.kl_term - r.integral_term;
  r.holds = r.lhs <= r.kl_term + r.integral_term + 1e-12;
  return r;
}

TabularMdp random_mdp(Rng& rng, int n_states, int n_actions, double gamma) {
  require(n_states > 0 && n_actions > 0, "random_mdp: sizes must be positive");
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.transitions.assign(static_cast<std::size_t>(n_actions), Mat(n_states, n_states));
  for (auto& t : m.transitions)
    for (int s = 0; s < n_states; ++s) t.row(s) = dirichlet_ones(rng, n_states).transpose();
  m.rho0 = dirichlet_ones(rng, n_states);
  return m;
}

TabularPolicy random_policy(Rng& rng, int n_states, int n_actions, double floor) {
  TabularPolicy p;
  p.probs.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    Vec row = dirichlet_ones(rng, n_actions).cwiseMax(floor);
    p.probs.row(s) = (row / row.sum()).transpose();
  }
  return p;
}

OracleReport run_oracle_battery(int instances, std::uint64_t seed, double tol, int extra_policies) {
  require(instances >= 1, "run_oracle_battery: need at least one instance");
  Rng rng = make_rng(seed, 0x07ac1e);
  OracleReport rep;
  for (int i = 0; i < instances; ++i) {
    const TabularMdp mdp = random_mdp(rng);
    const TabularPolicy expert = random_policy(rng, mdp.n_states, mdp.n_actions);
    const TabularPolicy agent = random_policy(rng, mdp.n_states, mdp.n_actions);

    OracleRecord rec;
    rec.instance = i;
    rec.idd = idd_check(mdp, agent, expert);
    rec.bound = bound_check(mdp, expert, agent);
    rec.sup_integral = rec.bound.integral_term;
    for (int k = 0; k < extra_policies; ++k) {
      const TabularPolicy other = random_policy(rng, mdp.n_states, mdp.n_actions);
      rec.sup_integral = std::max(rec.sup_integral, bound_check(mdp, expert, other).integral_term);
    }
    rec.sup_gap = rec.bound.kl_term + rec.sup_integral - rec.bound.lhs;

    for (const TabularPolicy* p : {&expert, &agent}) {
      const OccupancyTables occ = occupancy_tables(mdp, *p);
      rep.max_occupancy_error =
          std::max({rep.max_occupancy_error, std::abs((1.0 - mdp.gamma) * occ.rho_s.sum() - 1.0),
                    (occ.rho_ss.rowwise().sum() - occ.rho_s).cwiseAbs().maxCoeff()});
    }
    rep.max_idd_residual = std::max(rep.max_idd_residual, std::abs(rec.idd.residual));
    rep.max_bound_residual = std::max(rep.max_bound_residual, std::abs(rec.bound.residual));
    rep.bound_holds = rep.bound_holds && rec.bound.holds;
    rep.records.push_back(rec);
  }
  rep.passed = rep.max_idd_residual <= tol && rep.max_bound_residual <= tol && rep.bound_holds &&
               rep.max_occupancy_error <= 1e-12;
  return rep;
}

}  // namespace maad
