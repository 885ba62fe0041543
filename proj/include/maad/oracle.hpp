#pragma once

// Exact computations on finite MDPs: discounted occupancies, the
// environment-induced inverse posterior, the decomposition of the
// state-action divergence into a state-transition divergence plus the
// inverse dynamics disagreement, and the upper bound on the IDM mismatch.

#include <cstdint>
#include <vector>

#include "maad/numkit.hpp"

namespace maad {

struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Mat> transitions;  // transitions[a](s, s') = T(s' | s, a)
  Vec rho0;
  double gamma = 0.9;

  double T(int s, int a, int s_next) const { return transitions[static_cast<std::size_t>(a)](s, s_next); }
  /// Throws ContractViolation when distributions are not normalized to 1e-12.
  void validate() const;
};

struct TabularPolicy {
  Mat probs;  // n_states x n_actions

  double operator()(int s, int a) const { return probs(s, a); }
  void validate(const TabularMdp& mdp) const;
};

/// Per-action slices of a table over (s, a, s'): table[a](s, s').
using SasTable = std::vector<Mat>;

struct OccupancyTables {
  Vec rho_s;                  // sums to 1 / (1 - gamma)
  Mat rho_sa;                 // n_states x n_actions
  Mat rho_ss;                 // n_states x n_states
  SasTable rho_a_given_ss;    // zero where (s, s') is unreachable
};

/// Solves rho = rho0 + gamma P_pi^T rho exactly and derives the joint tables.
OccupancyTables occupancy_tables(const TabularMdp& mdp, const TabularPolicy& pi);

/// T(s' | s, a) pi(a | s) normalized over actions. Throws
/// InfeasibleTransition when no action can produce s -> s'.
Vec env_inverse_posterior(const TabularMdp& mdp, const TabularPolicy& pi, int s, int s_next);

struct IddResult {
  double kl_ild = 0.0;  // KL over normalized state-action occupancies
  double kl_ilo = 0.0;  // KL over normalized state-transition occupancies
  double kl_idd = 0.0;  // expected KL of inverse posteriors under the agent joint
  double residual = 0.0;
};

/// Throws AbsoluteContinuityError when the agent puts mass where the expert
/// has none.
IddResult idd_check(const TabularMdp& mdp, const TabularPolicy& agent, const TabularPolicy& expert);

/// Normalized joint (1 - gamma) rho_pi(s) pi(a | s) T(s' | s, a).
SasTable policy_joint(const TabularMdp& mdp, const TabularPolicy& pi);

struct BoundResult {
  double lhs = 0.0;            // E_joint log rho(a|s,s') / rho_theta(a|s,s')
  double kl_term = 0.0;        // E_joint log rho(a|s,s') / pi_theta(a|s)
  double integral_term = 0.0;  // E_joint log sum_a' T pi_theta / T
  double residual = 0.0;       // lhs - kl_term - integral_term
  bool holds = false;          // lhs <= kl_term + integral_term (1e-12 slack)
};

/// The inverse model rho(a | s, s') is read off `joint`; when `joint` is null
/// the behavior policy's joint is used.
BoundResult bound_check(const TabularMdp& mdp, const TabularPolicy& behavior,
                        const TabularPolicy& pi_theta, const SasTable* joint = nullptr);

/// Dirichlet(1) transitions and initial distribution.
TabularMdp random_mdp(Rng& rng, int n_states = 4, int n_actions = 3, double gamma = 0.9);
/// Dirichlet(1) rows floored at `floor` and renormalized.
TabularPolicy random_policy(Rng& rng, int n_states, int n_actions, double floor = 1e-3);

struct OracleRecord {
  int instance = 0;
  IddResult idd;
  BoundResult bound;
  double sup_integral = 0.0;  // max integral term over the tested policies
  double sup_gap = 0.0;       // kl_term + sup_integral - lhs
};

struct OracleReport {
  std::vector<OracleRecord> records;
  double max_idd_residual = 0.0;
  double max_bound_residual = 0.0;
  double max_occupancy_error = 0.0;  // |(1 - gamma) sum rho - 1| and marginal checks
  bool bound_holds = true;
  bool passed = false;
};

/// Randomized battery over `instances` MDPs; passes when every residual is
/// within `tol` and the bound holds everywhere.
OracleReport run_oracle_battery(int instances = 100, std::uint64_t seed = 0, double tol = 1e-9,
                                int extra_policies = 4);

}  // namespace maad
