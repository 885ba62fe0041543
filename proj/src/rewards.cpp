#include "maad/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "maad/errors.hpp"

namespace maad {

std::string to_string(RewardBackend backend) {
  switch (backend) {
    case RewardBackend::kAil: return "ail";
    case RewardBackend::kTm: return "tm";
    case RewardBackend::kOt: return "ot";
    case RewardBackend::kNone: return "none";
  }
  return "none";
}

RewardBackend reward_backend_from_string(const std::string& name) {
  if (name == "ail") return RewardBackend::kAil;
  if (name == "tm") return RewardBackend::kTm;
  if (name == "ot") return RewardBackend::kOt;
  if (name == "none") return RewardBackend::kNone;
  throw ContractViolation("unknown reward backend '" + name + "'");
}

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

Discriminator::Discriminator(int state_dim, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{2 * state_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  net = Mlp::random(std::move(sizes), rng);
}

Mat Discriminator::inputs(const Mat& s, const Mat& s_next) const {
  require(s.rows() == state_dim() && s_next.rows() == state_dim() && s.cols() == s_next.cols(),
          "Discriminator: state shape mismatch");
  Mat x(2 * state_dim(), s.cols());
  x << s, s_next;
  return x;
}

Vec Discriminator::logits(const Mat& s, const Mat& s_next) const {
  return net.forward(inputs(s, s_next)).row(0).transpose();
}

Vec Discriminator::prob(const Mat& s, const Mat& s_next) const {
  return logits(s, s_next).unaryExpr([](double l) { return sigmoid(l); });
}

DiscLoss disc_loss(const Discriminator& d, const TripletBatch& expert, const TripletBatch& agent,
                   double gp_coef, Rng& rng) {
  require(expert.size() > 0 && agent.size() > 0, "disc_loss: both pair sets must be non-empty");
  const Index ne = expert.size(), na = agent.size();
  const double n = static_cast<double>(ne + na);
  DiscLoss out;
  out.grad = Vec::Zero(d.net.num_params());

  MlpCache cache_e, cache_a;
  const Mat le = d.net.forward(d.inputs(expert.s, expert.s_next), cache_e);
  const Mat la = d.net.forward(d.inputs(agent.s, agent.s_next), cache_a);
  if (!le.allFinite() || !la.allFinite()) throw NumericError("disc_loss: non-finite logits");

  Mat de(1, ne), da(1, na);
  for (Index i = 0; i < ne; ++i) {
    out.bce += softplus(-le(0, i));
    de(0, i) = -sigmoid(-le(0, i)) / n;
  }
  for (Index i = 0; i < na; ++i) {
    out.bce += softplus(la(0, i));
    da(0, i) = sigmoid(la(0, i)) / n;
  }
  out.bce /= n;
  d.net.backward(cache_e, de, out.grad);
  d.net.backward(cache_a, da, out.grad);

  if (gp_coef > 0.0) {
    const Index m = std::min(ne, na);
    const Mat xe = d.inputs(expert.s, expert.s_next);
    const Mat xa = d.inputs(agent.s, agent.s_next);
    Mat interp(xe.rows(), m);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index i = 0; i < m; ++i) {
      const double w = u(rng);
      interp.col(i) = w * xe.col(i) + (1.0 - w) * xa.col(i);
    }
    out.penalty = d.net.input_grad_penalty(interp, gp_coef, out.grad);
  }
  out.total = out.bce + gp_coef * out.penalty;
  finite_or_throw(out.total, "discriminator loss");
  return out;
}

double ail_reward_from_prob(double prob) {
  return -std::log(1.0 - std::clamp(prob, kDiscClamp, 1.0 - kDiscClamp));
}

double ail_reward(const Discriminator& d, const Vec& s, const Vec& s_next) {
  return ail_reward_from_prob(d.prob(s, s_next)[0]);
}

Vec ail_rewards(const Discriminator& d, const Mat& s, const Mat& s_next) {
  return d.prob(s, s_next).unaryExpr([](double p) { return ail_reward_from_prob(p); });
}

Vec tm_rewards(const ObsTrajectory& agent, const ObsTrajectory& expert) {
  require(agent.states.cols() > 0 && expert.states.cols() > 0, "tm_rewards: empty trajectory");
  require(agent.states.rows() == expert.states.rows(), "tm_rewards: state dimension mismatch");
  const Index T = std::min(agent.states.cols(), expert.states.cols());
  Vec r(T);
  for (Index t = 0; t < T; ++t) r[t] = -(agent.states.col(t) - expert.states.col(t)).norm();
  return r;
}

Mat cosine_cost(const Mat& agent_states, const Mat& expert_states) {
  require(agent_states.cols() > 0 && expert_states.cols() > 0, "cosine_cost: empty input");
  require(agent_states.rows() == expert_states.rows(), "cosine_cost: state dimension mismatch");
  constexpr double kDelta = 1e-8;
  const Vec na = agent_states.colwise().norm().transpose();
  const Vec ne = expert_states.colwise().norm().transpose();
  Mat c = agent_states.transpose() * expert_states;
  for (Index j = 0; j < c.cols(); ++j)
    for (Index i = 0; i < c.rows(); ++i) c(i, j) = 1.0 - c(i, j) / (na[i] * ne[j] + kDelta);
  return c.cwiseMax(0.0).cwiseMin(2.0);
}

namespace {

double marginal_gap(const Mat& p, double a, double b) {
  const double row = (p.rowwise().sum().array() - a).abs().maxCoeff();
  const double col = (p.colwise().sum().array() - b).abs().maxCoeff();
  return std::max(row, col);
}

}  // namespace

TransportPlan sinkhorn(const Mat& cost, double epsilon, int iters) {
  require(epsilon > 0.0, "sinkhorn: epsilon must be positive");
  require(iters >= 1, "sinkhorn: need at least one iteration");
  require(cost.rows() > 0 && cost.cols() > 0, "sinkhorn: empty cost matrix");
  const Index n = cost.rows(), m = cost.cols();
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  const Mat scaled = -cost / epsilon;  // log kernel
  Vec f = Vec::Zero(n), g = Vec::Zero(m);  // potentials divided by epsilon
  Vec tmp_n(m), tmp_m(n);
  for (int it = 0; it < iters; ++it) {
    for (Index i = 0; i < n; ++i) {
      tmp_n = scaled.row(i).transpose() + g;
      f[i] = log_a - log_sum_exp(tmp_n);
    }
    for (Index j = 0; j < m; ++j) {
      tmp_m = scaled.col(j) + f;
      g[j] = log_b - log_sum_exp(tmp_m);
    }
  }
  TransportPlan out;
  Mat& p = out.plan;
  p = (scaled.colwise() + f).rowwise() + g.transpose();
  p = p.array().exp();
  if (!p.allFinite()) throw NumericError("sinkhorn: non-finite transport plan");
  const double a = std::exp(log_a), b = std::exp(log_b);
  out.iterate_violation = marginal_gap(p, a, b);

  // Round onto the transport polytope: shrink overfull rows, then overfull
  // columns, then put the missing mass back as a rank-one correction.
  const Vec row_scale = (a / p.rowwise().sum().array()).min(1.0).matrix();
  p = row_scale.asDiagonal() * p;
  const Vec col_scale = (b / p.colwise().sum().array()).min(1.0).matrix();
  p = p * col_scale.asDiagonal();
  const Vec err_r = (a - p.rowwise().sum().array()).max(0.0).matrix();
  const Vec err_c = (b - p.colwise().sum().transpose().array()).max(0.0).matrix();
  const double mass = err_r.sum();
  if (mass > 0.0) p += err_r * err_c.transpose() / mass;

  out.marginal_violation = marginal_gap(p, a, b);
  out.cost = (cost.array() * p.array()).sum();
  return out;
}

Vec ot_rewards(const ObsTrajectory& agent, const ObsTrajectory& expert, double epsilon, int iters,
               double scale) {
  const Mat c = cosine_cost(agent.states, expert.states);
  const TransportPlan p = sinkhorn(c, epsilon, iters);
  return -scale * (c.array() * p.plan.array()).rowwise().sum().matrix();
}

}  // namespace maad
