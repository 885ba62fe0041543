#include "maad/idm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "maad/errors.hpp"

namespace maad {

MdnIdm::MdnIdm(int state_dim, int action_dim, int num_components, int hidden, Rng& rng)
    : state_dim_(state_dim), action_dim_(action_dim), num_components_(num_components) {
  require(state_dim > 0 && action_dim > 0, "MdnIdm: dimensions must be positive");
  require(num_components >= 1, "MdnIdm: need at least one mixture component");
  weight_net_ = Mlp::random({2 * state_dim, hidden, num_components}, rng);
  mean_net_ = Mlp::random({2 * state_dim, hidden, num_components * action_dim}, rng);
  log_std_ = Vec::Zero(num_components * action_dim);
}

Index MdnIdm::num_params() const {
  return weight_net_.num_params() + mean_net_.num_params() + log_std_.size();
}

Vec MdnIdm::packed() const {
  Vec theta(num_params());
  theta << weight_net_.params(), mean_net_.params(), log_std_;
  return theta;
}

void MdnIdm::unpack(const Vec& theta) {
  require(theta.size() == num_params(), "MdnIdm::unpack: wrong parameter count");
  const Index nw = weight_net_.num_params();
  const Index nm = mean_net_.num_params();
  weight_net_.params() = theta.segment(0, nw);
  mean_net_.params() = theta.segment(nw, nm);
  log_std_ = theta.tail(log_std_.size()).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

void MdnIdm::fit_normalizer(const ReplayBuffer& buffer) {
  if (buffer.empty()) throw EmptyBufferError("MdnIdm::fit_normalizer: buffer is empty");
  std::vector<Index> all(static_cast<std::size_t>(buffer.size()));
  std::iota(all.begin(), all.end(), Index{0});
  const TripletBatch b = buffer.gather(all);
  Mat f(feature_dim(), b.size());
  f << b.s, b.s_next - b.s;
  Vec mean = f.rowwise().mean();
  Vec scale = ((f.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
  for (Index i = 0; i < scale.size(); ++i)
    if (!(scale[i] > 1e-8)) scale[i] = 1.0;
  set_normalizer(std::move(mean), std::move(scale));
}

void MdnIdm::set_normalizer(Vec mean, Vec scale) {
  require(mean.size() == feature_dim() && scale.size() == feature_dim(),
          "MdnIdm::set_normalizer: wrong feature dimension");
  require((scale.array() > 0.0).all(), "MdnIdm::set_normalizer: scales must be positive");
  feature_mean_ = std::move(mean);
  feature_scale_ = std::move(scale);
}

Mat MdnIdm::features(const Mat& s, const Mat& s_next) const {
  if (s.rows() != state_dim_ || s_next.rows() != state_dim_ || s.cols() != s_next.cols())
    throw ContractViolation("MdnIdm: state dimension mismatch");
  Mat f(feature_dim(), s.cols());
  f << s, s_next - s;
  if (has_normalizer()) {
    f.colwise() -= feature_mean_;
    f.array().colwise() /= feature_scale_.array();
  }
  return f;
}

MixtureParams MdnIdm::mixture(const Vec& s, const Vec& s_next) const {
  const Mat f = features(s, s_next);
  MixtureParams mp;
  mp.weights = softmax(weight_net_.forward(f).col(0));
  const Vec flat_means = mean_net_.forward(f).col(0);
  mp.means = Eigen::Map<const Mat>(flat_means.data(), action_dim_, num_components_);
  mp.log_std = Eigen::Map<const Mat>(log_std_.data(), action_dim_, num_components_);
  return mp;
}

Mat MdnIdm::predict_mean(const Mat& s, const Mat& s_next) const {
  const Mat f = features(s, s_next);
  const Mat logits = weight_net_.forward(f);
  const Mat means = mean_net_.forward(f);
  Mat out = Mat::Zero(action_dim_, s.cols());
  for (Index i = 0; i < s.cols(); ++i) {
    const Vec w = softmax(logits.col(i));
    for (int k = 0; k < num_components_; ++k)
      out.col(i) += w[k] * means.col(i).segment(k * action_dim_, action_dim_);
  }
  return out;
}

namespace {

double mixture_logprob(const MixtureParams& mp, const Vec& a) {
  const Index K = mp.weights.size();
  Vec terms(K);
  for (Index k = 0; k < K; ++k) {
    const DiagGaussian comp(mp.means.col(k), mp.log_std.col(k));
    terms[k] = std::log(mp.weights[k]) + diag_gaussian_logprob(comp, a);
  }
  return log_sum_exp(terms);
}

}  // namespace

double mdn_logprob(const MdnIdm& m, const Vec& s, const Vec& s_next, const Vec& a) {
  require(a.size() == m.action_dim(), "mdn_logprob: action dimension mismatch");
  return mixture_logprob(m.mixture(s, s_next), a);
}

LossGrad idm_nll(const MdnIdm& m, const Mat& s, const Mat& a, const Mat& s_next, bool with_grad) {
  require(a.rows() == m.action_dim() && a.cols() == s.cols(), "idm_nll: action shape mismatch");
  require(s.cols() > 0, "idm_nll: empty batch");
  const Index n = s.cols();
  const int K = m.num_components();
  const int A = m.action_dim();
  const Mat f = m.features(s, s_next);
  MlpCache wcache, mcache;
  // A single component has weight 1 whatever the logit, so the weight net
  // contributes neither value nor gradient.
  const Mat logits = K == 1 ? Mat::Zero(1, n) : m.weight_net().forward(f, wcache);
  const Mat means = m.mean_net().forward(f, mcache);
  const Vec& log_std = m.log_std();
  const Vec inv_var = (-2.0 * log_std.array()).exp();

  Mat d_logits(K, n), d_means(K * A, n);
  Vec d_log_std = Vec::Zero(K * A);
  Vec comp(K), resp(K);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double lse_logits = log_sum_exp(logits.col(i));
    for (int k = 0; k < K; ++k) {
      double lp = logits(k, i) - lse_logits;
      for (int d = 0; d < A; ++d) {
        const Index r = k * A + d;
        const double diff = a(d, i) - means(r, i);
        lp += -0.5 * diff * diff * inv_var[r] - log_std[r] - kHalfLog2Pi;
      }
      comp[k] = lp;
    }
    const double logp = log_sum_exp(comp);
    total -= logp;
    if (!with_grad) continue;
    resp = (comp.array() - logp).exp();
    for (int k = 0; k < K; ++k) {
      const double alpha = std::exp(logits(k, i) - lse_logits);
      d_logits(k, i) = (alpha - resp[k]) / static_cast<double>(n);
      for (int d = 0; d < A; ++d) {
        const Index r = k * A + d;
        const double diff = a(d, i) - means(r, i);
        d_means(r, i) = -resp[k] * diff * inv_var[r] / static_cast<double>(n);
        d_log_std[r] -= resp[k] * (diff * diff * inv_var[r] - 1.0) / static_cast<double>(n);
      }
    }
  }
  LossGrad out;
  out.value = finite_or_throw(total / static_cast<double>(n), "IDM negative log-likelihood");
  if (!with_grad) return out;
  const Index nw = m.weight_net().num_params();
  const Index nm = m.mean_net().num_params();
  out.grad = Vec::Zero(m.num_params());
  if (K > 1) m.weight_net().backward(wcache, d_logits, out.grad.segment(0, nw));
  m.mean_net().backward(mcache, d_means, out.grad.segment(nw, nm));
  out.grad.tail(K * A) = d_log_std;
  return out;
}

double idm_train_step(MdnIdm& m, const TripletBatch& batch, AdamState& optimizer) {
  require(batch.size() > 0, "idm_train_step: empty batch");
  const LossGrad lg = idm_nll(m, batch.s, batch.a, batch.s_next);
  Vec theta = m.packed();
  adam_step(optimizer, theta, lg.grad);
  m.unpack(theta);
  return lg.value;
}

IdmFitResult idm_fit(MdnIdm& m, AdamState& optimizer, const ReplayBuffer& buffer,
                     const IdmFitConfig& config, Rng& rng) {
  if (buffer.empty()) throw EmptyBufferError("idm_fit: replay buffer is empty");
  if (!m.has_normalizer()) m.fit_normalizer(buffer);

  const Index n = buffer.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  Index n_hold = static_cast<Index>(std::floor(config.holdout_fraction * static_cast<double>(n)));
  if (n >= 2) n_hold = std::clamp<Index>(n_hold, 1, n - 1);
  else n_hold = 0;
  // Early stopping scores at most kMaxHeldout of the held-out transitions.
  const std::vector<Index> hold(order.begin(), order.begin() + std::min(n_hold, kMaxHeldout));
  const std::vector<Index> train(order.begin() + n_hold, order.end());
  const TripletBatch held = buffer.gather(hold.empty() ? train : hold);

  const Index per_epoch =
      config.epoch_batches > 0
          ? config.epoch_batches
          : (static_cast<Index>(train.size()) + config.batch_size - 1) / config.batch_size;
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  std::vector<Index> idx(static_cast<std::size_t>(config.batch_size));

  IdmFitResult result;
  double best = idm_nll(m, held.s, held.a, held.s_next, false).value;
  result.heldout_nll = best;
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (Index b = 0; b < per_epoch; ++b) {
      for (auto& i : idx) i = train[pick(rng)];
      idm_train_step(m, buffer.gather(idx), optimizer);
    }
    result.epochs_run = epoch;
    result.heldout_nll = idm_nll(m, held.s, held.a, held.s_next, false).value;
    if (result.heldout_nll < best - config.tol) {
      best = result.heldout_nll;
      stale = 0;
    } else if (++stale >= config.patience) {
      result.converged = true;
      break;
    }
  }
  return result;
}

namespace {

Vec sample_mixture(const MixtureParams& mp, Rng& rng) {
  std::discrete_distribution<int> pick_comp(mp.weights.data(), mp.weights.data() + mp.weights.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k = pick_comp(rng);
  Vec a(mp.means.rows());
  for (Index d = 0; d < a.size(); ++d) a[d] = mp.means(d, k) + std::exp(mp.log_std(d, k)) * normal(rng);
  return a;
}

}  // namespace

KlEstimate idm_policy_kl(const MdnIdm& m, const DiagGaussian& policy, const Vec& s,
                         const Vec& s_next, Rng& rng, int samples) {
  require(policy.dim() == m.action_dim(), "idm_policy_kl: action dimension mismatch");
  const MixtureParams mp = m.mixture(s, s_next);
  KlEstimate est;
  if (m.num_components() == 1) {
    const DiagGaussian p(mp.means.col(0), mp.log_std.col(0));
    est.value = diag_gaussian_kl(p, policy);
    diag_gaussian_kl_grad_q(p, policy, est.d_mean, est.d_log_std);
    return est;
  }
  require(samples >= 2, "idm_policy_kl: need at least two Monte-Carlo samples");
  est.d_mean = Vec::Zero(policy.dim());
  est.d_log_std = Vec::Zero(policy.dim());
  double sum = 0.0, sum_sq = 0.0;
  Vec gm, gs;
  for (int j = 0; j < samples; ++j) {
    const Vec a = sample_mixture(mp, rng);
    const double diff = mixture_logprob(mp, a) - diag_gaussian_logprob(policy, a);
    sum += diff;
    sum_sq += diff * diff;
    diag_gaussian_logprob_grad(policy, a, gm, gs);
    est.d_mean -= gm;
    est.d_log_std -= gs;
  }
  const double M = static_cast<double>(samples);
  est.value = sum / M;
  est.std_error = std::sqrt(std::max(0.0, sum_sq / M - est.value * est.value) / (M - 1.0));
  est.d_mean /= M;
  est.d_log_std /= M;
  return est;
}

RegTargets make_reg_targets(const MdnIdm& m, const std::vector<Transition>& pairs, Rng& rng,
                            int samples) {
  RegTargets t;
  t.num_components = m.num_components();
  t.states.resize(m.state_dim(), static_cast<Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    t.states.col(static_cast<Index>(i)) = pairs[i].s;
    const MixtureParams mp = m.mixture(pairs[i].s, pairs[i].s_next);
    if (t.num_components == 1) {
      t.gaussians.emplace_back(mp.means.col(0), mp.log_std.col(0));
      continue;
    }
    Mat draws(m.action_dim(), samples);
    Vec logp(samples);
    for (int j = 0; j < samples; ++j) {
      draws.col(j) = sample_mixture(mp, rng);
      logp[j] = mixture_logprob(mp, draws.col(j));
    }
    t.samples.push_back(std::move(draws));
    t.sample_logp.push_back(std::move(logp));
  }
  return t;
}

}  // namespace maad
