#include "maad/numkit.hpp"

#include <cmath>
#include <string>

#include "maad/errors.hpp"

namespace maad {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x4d414144u};
  return Rng(seq);
}

double finite_or_throw(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(std::string("non-finite ") + what, value);
  return value;
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  require(sizes_.size() >= 2, "Mlp needs at least an input and an output size");
  Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    require(sizes_[l] > 0 && sizes_[l + 1] > 0, "Mlp layer sizes must be positive");
    w_offset_.push_back(offset);
    offset += static_cast<Index>(sizes_[l + 1]) * sizes_[l];
    b_offset_.push_back(offset);
    offset += sizes_[l + 1];
  }
  params_ = Vec::Zero(offset);
}

Mlp Mlp::random(std::vector<int> layer_sizes, Rng& rng, double output_scale) {
  Mlp net(std::move(layer_sizes));
  for (int l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
    const double scale = (l + 1 == net.num_layers()) ? output_scale : 1.0;
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = net.weight(l);
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = scale * u(rng);
    auto b = net.bias(l);
    for (Index i = 0; i < b.size(); ++i) b(i) = scale * u(rng);
  }
  return net;
}

Eigen::Map<const Mat> Mlp::weight(int layer) const {
  return {params_.data() + w_offset_[layer], sizes_[layer + 1], sizes_[layer]};
}
Eigen::Map<Mat> Mlp::weight(int layer) {
  return {params_.data() + w_offset_[layer], sizes_[layer + 1], sizes_[layer]};
}
Eigen::Map<const Vec> Mlp::bias(int layer) const {
  return {params_.data() + b_offset_[layer], sizes_[layer + 1]};
}
Eigen::Map<Vec> Mlp::bias(int layer) { return {params_.data() + b_offset_[layer], sizes_[layer + 1]}; }

void Mlp::check_input(const Mat& x) const {
  if (x.rows() != input_dim())
    throw ContractViolation("Mlp input dimension " + std::to_string(x.rows()) + " != " +
                            std::to_string(input_dim()));
}

Vec Mlp::apply(const Vec& x) const {
  check_input(x);
  Vec h = x;
  for (int l = 0; l < num_layers(); ++l) {
    Vec z = weight(l) * h + bias(l);
    h = (l + 1 < num_layers()) ? Vec(z.array().tanh()) : z;
  }
  return h;
}

Mat Mlp::forward(const Mat& x) const {
  check_input(x);
  Mat h = x;
  for (int l = 0; l < num_layers(); ++l) {
    Mat z = weight(l) * h;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) z = z.array().tanh();
    h = std::move(z);
  }
  return h;
}

Mat Mlp::forward(const Mat& x, MlpCache& cache) const {
  check_input(x);
  cache.activations.resize(num_layers() + 1);
  cache.activations[0] = x;
  for (int l = 0; l < num_layers(); ++l) {
    Mat z = weight(l) * cache.activations[l];
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) z = z.array().tanh();
    cache.activations[l + 1] = std::move(z);
  }
  return cache.activations.back();
}

Mat Mlp::backward(const MlpCache& cache, const Mat& d_out, Eigen::Ref<Vec> grad) const {
  require(grad.size() == num_params(), "Mlp::backward gradient buffer has wrong size");
  require(d_out.rows() == output_dim() && d_out.cols() == cache.activations[0].cols(),
          "Mlp::backward upstream gradient has wrong shape");
  Mat delta = d_out;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Mat& a_in = cache.activations[l];
    Eigen::Map<Mat> gw(grad.data() + w_offset_[l], sizes_[l + 1], sizes_[l]);
    Eigen::Map<Vec> gb(grad.data() + b_offset_[l], sizes_[l + 1]);
    gw.noalias() += delta * a_in.transpose();
    gb += delta.rowwise().sum();
    Mat d_a = weight(l).transpose() * delta;
    if (l == 0) return d_a;
    delta = d_a.array() * (1.0 - a_in.array().square());
  }
  return delta;
}

Mat Mlp::input_gradients(const Mat& x) const {
  require(output_dim() == 1, "input_gradients needs a scalar-output network");
  MlpCache cache;
  forward(x, cache);
  Mat e = Mat::Ones(1, x.cols());
  for (int j = num_layers() - 2; j >= 0; --j) {
    const Mat& h = cache.activations[j + 1];
    e = (weight(j + 1).transpose() * e).array() * (1.0 - h.array().square());
  }
  return weight(0).transpose() * e;
}

double Mlp::input_grad_penalty(const Mat& x, double scale, Eigen::Ref<Vec> grad) const {
  require(output_dim() == 1, "input_grad_penalty needs a scalar-output network");
  require(grad.size() == num_params(), "input_grad_penalty gradient buffer has wrong size");
  const int L = num_layers();
  const Index n = x.cols();
  MlpCache cache;
  forward(x, cache);

  // Input-gradient pass. e[j] is d out / d z_j, c[j] = W_{j+1}^T e[j+1],
  // t[j] = tanh'(z_j) for hidden layers j < L-1.
  std::vector<Mat> e(L), c(L), t(L);
  e[L - 1] = Mat::Ones(1, n);
  for (int j = L - 2; j >= 0; --j) {
    t[j] = 1.0 - cache.activations[j + 1].array().square();
    c[j] = weight(j + 1).transpose() * e[j + 1];
    e[j] = c[j].array() * t[j].array();
  }
  const Mat g = weight(0).transpose() * e[0];

  double penalty = 0.0;
  Mat g_bar(g.rows(), n);
  for (Index i = 0; i < n; ++i) {
    const double norm = g.col(i).norm();
    penalty += (norm - 1.0) * (norm - 1.0);
    const double coef = norm > 0.0 ? scale * 2.0 * (norm - 1.0) / (norm * n) : 0.0;
    g_bar.col(i) = coef * g.col(i);
  }
  penalty /= static_cast<double>(n);

  auto gw = [&](int l) {
    return Eigen::Map<Mat>(grad.data() + w_offset_[l], sizes_[l + 1], sizes_[l]);
  };
  auto gb = [&](int l) { return Eigen::Map<Vec>(grad.data() + b_offset_[l], sizes_[l + 1]); };

  // Reverse through g = W_0^T e_0 and the input-gradient recursion.
  gw(0).noalias() += e[0] * g_bar.transpose();
  std::vector<Mat> h_bar(L);
  Mat e_bar = weight(0) * g_bar;
  for (int j = 0; j <= L - 2; ++j) {
    const Mat c_bar = e_bar.array() * t[j].array();
    const Mat t_bar = e_bar.array() * c[j].array();
    gw(j + 1).noalias() += e[j + 1] * c_bar.transpose();
    if (j + 1 < L - 1) e_bar = weight(j + 1) * c_bar;
    h_bar[j] = -2.0 * t_bar.array() * cache.activations[j + 1].array();
  }

  // Ordinary reverse pass through the forward graph with the injected
  // activation adjoints. The network output itself does not enter the penalty.
  Mat z_bar;
  for (int j = L - 2; j >= 0; --j) {
    Mat a_bar = h_bar[j];
    if (j + 1 <= L - 2) a_bar.noalias() += weight(j + 1).transpose() * z_bar;
    z_bar = a_bar.array() * t[j].array();
    gw(j).noalias() += z_bar * cache.activations[j].transpose();
    gb(j) += z_bar.rowwise().sum();
  }
  return penalty;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamState make_adam(Index num_params, double learning_rate) {
  require(learning_rate > 0.0, "Adam learning rate must be positive");
  AdamState s;
  s.first_moment = Vec::Zero(num_params);
  s.second_moment = Vec::Zero(num_params);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(AdamState& s, Eigen::Ref<Vec> params, const Vec& grads) {
  if (params.size() != grads.size() || s.first_moment.size() != params.size())
    throw ContractViolation("adam_step: shape mismatch between params, grads and state");
  if (!grads.allFinite()) {
    for (Index i = 0; i < grads.size(); ++i) finite_or_throw(grads[i], "gradient");
  }
  s.step_count += 1;
  s.first_moment = s.beta1 * s.first_moment + (1.0 - s.beta1) * grads;
  s.second_moment = s.beta2 * s.second_moment + (1.0 - s.beta2) * grads.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
  params.array() -= s.learning_rate * (s.first_moment.array() / bc1) /
                    ((s.second_moment.array() / bc2).sqrt() + s.epsilon);
}

double global_norm(const Vec& grads) { return grads.norm(); }

double clip_global_norm(Vec& grads, double max_norm) {
  require(max_norm > 0.0, "clip_global_norm: max_norm must be positive");
  const double norm = grads.norm();
  if (norm > max_norm) grads *= max_norm / norm;
  return norm;
}

// ---------------------------------------------------------------------------
// Diagonal Gaussian

DiagGaussian::DiagGaussian(Vec m, Vec ls) : mean(std::move(m)), log_std(std::move(ls)) {
  require(mean.size() == log_std.size(), "DiagGaussian: mean and log_std dimensions differ");
  log_std = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

double diag_gaussian_logprob(const DiagGaussian& d, const Vec& a) {
  require(a.size() == d.dim(), "diag_gaussian_logprob: dimension mismatch");
  const auto z = (a - d.mean).array() * (-d.log_std.array()).exp();
  return -0.5 * z.square().sum() - d.log_std.sum() - kHalfLog2Pi * static_cast<double>(d.dim());
}

void diag_gaussian_logprob_grad(const DiagGaussian& d, const Vec& a, Vec& d_mean, Vec& d_log_std) {
  require(a.size() == d.dim(), "diag_gaussian_logprob_grad: dimension mismatch");
  const Vec inv_var = (-2.0 * d.log_std.array()).exp();
  const Vec diff = a - d.mean;
  d_mean = diff.cwiseProduct(inv_var);
  d_log_std = (diff.array().square() * inv_var.array() - 1.0).matrix();
}

double diag_gaussian_kl(const DiagGaussian& p, const DiagGaussian& q) {
  require(p.dim() == q.dim(), "diag_gaussian_kl: dimension mismatch");
  const auto var_p = (2.0 * p.log_std.array()).exp();
  const auto inv_var_q = (-2.0 * q.log_std.array()).exp();
  const auto diff2 = (p.mean - q.mean).array().square();
  return ((q.log_std - p.log_std).array() + 0.5 * (var_p + diff2) * inv_var_q - 0.5).sum();
}

void diag_gaussian_kl_grad_q(const DiagGaussian& p, const DiagGaussian& q, Vec& d_mean,
                             Vec& d_log_std) {
  require(p.dim() == q.dim(), "diag_gaussian_kl_grad_q: dimension mismatch");
  const Vec var_p = (2.0 * p.log_std.array()).exp();
  const Vec inv_var_q = (-2.0 * q.log_std.array()).exp();
  const Vec diff = q.mean - p.mean;
  d_mean = diff.cwiseProduct(inv_var_q);
  d_log_std = (1.0 - (var_p.array() + diff.array().square()) * inv_var_q.array()).matrix();
}

double log_sum_exp(const Eigen::Ref<const Vec>& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

Vec softmax(const Eigen::Ref<const Vec>& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

}  // namespace maad
