#pragma once

// Small differentiable-computation kit: tanh MLPs with hand-written reverse
// mode, Adam, global-norm clipping and diagonal-Gaussian math. Every model in
// the project stores its parameters as one flat Eigen vector so optimizers,
// clipping, checkpoints and finite-difference checks all work on the same
// representation.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace maad {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

inline constexpr double kLogStdMin = -10.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

/// Seeds a generator from a (seed, stream) pair so independent consumers
/// (workers, initializers, samplers) never share a random stream.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

struct LossGrad {
  double value = 0.0;
  Vec grad;
};

/// Throws NumericError when `value` is NaN or infinite.
double finite_or_throw(double value, const char* what);

struct MlpCache {
  // activations[0] is the input; activations[l] the output of layer l.
  std::vector<Mat> activations;
};

/// Fully connected network, tanh on hidden layers and identity on the output.
class Mlp {
 public:
  Mlp() = default;
  /// All parameters zero.
  explicit Mlp(std::vector<int> layer_sizes);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init; the last layer is scaled
  /// by `output_scale`.
  static Mlp random(std::vector<int> layer_sizes, Rng& rng, double output_scale = 1.0);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  Index num_params() const { return params_.size(); }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<Mat> weight(int layer);
  Eigen::Map<const Vec> bias(int layer) const;
  Eigen::Map<Vec> bias(int layer);

  Vec apply(const Vec& x) const;
  /// Batched forward; columns of `x` are samples.
  Mat forward(const Mat& x) const;
  Mat forward(const Mat& x, MlpCache& cache) const;

  /// Reverse pass for a forward recorded in `cache`. Adds dL/dparams into
  /// `grad` (length num_params()) and returns dL/dinput.
  Mat backward(const MlpCache& cache, const Mat& d_out, Eigen::Ref<Vec> grad) const;

  /// For a scalar-output network: mean over samples of (||d out / d x|| - 1)^2.
  /// Adds `scale` times its parameter gradient into `grad` (second-order
  /// reverse pass through the input-gradient computation).
  double input_grad_penalty(const Mat& x, double scale, Eigen::Ref<Vec> grad) const;

  /// Per-sample input gradients of a scalar-output network (columns).
  Mat input_gradients(const Mat& x) const;

 private:
  void check_input(const Mat& x) const;

  std::vector<int> sizes_;
  std::vector<Index> w_offset_;
  std::vector<Index> b_offset_;
  Vec params_;
};

struct AdamState {
  Vec first_moment;
  Vec second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(Index num_params, double learning_rate);

/// Bias-corrected Adam update, in place.
void adam_step(AdamState& state, Eigen::Ref<Vec> params, const Vec& grads);

double global_norm(const Vec& grads);

/// Rescales `grads` so that its L2 norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_global_norm(Vec& grads, double max_norm);

struct DiagGaussian {
  Vec mean;
  Vec log_std;

  DiagGaussian() = default;
  /// Clamps log_std into [kLogStdMin, kLogStdMax].
  DiagGaussian(Vec mean, Vec log_std);

  Index dim() const { return mean.size(); }
  Vec std() const { return log_std.array().exp(); }
};

double diag_gaussian_logprob(const DiagGaussian& d, const Vec& a);

/// d logprob / d mean and d logprob / d log_std.
void diag_gaussian_logprob_grad(const DiagGaussian& d, const Vec& a, Vec& d_mean, Vec& d_log_std);

double diag_gaussian_kl(const DiagGaussian& p, const DiagGaussian& q);

/// Gradient of KL(p || q) with respect to q's mean and log_std.
void diag_gaussian_kl_grad_q(const DiagGaussian& p, const DiagGaussian& q, Vec& d_mean,
                             Vec& d_log_std);

double log_sum_exp(const Eigen::Ref<const Vec>& x);
Vec softmax(const Eigen::Ref<const Vec>& logits);

}  // namespace maad
