#pragma once

// Mixture-density inverse dynamics model p(a | s, s'). Component weights and
// means come from two MLPs over standardized features [s, s' - s]; the
// per-component log standard deviations are free parameters that do not
// depend on the input.

#include <cstdint>
#include <vector>

#include "maad/data.hpp"
#include "maad/numkit.hpp"

namespace maad {

struct MixtureParams {
  Vec weights;  // K
  Mat means;    // action_dim x K
  Mat log_std;  // action_dim x K
};

class MdnIdm {
 public:
  MdnIdm() = default;
  MdnIdm(int state_dim, int action_dim, int num_components, int hidden, Rng& rng);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int num_components() const { return num_components_; }
  int feature_dim() const { return 2 * state_dim_; }

  const Mlp& weight_net() const { return weight_net_; }
  const Mlp& mean_net() const { return mean_net_; }
  const Vec& log_std() const { return log_std_; }  // component-major, K * action_dim

  /// Parameters packed as [weight_net | mean_net | log_std].
  Vec packed() const;
  void unpack(const Vec& theta);
  Index num_params() const;

  bool has_normalizer() const { return feature_scale_.size() > 0; }
  /// Freezes feature standardization statistics from the buffer contents.
  void fit_normalizer(const ReplayBuffer& buffer);
  void set_normalizer(Vec mean, Vec scale);
  const Vec& feature_mean() const { return feature_mean_; }
  const Vec& feature_scale() const { return feature_scale_; }

  /// Standardized features for a batch; columns are samples.
  Mat features(const Mat& s, const Mat& s_next) const;

  MixtureParams mixture(const Vec& s, const Vec& s_next) const;

  /// Mixture mean sum_k alpha_k mu_k for each column.
  Mat predict_mean(const Mat& s, const Mat& s_next) const;

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  int num_components_ = 1;
  Mlp weight_net_;
  Mlp mean_net_;
  Vec log_std_;
  Vec feature_mean_;
  Vec feature_scale_;
};

double mdn_logprob(const MdnIdm& m, const Vec& s, const Vec& s_next, const Vec& a);

/// Mean negative log-likelihood over the batch (columns) and, when
/// `with_grad`, its gradient with respect to the packed parameters.
LossGrad idm_nll(const MdnIdm& m, const Mat& s, const Mat& a, const Mat& s_next, bool with_grad = true);

/// One Adam step on the batch NLL; returns the pre-step loss.
double idm_train_step(MdnIdm& m, const TripletBatch& batch, AdamState& optimizer);

inline constexpr Index kMaxHeldout = 4096;

struct IdmFitConfig {
  Index batch_size = 64;
  double holdout_fraction = 0.1;
  double tol = 1e-3;
  int patience = 3;
  int max_epochs = 50;
  // Minibatches per epoch; 0 means one pass over the training split.
  Index epoch_batches = 0;
};

struct IdmFitResult {
  int epochs_run = 0;
  double heldout_nll = 0.0;
  bool converged = false;
};

/// Warm-started fit on replay minibatches with held-out early stopping.
IdmFitResult idm_fit(MdnIdm& m, AdamState& optimizer, const ReplayBuffer& buffer,
                     const IdmFitConfig& config, Rng& rng);

struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for the closed form
  Vec d_mean;              // gradient with respect to the policy mean
  Vec d_log_std;           // gradient with respect to the policy log_std
};

/// KL(p_idm(. | s, s') || policy). Closed form for K = 1; otherwise a
/// Monte-Carlo estimate from `samples` draws of the mixture. Gradients are
/// only reported for the policy side.
KlEstimate idm_policy_kl(const MdnIdm& m, const DiagGaussian& policy, const Vec& s,
                         const Vec& s_next, Rng& rng, int samples = 128);

/// Frozen view of the IDM on a fixed set of expert transitions, used as the
/// regularization target during a policy update.
struct RegTargets {
  int num_components = 1;
  Mat states;                      // state_dim x N
  std::vector<DiagGaussian> gaussians;  // K = 1
  std::vector<Mat> samples;        // K > 1: action_dim x M per pair
  std::vector<Vec> sample_logp;    // K > 1: log p_idm of each sample

  Index size() const { return states.cols(); }
};

RegTargets make_reg_targets(const MdnIdm& m, const std::vector<Transition>& pairs, Rng& rng,
                            int samples = 128);

}  // namespace maad
