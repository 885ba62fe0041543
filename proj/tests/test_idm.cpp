#include <doctest.h>

#include "maad/errors.hpp"
#include "maad/idm.hpp"
#include "test_util.hpp"

using namespace maad;
using namespace maad::testing;

namespace {

// 1-D actions, 2-D states, K = 2 with equal weights and means (+1, -1).
MdnIdm symmetric_pair() {
  Rng rng = make_rng(0, 0);
  MdnIdm m(2, 1, 2, 8, rng);
  Vec theta = Vec::Zero(m.num_params());
  const Index mean_end = m.weight_net().num_params() + m.mean_net().num_params();
  theta[mean_end - 2] = 1.0;
  theta[mean_end - 1] = -1.0;
  m.unpack(theta);
  return m;
}

MdnIdm random_idm(int K, Rng& rng) {
  MdnIdm m(3, 2, K, 6, rng);
  Vec theta = m.packed();
  theta.tail(m.log_std().size()) = random_vector(m.log_std().size(), rng, 0.3);
  m.unpack(theta);
  return m;
}

// Noisy linear inverse map, so the achievable NLL has a floor.
ReplayBuffer noisy_buffer(Index n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> noise(0.0, 0.1);
  ReplayBuffer buf(2, 1, n);
  for (Index i = 0; i < n; ++i) {
    const Vec s = random_vector(2, rng);
    const Vec ds = random_vector(2, rng, 0.5);
    buf.push(Transition{s, Vec::Constant(1, ds[0] - 0.5 * ds[1] + noise(rng)), s + ds});
  }
  return buf;
}

}  // namespace

TEST_CASE("mixture weights sum to one") {
  Rng rng = make_rng(1, 0);
  const MdnIdm m = random_idm(3, rng);
  for (int i = 0; i < 1000; ++i) {
    const MixtureParams mp = m.mixture(random_vector(3, rng, 3.0), random_vector(3, rng, 3.0));
    CHECK(std::abs(mp.weights.sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("mdn_logprob: two symmetric components") {
  const MdnIdm m = symmetric_pair();
  const double v = mdn_logprob(m, Vec::Zero(2), Vec::Zero(2), Vec::Ones(1));
  const double n_near = std::exp(-kHalfLog2Pi), n_far = std::exp(-2.0 - kHalfLog2Pi);
  CHECK(v == doctest::Approx(std::log(0.5 * n_near + 0.5 * n_far)).epsilon(1e-12));
  CHECK(v == doctest::Approx(-1.4851577).epsilon(1e-7));
  CHECK(std::isfinite(mdn_logprob(m, Vec::Zero(2), Vec::Zero(2), Vec::Constant(1, 1e4))));
  CHECK_THROWS_AS(mdn_logprob(m, Vec::Zero(2), Vec::Zero(2), Vec::Ones(2)), ContractViolation);
  CHECK_THROWS_AS(mdn_logprob(m, Vec::Zero(3), Vec::Zero(3), Vec::Ones(1)), ContractViolation);
}

TEST_CASE("mdn_logprob: one component reduces to a Gaussian") {
  Rng rng = make_rng(2, 0);
  const MdnIdm m = random_idm(1, rng);
  for (int i = 0; i < 20; ++i) {
    const Vec s = random_vector(3, rng), sn = random_vector(3, rng), a = random_vector(2, rng);
    const MixtureParams mp = m.mixture(s, sn);
    const DiagGaussian g(mp.means.col(0), mp.log_std.col(0));
    CHECK(mdn_logprob(m, s, sn, a) == doctest::Approx(diag_gaussian_logprob(g, a)).epsilon(1e-12));
  }
}

TEST_CASE("idm_nll: batch mean matches mdn_logprob and gradients match finite differences") {
  Rng rng = make_rng(3, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 1 + trial % 3;
    MdnIdm m = random_idm(K, rng);
    m.set_normalizer(random_vector(6, rng, 0.2), Vec::Constant(6, 1.5));
    const Mat s = random_matrix(3, 5, rng), sn = random_matrix(3, 5, rng), a = random_matrix(2, 5, rng);
    const LossGrad lg = idm_nll(m, s, a, sn);
    double direct = 0.0;
    for (Index i = 0; i < 5; ++i) direct -= mdn_logprob(m, s.col(i), sn.col(i), a.col(i)) / 5.0;
    CHECK(lg.value == doctest::Approx(direct).epsilon(1e-12));
    const auto f = [&](const Vec& theta) {
      MdnIdm c = m;
      c.unpack(theta);
      return idm_nll(c, s, a, sn, false).value;
    };
    CHECK(max_rel_error(lg.grad, numeric_gradient(f, m.packed(), 1e-5)) <= 1e-4);
  }
}

TEST_CASE("idm_train_step lowers the loss on a fixed batch") {
  Rng rng = make_rng(4, 0);
  const ReplayBuffer buf = noisy_buffer(64, 4);
  std::vector<Index> all(64);
  std::iota(all.begin(), all.end(), Index{0});
  const TripletBatch batch = buf.gather(all);
  MdnIdm m(2, 1, 1, 16, rng);
  m.fit_normalizer(buf);
  AdamState opt = make_adam(m.num_params(), 1e-3);
  double window_start = idm_nll(m, batch.s, batch.a, batch.s_next, false).value;
  for (int w = 0; w < 5; ++w) {
    for (int i = 0; i < 100; ++i) idm_train_step(m, batch, opt);
    const double now = idm_nll(m, batch.s, batch.a, batch.s_next, false).value;
    CHECK(now <= window_start);
    window_start = now;
  }
  CHECK_THROWS_AS(idm_train_step(m, TripletBatch{}, opt), ContractViolation);
}

TEST_CASE("idm_fit: warm start stops quickly and empty buffers are rejected") {
  Rng rng = make_rng(5, 0);
  const ReplayBuffer buf = noisy_buffer(4000, 5);
  MdnIdm m(2, 1, 1, 32, rng);
  AdamState opt = make_adam(m.num_params(), 1e-3);
  IdmFitConfig cfg;
  cfg.max_epochs = 200;
  cfg.batch_size = 256;
  const IdmFitResult first = idm_fit(m, opt, buf, cfg, rng);
  CHECK(first.converged);
  const IdmFitResult second = idm_fit(m, opt, buf, cfg, rng);
  CHECK(second.epochs_run <= cfg.patience + 1);
  // Unit-variance start is about 1.4; the noise floor is about -1.38.
  CHECK(second.heldout_nll < -0.5);

  const ReplayBuffer empty(2, 1, 10);
  CHECK_THROWS_AS(idm_fit(m, opt, empty, cfg, rng), EmptyBufferError);
}

TEST_CASE("idm_policy_kl: closed form for one component") {
  Rng rng = make_rng(6, 0);
  const MdnIdm m = random_idm(1, rng);
  const Vec s = random_vector(3, rng), sn = random_vector(3, rng);
  const MixtureParams mp = m.mixture(s, sn);
  const DiagGaussian same(mp.means.col(0), mp.log_std.col(0));
  CHECK(idm_policy_kl(m, same, s, sn, rng).value == 0.0);
  const DiagGaussian other(random_vector(2, rng), random_vector(2, rng, 0.3));
  const KlEstimate est = idm_policy_kl(m, other, s, sn, rng);
  CHECK(est.value == diag_gaussian_kl(same, other));
  CHECK(est.std_error == 0.0);
  CHECK_THROWS_AS(idm_policy_kl(m, DiagGaussian(Vec::Zero(3), Vec::Zero(3)), s, sn, rng),
                  ContractViolation);
}

TEST_CASE("idm_policy_kl: Monte Carlo agrees with quadrature for two components") {
  const MdnIdm m = symmetric_pair();
  const DiagGaussian policy(Vec::Constant(1, 0.3), Vec::Constant(1, std::log(1.4)));
  Rng rng = make_rng(7, 0);
  const KlEstimate est = idm_policy_kl(m, policy, Vec::Zero(2), Vec::Zero(2), rng, 100000);

  // Trapezoid over [-11, 11], which is +-10 sigma around both means.
  const int n = 20000;
  const double lo = -11.0, hi = 11.0, h = (hi - lo) / n;
  double kl = 0.0;
  for (int i = 0; i <= n; ++i) {
    const Vec a = Vec::Constant(1, lo + i * h);
    const double lp = mdn_logprob(m, Vec::Zero(2), Vec::Zero(2), a);
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    kl += w * h * std::exp(lp) * (lp - diag_gaussian_logprob(policy, a));
  }
  CHECK(std::abs(est.value - kl) <= 3.0 * est.std_error);
  CHECK(est.value >= -3.0 * est.std_error);
}

TEST_CASE("make_reg_targets freezes the current IDM") {
  Rng rng = make_rng(8, 0);
  MdnIdm m = random_idm(1, rng);
  std::vector<Transition> pairs;
  for (int i = 0; i < 4; ++i) pairs.push_back({random_vector(3, rng), Vec(), random_vector(3, rng)});
  const RegTargets t = make_reg_targets(m, pairs, rng);
  REQUIRE(t.size() == 4);
  const Vec before = t.gaussians[2].mean;
  m.unpack(m.packed() * 2.0);
  CHECK(t.gaussians[2].mean == before);

  MdnIdm two = random_idm(2, rng);
  const RegTargets t2 = make_reg_targets(two, pairs, rng, 16);
  REQUIRE(t2.samples.size() == 4);
  CHECK(t2.samples[0].cols() == 16);
  CHECK(t2.sample_logp[0].size() == 16);
}
