#include <doctest.h>

#include "bandit.hpp"
#include "ppo_oracles.hpp"
#include "smat/error.hpp"
#include "smat/policy.hpp"
#include "smat/ppo.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace smat;
using fixture::make_bandit;
using fixture::bandit_batch;
using fixture::BanditSetup;

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Surrogate loss as a function of the flat parameter vector.
double loss_at(PolicyNet net, const Vec& params, const Mat& obs, const Mat& act, const Vec& old_lp, const Vec& adv,
               double clip, double ent) {
  assign_params(net, params);
  return surrogate_loss(net, obs, act, old_lp, adv, clip, ent, false).loss;
}

}  // namespace

TEST_CASE("forward pass") {
  Rng rng(1);
  SUBCASE("zero weights give zero output") {
    PolicyNet net = make_policy({5, {8, 4}, 3, Squash::kNone, true, -0.5, 1.0}, rng);
    for (auto& w : net.weights) w.setZero();
    const ForwardResult r = forward(net, Vec::Random(5));
    CHECK(r.mean == Vec::Zero(3));
    CHECK(r.log_std.size() == 3);
  }
  SUBCASE("single identity layer passes the input through") {
    PolicyNet net = make_policy({4, {}, 4, Squash::kNone, true, -0.5, 1.0}, rng);
    net.weights[0] = Mat::Identity(4, 4);
    const Vec x = Vec::Random(4);
    CHECK(forward(net, x).mean == x);
  }
  SUBCASE("matches a triple-loop oracle") {
    for (int trial = 0; trial < 20; ++trial) {
      const PolicyNet net = make_policy({7, {16, 9}, 3, Squash::kNone, true, -0.5, 1.0}, rng);
      const Vec x = Vec::Random(7) * 2.0;
      const Vec got = forward(net, x).mean;
      const std::vector<double> want = oracle::mlp(net, to_std(x));
      for (int i = 0; i < 3; ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12);
    }
  }
  SUBCASE("critic value and dimension checks") {
    const PolicyNet critic = make_policy(critic_spec(6), rng);
    const ForwardResult r = forward(critic, Vec::Ones(6));
    CHECK(r.value == r.mean[0]);
    CHECK(r.log_std.size() == 0);
    CHECK_THROWS_AS(forward(critic, Vec::Ones(5)), DimensionMismatch);
  }
  SUBCASE("default layer sizes") {
    CHECK(make_policy(human_actor_spec(27, 10), rng).layer_sizes() == std::vector<int>{27, 256, 128, 10});
    CHECK(make_policy(exo_actor_spec(), rng).layer_sizes() == std::vector<int>{18, 128, 64, 2});
    CHECK(make_policy(critic_spec(43), rng).layer_sizes() == std::vector<int>{43, 256, 128, 1});
  }
}

TEST_CASE("flatten and assign round-trip") {
  Rng rng(2);
  PolicyNet a = make_policy({3, {5}, 2, Squash::kSymmetric, true, -0.5, 1.0}, rng);
  const Vec flat = flatten_params(a);
  CHECK(flat.size() == a.num_params());
  PolicyNet b = make_policy({3, {5}, 2, Squash::kSymmetric, true, -0.5, 1.0}, rng);
  assign_params(b, flat);
  CHECK(b == a);
  CHECK_THROWS_AS(assign_params(b, Vec::Zero(3)), DimensionMismatch);
}

TEST_CASE("GAE") {
  SUBCASE("zero rewards and values") {
    const GaeResult g = compute_gae(Vec::Zero(5), Vec::Zero(6), Vec::Zero(5), 0.99, 0.95);
    CHECK(g.advantages == Vec::Zero(5));
  }
  SUBCASE("lambda 1 equals the discounted sum") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 1 + trial * 3;
      Vec r(n), v(n + 1);
      for (int i = 0; i < n; ++i) r[i] = n01(rng);
      for (int i = 0; i <= n; ++i) v[i] = n01(rng);
      const GaeResult g = compute_gae(r, v, Vec::Zero(n), 0.97, 1.0);
      const auto want = oracle::discounted_advantage(to_std(r), to_std(v), 0.97);
      for (int i = 0; i < n; ++i) CHECK(std::abs(g.advantages[i] - want[i]) <= 1e-9);
      CHECK((g.returns - (g.advantages + v.head(n))).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("three-step example") {
    const GaeResult g = compute_gae(Vec::Ones(3), Vec::Zero(4), Vec::Zero(3), 0.99, 0.95);
    // a2 = 1, a1 = 1 + 0.9405, a0 = 1 + 0.9405 a1
    CHECK(g.advantages[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(g.advantages[1] - 1.9405) < 1e-8);
    CHECK(std::abs(g.advantages[0] - 2.82504025) < 1e-8);
  }
  SUBCASE("terminations cut the recursion") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    Vec r(12), v(13), d = Vec::Zero(12);
    for (int i = 0; i < 12; ++i) r[i] = n01(rng);
    for (int i = 0; i <= 12; ++i) v[i] = n01(rng);
    d[4] = d[9] = 1.0;
    const GaeResult g = compute_gae(r, v, d, 0.99, 0.95);
    const auto want = oracle::gae(to_std(r), to_std(v), to_std(d), 0.99, 0.95);
    for (int i = 0; i < 12; ++i) CHECK(std::abs(g.advantages[i] - want[i]) <= 1e-12);
    CHECK(g.advantages[4] == doctest::Approx(r[4] - v[4]));
  }
  SUBCASE("buffer form runs per environment") {
    RolloutBuffer buf(6, 3, 1, 1, 1, 1, 1);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int i = 0; i < buf.size(); ++i) {
      buf.rewards[i] = n01(rng);
      buf.values[i] = n01(rng);
    }
    buf.dones[RolloutBuffer::index(2, 1, 3)] = 1.0;
    buf.last_values << 0.5, -0.2, 1.0;
    compute_gae(buf, 0.99, 0.95);
    for (int e = 0; e < 3; ++e) {
      std::vector<double> r, v, d;
      for (int t = 0; t < 6; ++t) {
        const int i = RolloutBuffer::index(t, e, 3);
        r.push_back(buf.rewards[i]);
        v.push_back(buf.values[i]);
        d.push_back(buf.dones[i]);
      }
      v.push_back(buf.last_values[e]);
      const auto want = oracle::gae(r, v, d, 0.99, 0.95);
      for (int t = 0; t < 6; ++t) CHECK(std::abs(buf.advantages[RolloutBuffer::index(t, e, 3)] - want[t]) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(compute_gae(Vec::Zero(3), Vec::Zero(3), Vec::Zero(3), 0.99, 0.95), DimensionMismatch);
}

TEST_CASE("advantage normalization") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(3.0, 7.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vec a(100 + 50 * trial);
    for (auto& x : a) x = n(rng);
    const Vec z = normalize_advantages(a);
    CHECK(std::abs(z.mean()) < 1e-10);
    CHECK(std::abs(std::sqrt(z.squaredNorm() / z.size()) - 1.0) < 1e-10);
  }
  CHECK(normalize_advantages(Vec::Constant(4, 2.0)) == Vec::Zero(4));
}

TEST_CASE("surrogate gradient matches finite differences") {
  Rng rng(7);
  auto check_net = [&](const NetSpec& spec, double ent) {
    PolicyNet net = make_policy(spec, rng);
    const int n = 16;
    const Mat obs = Mat::Random(spec.input, n);
    const Mat mean = forward_batch(net, obs);
    Mat act = mean + 0.3 * Mat::Random(spec.output, n);
    // old log-probs put the ratios near 1 so few samples sit on a clip edge
    Vec old_lp = gaussian_log_prob(mean, net.log_std, act).array() + 0.02 * Vec::Random(n).array();
    Vec adv = Vec::Random(n);
    const double clip = 0.15;
    const SurrogateResult s = surrogate_loss(net, obs, act, old_lp, adv, clip, ent);
    const Vec p = flatten_params(net);
    const double h = 1e-6;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Vec pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      const double fd = (loss_at(net, pp, obs, act, old_lp, adv, clip, ent) -
                         loss_at(net, pm, obs, act, old_lp, adv, clip, ent)) /
                        (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(s.grad[i]), 1e-3});
      worst = std::max(worst, std::abs(fd - s.grad[i]) / scale);
    }
    return worst;
  };
  SUBCASE("two-parameter toy policy") {
    // 1 input, 1 output, no hidden layer: weight and bias (plus log-std)
    const double worst = check_net({1, {}, 1, Squash::kNone, true, -0.5, 1.0}, 0.0);
    MESSAGE("toy relative error " << worst);
    CHECK(worst < 1e-5);
  }
  SUBCASE("small tanh network with entropy bonus") {
    const double worst = check_net({4, {6, 5}, 2, Squash::kNone, true, -0.3, 1.0}, 0.01);
    MESSAGE("mlp relative error " << worst);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("value loss gradient matches finite differences") {
  Rng rng(8);
  PolicyNet critic = make_policy({3, {5}, 1, Squash::kNone, false, 0.0, 1.0}, rng);
  const Mat obs = Mat::Random(3, 10);
  const Vec ret = Vec::Random(10);
  const ValueLossResult v = value_loss(critic, obs, ret, 0.5);
  const Vec p = flatten_params(critic);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Vec pp = p, pm = p;
    pp[i] += 1e-6;
    pm[i] -= 1e-6;
    PolicyNet a = critic, b = critic;
    assign_params(a, pp);
    assign_params(b, pm);
    const double fd = (value_loss(a, obs, ret, 0.5, false).loss - value_loss(b, obs, ret, 0.5, false).loss) / 2e-6;
    CHECK(std::abs(fd - v.grad[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("ratio clipping") {
  Rng rng(9);
  PolicyNet net = make_policy({1, {}, 1, Squash::kNone, true, -0.5, 1.0}, rng);
  const Mat obs = Mat::Ones(1, 1);
  const Mat mean = forward_batch(net, obs);
  const Mat act = mean.array() + 0.2;
  const double lp = gaussian_log_prob(mean, net.log_std, act)[0];

  SUBCASE("ratio 2 with positive advantage uses 1 + clip") {
    const Vec old_lp = Vec::Constant(1, lp - std::log(2.0));
    const SurrogateResult s = surrogate_loss(net, obs, act, old_lp, Vec::Constant(1, 3.0), 0.15, 0.0);
    CHECK(s.policy_loss == doctest::Approx(-1.15 * 3.0).epsilon(1e-12));
    CHECK(s.clip_fraction == 1.0);
    CHECK(s.grad.head(2).norm() == 0.0);  // clipped branch carries no gradient
  }
  SUBCASE("ratio 0.5 with positive advantage is not clipped from below") {
    const Vec old_lp = Vec::Constant(1, lp - std::log(0.5));
    const SurrogateResult s = surrogate_loss(net, obs, act, old_lp, Vec::Constant(1, 3.0), 0.15, 0.0);
    CHECK(s.policy_loss == doctest::Approx(-0.5 * 3.0).epsilon(1e-12));
    CHECK(s.grad.head(2).norm() > 0.0);
  }
  SUBCASE("objective agrees with the oracle on mixed batches") {
    const int n = 40;
    const Mat o = Mat::Random(1, n);
    const Mat m = forward_batch(net, o);
    const Mat a = m + 0.5 * Mat::Random(1, n);
    const Vec new_lp = gaussian_log_prob(m, net.log_std, a);
    const Vec old = new_lp + 0.4 * Vec::Random(n);
    const Vec adv = Vec::Random(n);
    const SurrogateResult s = surrogate_loss(net, o, a, old, adv, 0.15, 0.0, false);
    CHECK(-s.policy_loss == doctest::Approx(oracle::clipped_objective(to_std(new_lp), to_std(old), to_std(adv), 0.15)));
    int clipped = 0;
    for (int i = 0; i < n; ++i) clipped += std::abs(std::exp(new_lp[i] - old[i]) - 1.0) > 0.15;
    CHECK(s.clip_fraction == doctest::Approx(clipped / double(n)));
    double kl = 0.0;
    for (int i = 0; i < n; ++i) {
      const double lr = new_lp[i] - old[i];
      kl += std::exp(lr) - 1.0 - lr;
    }
    CHECK(s.approx_kl == doctest::Approx(kl / n));
    CHECK(s.approx_kl >= 0.0);
  }
}

TEST_CASE("Adam and gradient clipping") {
  Adam adam;
  adam.lr = 0.1;
  Vec p = Vec::Constant(2, 1.0);
  const Vec g(Eigen::Vector2d(0.5, -2.0));
  adam.step(p, g);
  // first bias-corrected step moves each parameter by lr * sign(g) (up to eps)
  CHECK(p[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-7));
  CHECK(p[1] == doctest::Approx(1.0 + 0.1).epsilon(1e-7));

  Vec big(Eigen::Vector2d(3.0, 4.0));
  CHECK(clip_grad_norm(big, 0.5) == doctest::Approx(5.0));
  CHECK(big.norm() == doctest::Approx(0.5).epsilon(1e-5));
  Vec small(Eigen::Vector2d(0.1, 0.1));
  const Vec before = small;
  clip_grad_norm(small, 0.5);
  CHECK(small == before);
}


TEST_CASE("two-armed bandit converges to the better arm") {
  BanditSetup s = make_bandit(10);
  Rng rng(11);
  TrainMask mask{true, false, false};
  auto prob_a = [&] {
    const double m = forward_batch(s.actor, Mat::Ones(1, 1))(0, 0);
    return normal_cdf(m / std::exp(s.actor.log_std[0]));
  };
  CHECK(prob_a() < 0.5);
  int updates = 0;
  while (updates < 200 && prob_a() <= 0.95) {
    const RolloutBuffer buf = bandit_batch(s, s.cfg.n_envs, rng);
    ppo_update(s.actor, s.exo, s.critic, s.opt, buf, s.cfg, mask, rng);
    ++updates;
  }
  MESSAGE("P(A) = " << prob_a() << " after " << updates << " updates");
  CHECK(prob_a() > 0.95);
}

TEST_CASE("frozen actors are bitwise unchanged") {
  Rng rng(12);
  PolicyNet human = make_policy({5, {8}, 3, Squash::kUnit, true, -0.5, 0.01}, rng);
  PolicyNet exo = make_policy({4, {6}, 2, Squash::kSymmetric, true, -0.5, 0.01}, rng);
  PolicyNet critic = make_policy({6, {8}, 1, Squash::kNone, false, 0.0, 1.0}, rng);
  RolloutBuffer buf(16, 4, 5, 3, 4, 2, 6);
  buf.human.obs.setRandom();
  buf.exo.obs.setRandom();
  buf.critic_obs.setRandom();
  const BatchSample hs = sample_actions(human, buf.human.obs, rng, false);
  const BatchSample es = sample_actions(exo, buf.exo.obs, rng, false);
  buf.human.actions = hs.raw;
  buf.human.log_probs = hs.log_prob;
  buf.exo.actions = es.raw;
  buf.exo.log_probs = es.log_prob;
  buf.rewards.setRandom();
  compute_gae(buf, 0.99, 0.95);
  PpoConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.rollout_steps = 16;
  cfg.n_envs = 4;
  cfg.minibatch_size = 16;
  cfg.epochs = 3;
  cfg.target_kl = 1e9;

  for (const TrainMask mask : {TrainMask{false, true, true}, TrainMask{true, false, false}, TrainMask{true, true, true}}) {
    PolicyNet h = human, e = exo, c = critic;
    Optimizers opt;
    opt.set_learning_rate(cfg.learning_rate);
    Rng r(13);
    ppo_update(h, e, c, opt, buf, cfg, mask, r);
    CHECK((h == human) == !mask.human_learns);
    CHECK((e == exo) == !mask.exo_learns);
    CHECK_FALSE(c == critic);
  }
  PolicyNet h = human, e = exo, c = critic;
  Optimizers opt;
  Rng r(13);
  const UpdateStats none = ppo_update(h, e, c, opt, buf, cfg, TrainMask{false, false, true}, r);
  CHECK(none.minibatches_applied == 0);
  CHECK(c == critic);
}

TEST_CASE("KL early stopping") {
  BanditSetup s = make_bandit(14);
  Rng rng(15);
  const RolloutBuffer buf = bandit_batch(s, 128, rng);
  const int per_epoch = 128 / s.cfg.minibatch_size;

  SUBCASE("a large step stops after the first epoch") {
    PpoConfig cfg = s.cfg;
    cfg.epochs = 10;
    cfg.target_kl = 1e-6;
    s.opt.set_learning_rate(0.3);
    const UpdateStats st = ppo_update(s.actor, s.exo, s.critic, s.opt, buf, cfg, TrainMask{true, false, false}, rng);
    CHECK(st.early_stopped);
    CHECK(st.epochs_run == 1);
    CHECK(st.epoch_kl.size() == 1);
    CHECK(st.epoch_kl[0] > cfg.target_kl);
    CHECK(st.minibatches_applied == per_epoch);
  }
  SUBCASE("stops at the first epoch over the target and never later") {
    PpoConfig cfg = s.cfg;
    cfg.epochs = 30;
    cfg.target_kl = 0.002;
    s.opt.set_learning_rate(0.01);
    const UpdateStats st = ppo_update(s.actor, s.exo, s.critic, s.opt, buf, cfg, TrainMask{true, false, false}, rng);
    REQUIRE(st.early_stopped);
    for (int k = 0; k + 1 < st.epochs_run; ++k) CHECK(st.epoch_kl[k] <= cfg.target_kl);
    CHECK(st.epoch_kl.back() > cfg.target_kl);
    CHECK(st.minibatches_applied == st.epochs_run * per_epoch);
  }
  SUBCASE("a loose target runs every epoch") {
    PpoConfig cfg = s.cfg;
    cfg.epochs = 5;
    cfg.target_kl = 1e9;
    const UpdateStats st = ppo_update(s.actor, s.exo, s.critic, s.opt, buf, cfg, TrainMask{true, false, false}, rng);
    CHECK_FALSE(st.early_stopped);
    CHECK(st.epochs_run == 5);
    CHECK(st.minibatches_applied == 5 * per_epoch);
  }
}

TEST_CASE("updates are reproducible and divergence is reported") {
  auto run = [] {
    BanditSetup s = make_bandit(16);
    Rng rng(17);
    UpdateStats last;
    for (int i = 0; i < 5; ++i) {
      const RolloutBuffer buf = bandit_batch(s, 128, rng);
      last = ppo_update(s.actor, s.exo, s.critic, s.opt, buf, s.cfg, TrainMask{true, false, false}, rng);
    }
    return std::make_pair(last, flatten_params(s.actor));
  };
  const auto a = run(), b = run();
  CHECK(a.first.policy_loss == b.first.policy_loss);
  CHECK(a.first.value_loss == b.first.value_loss);
  CHECK(a.first.approx_kl == b.first.approx_kl);
  CHECK(a.second == b.second);

  BanditSetup s = make_bandit(18);
  Rng rng(19);
  RolloutBuffer buf = bandit_batch(s, 128, rng);
  buf.human.obs(0, 3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ppo_update(s.actor, s.exo, s.critic, s.opt, buf, s.cfg, TrainMask{true, false, false}, rng),
                  UpdateDiverged);
  buf = bandit_batch(s, 128, rng);
  buf.advantages[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ppo_update(s.actor, s.exo, s.critic, s.opt, buf, s.cfg, TrainMask{true, false, false}, rng),
                  UpdateDiverged);
}

TEST_CASE("input augmentation") {
  Rng rng(20);
  const PolicyNet net = make_policy({60, {32, 16}, 10, Squash::kUnit, true, -0.5, 0.01}, rng);
  const PolicyNet aug = augment_input(net, 2, 0.01, rng);
  CHECK(aug.input_dim() == 62);
  CHECK(aug.weights[0].leftCols(60) == net.weights[0]);
  CHECK(aug.weights[0].rightCols(2).cwiseAbs().maxCoeff() <= 0.01);
  CHECK(aug.weights[0].rightCols(2).cwiseAbs().maxCoeff() > 0.0);
  for (int l = 1; l < net.num_layers(); ++l) CHECK(aug.weights[l] == net.weights[l]);

  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = Vec::Random(60);
    Vec xa = Vec::Zero(62);
    xa.head(60) = x;
    CHECK(forward(aug, xa).mean == forward(net, x).mean);  // bitwise
  }

  const PolicyNet deaf = augment_input(net, 2, 0.0, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = Vec::Random(60);
    Vec xa(62);
    xa << x, 50.0 * Vec::Random(2);
    CHECK(forward(deaf, xa).mean == forward(net, x).mean);
  }
  CHECK_THROWS_AS(augment_input(net, 0, 0.01, rng), DimensionMismatch);
}

TEST_CASE("action sampling") {
  Rng rng(21);
  PolicyNet unit = make_policy({3, {4}, 2, Squash::kUnit, true, -0.5, 0.01}, rng);
  for (auto& w : unit.weights) w.setZero();
  unit.biases.back() << -0.3, 1.7;
  const ActionSample det = sample_action(unit, Vec::Random(3), rng, true);
  CHECK(det.raw == Eigen::Vector2d(-0.3, 1.7));
  CHECK(det.action == Eigen::Vector2d(0.0, 1.0));

  PolicyNet sym = make_policy({3, {4}, 2, Squash::kSymmetric, true, -0.5, 0.01}, rng);
  for (auto& w : sym.weights) w.setZero();
  for (auto& b : sym.biases) b.setZero();
  CHECK(sample_action(sym, Vec::Random(3), rng, true).action == Vec::Zero(2));

  // fixed seed, fixed samples
  Rng r1(5), r2(5);
  const Vec x = Vec::Random(3);
  for (int i = 0; i < 10; ++i) {
    const ActionSample a = sample_action(unit, x, r1, false);
    const ActionSample b = sample_action(unit, x, r2, false);
    CHECK(a.raw == b.raw);
    CHECK(a.log_prob == b.log_prob);
    CHECK((a.action.array() >= 0.0).all());
    CHECK((a.action.array() <= 1.0).all());
  }

  // empirical mean within 3 sigma / sqrt(n) of the true mean
  PolicyNet free = make_policy({1, {}, 2, Squash::kNone, true, -0.5, 1.0}, rng);
  free.weights[0].setZero();
  free.biases[0] << 0.4, -1.1;
  free.log_std << -0.5, 0.3;
  const int n = 100000;
  const BatchSample s = sample_actions(free, Mat::Ones(1, n), rng, false);
  const Vec emp = s.raw.rowwise().mean();
  for (int i = 0; i < 2; ++i) {
    const double sd = std::exp(free.log_std[i]);
    CHECK(std::abs(emp[i] - free.biases[0][i]) < 3.0 * sd / std::sqrt(double(n)));
  }
  // log-prob is the pre-clip Gaussian density
  const Vec lp = gaussian_log_prob(forward_batch(free, Mat::Ones(1, 3)), free.log_std, s.raw.leftCols(3));
  for (int c = 0; c < 3; ++c) CHECK(s.log_prob[c] == doctest::Approx(lp[c]).epsilon(1e-14));
}

TEST_CASE("config validation") {
  PpoConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.minibatch_size = cfg.batch_size() + 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PpoConfig{};
  cfg.clip_range = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PpoConfig{};
  CHECK(cfg.clip_range == 0.15);
  CHECK(cfg.rollout_steps == 2048);
  CHECK(cfg.minibatch_size == 16384);
  CHECK(cfg.epochs == 20);
  CHECK(cfg.gamma == 0.99);
  CHECK(cfg.gae_lambda == 0.95);
  CHECK(cfg.target_kl == 0.01);
  CHECK(cfg.max_grad_norm == 0.5);
  CHECK(cfg.n_envs == 32);
}
