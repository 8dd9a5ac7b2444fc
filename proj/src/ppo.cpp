#include "smat/ppo.hpp"

#include "smat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace smat {

void PpoConfig::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw ConfigError(std::string("ppo.") + name + " must be > 0");
  };
  positive(learning_rate, "learning_rate");
  positive(clip_range, "clip_range");
  positive(rollout_steps, "rollout_steps");
  positive(minibatch_size, "minibatch_size");
  positive(epochs, "epochs");
  positive(gamma, "gamma");
  positive(gae_lambda, "gae_lambda");
  positive(target_kl, "target_kl");
  positive(max_grad_norm, "max_grad_norm");
  positive(n_envs, "n_envs");
  if (ent_coef < 0.0) throw ConfigError("ppo.ent_coef must be >= 0");
  if (vf_coef < 0.0) throw ConfigError("ppo.vf_coef must be >= 0");
  if (gamma > 1.0 || gae_lambda > 1.0) throw ConfigError("ppo.gamma and ppo.gae_lambda must be <= 1");
  if (minibatch_size > batch_size()) {
    throw ConfigError("ppo.minibatch_size exceeds rollout_steps * n_envs");
  }
}

RolloutBuffer::RolloutBuffer(int steps_, int n_envs_, int human_obs, int human_act, int exo_obs, int exo_act,
                             int critic_obs_dim)
    : steps(steps_), n_envs(n_envs_) {
  const int n = steps * n_envs;
  human.obs = Mat::Zero(human_obs, n);
  human.actions = Mat::Zero(human_act, n);
  human.log_probs = Vec::Zero(n);
  exo.obs = Mat::Zero(exo_obs, n);
  exo.actions = Mat::Zero(exo_act, n);
  exo.log_probs = Vec::Zero(n);
  critic_obs = Mat::Zero(critic_obs_dim, n);
  rewards = Vec::Zero(n);
  values = Vec::Zero(n);
  dones = Vec::Zero(n);
  last_values = Vec::Zero(n_envs);
  advantages = Vec::Zero(n);
  returns = Vec::Zero(n);
}

GaeResult compute_gae(const Vec& rewards, const Vec& values, const Vec& dones, double gamma, double lambda) {
  const Eigen::Index n = rewards.size();
  require_same_size(values.size(), n + 1, "compute_gae values (with bootstrap)");
  require_same_size(dones.size(), n, "compute_gae dones");
  GaeResult r;
  r.advantages = Vec::Zero(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double live = 1.0 - dones[t];
    const double delta = rewards[t] + gamma * values[t + 1] * live - values[t];
    running = delta + gamma * lambda * live * running;
    r.advantages[t] = running;
  }
  r.returns = r.advantages + values.head(n);
  return r;
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda) {
  const int T = buffer.steps;
  for (int e = 0; e < buffer.n_envs; ++e) {
    Vec rew(T), val(T + 1), done(T);
    for (int t = 0; t < T; ++t) {
      const int i = RolloutBuffer::index(t, e, buffer.n_envs);
      rew[t] = buffer.rewards[i];
      val[t] = buffer.values[i];
      done[t] = buffer.dones[i];
    }
    val[T] = buffer.last_values[e];
    const GaeResult g = compute_gae(rew, val, done, gamma, lambda);
    for (int t = 0; t < T; ++t) {
      const int i = RolloutBuffer::index(t, e, buffer.n_envs);
      buffer.advantages[i] = g.advantages[t];
      buffer.returns[i] = g.returns[t];
    }
  }
}

Vec normalize_advantages(const Vec& adv) {
  if (adv.size() == 0) return adv;
  const double mean = adv.mean();
  Vec centered = adv.array() - mean;
  const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(adv.size()));
  if (sd > 1e-12) centered /= sd;
  return centered;
}

void Adam::step(Vec& params, const Vec& grad) {
  if (m.size() != params.size()) {
    m = Vec::Zero(params.size());
    v = Vec::Zero(params.size());
    t = 0;
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

double clip_grad_norm(Vec& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm) grad *= max_norm / (norm + 1e-6);
  return norm;
}

SurrogateResult surrogate_loss(const PolicyNet& net, const Mat& obs, const Mat& actions, const Vec& old_log_probs,
                               const Vec& advantages, double clip_range, double ent_coef, bool with_grad) {
  const Eigen::Index n = obs.cols();
  require_same_size(actions.cols(), n, "surrogate_loss actions");
  require_same_size(old_log_probs.size(), n, "surrogate_loss log-probs");
  require_same_size(advantages.size(), n, "surrogate_loss advantages");

  ForwardCache cache;
  const Mat mean = forward_batch(net, obs, with_grad ? &cache : nullptr);
  const Vec logp = gaussian_log_prob(mean, net.log_std, actions);
  const Vec inv_var = (-2.0 * net.log_std).array().exp();
  const double inv_n = 1.0 / static_cast<double>(n);

  SurrogateResult r;
  Mat grad_mean = Mat::Zero(mean.rows(), n);
  Vec grad_log_std = Vec::Zero(net.log_std.size());
  double surrogate = 0.0, kl = 0.0;
  Eigen::Index clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double log_ratio = logp[i] - old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double a = advantages[i];
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip_range, 1.0 + clip_range);
    const double unclipped_obj = ratio * a;
    const double clipped_obj = clipped_ratio * a;
    surrogate += std::min(unclipped_obj, clipped_obj);
    kl += (ratio - 1.0) - log_ratio;
    if (std::abs(ratio - 1.0) > clip_range) ++clipped;
    if (with_grad && unclipped_obj <= clipped_obj) {
      // d(-r A / n) / d logp = -r A / n
      const double g = -ratio * a * inv_n;
      const Vec diff = actions.col(i) - mean.col(i);
      grad_mean.col(i) = g * diff.cwiseProduct(inv_var);
      grad_log_std.array() += g * (diff.array().square() * inv_var.array() - 1.0);
    }
  }
  r.policy_loss = -surrogate * inv_n;
  r.entropy = gaussian_entropy(net.log_std);
  r.loss = r.policy_loss - ent_coef * r.entropy;
  r.approx_kl = kl * inv_n;
  r.clip_fraction = static_cast<double>(clipped) * inv_n;
  if (with_grad) {
    r.grad = backward_batch(net, cache, grad_mean);
    r.grad.tail(net.log_std.size()) = grad_log_std.array() - ent_coef;
  }
  return r;
}

ValueLossResult value_loss(const PolicyNet& critic, const Mat& obs, const Vec& returns, double vf_coef,
                           bool with_grad) {
  require_same_size(returns.size(), obs.cols(), "value_loss returns");
  ForwardCache cache;
  const Mat v = forward_batch(critic, obs, with_grad ? &cache : nullptr);
  const Vec diff = v.row(0).transpose() - returns;
  const double inv_n = 1.0 / static_cast<double>(returns.size());
  ValueLossResult r;
  r.loss = vf_coef * diff.squaredNorm() * inv_n;
  if (with_grad) {
    const Mat grad_out = (2.0 * vf_coef * inv_n) * diff.transpose();
    r.grad = backward_batch(critic, cache, grad_out);
  }
  return r;
}

namespace {

void apply_gradient(PolicyNet& net, Adam& adam, Vec grad, double max_norm) {
  clip_grad_norm(grad, max_norm);
  Vec params = flatten_params(net);
  adam.step(params, grad);
  assign_params(net, params);
}

[[noreturn]] void diverged(const char* who, int epoch, int minibatch, double loss, double grad_norm) {
  std::ostringstream os;
  os << "non-finite " << who << " loss/gradient at epoch " << epoch << ", minibatch " << minibatch
     << " (loss=" << loss << ", grad_norm=" << grad_norm << ")";
  throw UpdateDiverged(os.str());
}

}  // namespace

UpdateStats ppo_update(PolicyNet& human, PolicyNet& exo, PolicyNet& critic, Optimizers& opt,
                       const RolloutBuffer& buffer, const PpoConfig& config, const TrainMask& mask, Rng& rng) {
  UpdateStats stats;
  if (!mask.any_learns()) return stats;
  const int n = buffer.size();
  if (n == 0) return stats;
  if (!buffer.advantages.allFinite()) throw UpdateDiverged("non-finite advantages in rollout buffer");

  const int mb = std::min(config.minibatch_size, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  double sum_pl = 0.0, sum_vl = 0.0, sum_kl = 0.0, sum_cf = 0.0, sum_ent = 0.0;
  int count = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    double epoch_kl = 0.0;
    int epoch_batches = 0;
    for (int start = 0, batch = 0; start < n; start += mb, ++batch) {
      const int len = std::min(mb, n - start);
      const std::vector<int> idx(order.begin() + start, order.begin() + start + len);
      const Vec adv = normalize_advantages(buffer.advantages(idx));

      double kl = 0.0, cf = 0.0, pl = 0.0, ent = 0.0;
      auto update_actor = [&](PolicyNet& net, Adam& adam, const AgentBatch& ab, const char* who) {
        SurrogateResult s = surrogate_loss(net, ab.obs(Eigen::all, idx), ab.actions(Eigen::all, idx),
                                           ab.log_probs(idx), adv, config.clip_range, config.ent_coef);
        if (!std::isfinite(s.loss) || !s.grad.allFinite()) diverged(who, epoch, batch, s.loss, s.grad.norm());
        kl = std::max(kl, s.approx_kl);  // the most-moved actor decides early stopping
        cf += s.clip_fraction;
        pl += s.policy_loss;
        ent += s.entropy;
        apply_gradient(net, adam, std::move(s.grad), config.max_grad_norm);
      };
      if (mask.human_learns) update_actor(human, opt.human, buffer.human, "human actor");
      if (mask.exo_learns) update_actor(exo, opt.exo, buffer.exo, "exo actor");

      ValueLossResult v = value_loss(critic, buffer.critic_obs(Eigen::all, idx), buffer.returns(idx), config.vf_coef);
      if (!std::isfinite(v.loss) || !v.grad.allFinite()) diverged("critic", epoch, batch, v.loss, v.grad.norm());
      apply_gradient(critic, opt.critic, std::move(v.grad), config.max_grad_norm);

      const int actors = static_cast<int>(mask.human_learns) + static_cast<int>(mask.exo_learns);
      sum_pl += pl;
      sum_vl += v.loss;
      sum_kl += kl;
      sum_cf += cf / actors;
      sum_ent += ent;
      epoch_kl += kl;
      ++epoch_batches;
      ++count;
    }
    epoch_kl /= epoch_batches;
    stats.epoch_kl.push_back(epoch_kl);
    stats.epochs_run = epoch + 1;
    if (epoch_kl > config.target_kl) {
      stats.early_stopped = true;
      break;
    }
  }
  stats.minibatches_applied = count;
  stats.policy_loss = sum_pl / count;
  stats.value_loss = sum_vl / count;
  stats.approx_kl = sum_kl / count;
  stats.clip_fraction = sum_cf / count;
  stats.entropy = sum_ent / count;
  return stats;
}

}  // namespace smat
