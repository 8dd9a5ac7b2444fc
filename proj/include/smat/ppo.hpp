#pragma once

#include <cstdint>

#include "smat/policy.hpp"

namespace smat {

// Defaults are the stage 2-4 column of the PPO hyperparameter table.
struct PpoConfig {
  double learning_rate = 3e-5;
  double clip_range = 0.15;
  int rollout_steps = 2048;  // per environment
  int minibatch_size = 16384;
  int epochs = 20;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double target_kl = 0.01;
  double max_grad_norm = 0.5;
  double ent_coef = 0.001;
  double vf_coef = 0.5;
  int n_envs = 32;
  std::uint64_t seed = 0;

  int batch_size() const { return rollout_steps * n_envs; }
  void validate() const;  // throws ConfigError
};

// Which actors update their parameters and whether the exo acts on the plant.
struct TrainMask {
  bool human_learns = true;
  bool exo_learns = false;
  bool exo_acts = false;

  bool any_learns() const { return human_learns || exo_learns; }
};

struct AgentBatch {
  Mat obs;      // (obs_dim x N)
  Mat actions;  // raw pre-clip actions (act_dim x N)
  Vec log_probs;
};

// Flat storage indexed by step * n_envs + env.
struct RolloutBuffer {
  int steps = 0;
  int n_envs = 0;
  AgentBatch human;
  AgentBatch exo;
  Mat critic_obs;
  Vec rewards;
  Vec values;
  Vec dones;        // 1 when the episode ended after this step
  Vec last_values;  // bootstrap V(s_T) per environment
  Vec advantages;
  Vec returns;

  RolloutBuffer() = default;
  RolloutBuffer(int steps, int n_envs, int human_obs, int human_act, int exo_obs, int exo_act, int critic_obs);
  int size() const { return steps * n_envs; }
  static int index(int step, int env, int n_envs) { return step * n_envs + env; }
};

struct GaeResult {
  Vec advantages;
  Vec returns;
};

// Single trajectory. values has one more entry than rewards: the bootstrap
// value of the state after the last step.
GaeResult compute_gae(const Vec& rewards, const Vec& values, const Vec& dones, double gamma, double lambda);

// Fills buffer.advantages / buffer.returns per environment column.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

// Zero mean, unit (population) standard deviation.
Vec normalize_advantages(const Vec& adv);

struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vec m;
  Vec v;
  long t = 0;

  void step(Vec& params, const Vec& grad);
};

// Rescales grad in place so its norm is at most max_norm. Returns the norm
// before clipping.
double clip_grad_norm(Vec& grad, double max_norm);

struct SurrogateResult {
  double loss = 0.0;         // -mean(min(r A, clip(r) A)) - ent_coef * entropy
  double policy_loss = 0.0;  // surrogate part only
  double entropy = 0.0;
  double approx_kl = 0.0;    // mean((r - 1) - log r)
  double clip_fraction = 0.0;
  Vec grad;                  // flatten_params order, including log-std
};

SurrogateResult surrogate_loss(const PolicyNet& net, const Mat& obs, const Mat& actions, const Vec& old_log_probs,
                               const Vec& advantages, double clip_range, double ent_coef, bool with_grad = true);

struct ValueLossResult {
  double loss = 0.0;  // vf_coef * mean((V - R)^2)
  Vec grad;
};
ValueLossResult value_loss(const PolicyNet& critic, const Mat& obs, const Vec& returns, double vf_coef,
                           bool with_grad = true);

struct Optimizers {
  Adam human;
  Adam exo;
  Adam critic;

  void set_learning_rate(double lr) { human.lr = exo.lr = critic.lr = lr; }
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;      // mean over applied minibatches of the larger actor KL
  double clip_fraction = 0.0;
  double entropy = 0.0;
  int epochs_run = 0;
  int minibatches_applied = 0;
  bool early_stopped = false;
  std::vector<double> epoch_kl;  // mean approximate KL of each epoch run
};

// Clipped-surrogate update of every learning actor plus the shared critic.
// Frozen actors are left bitwise unchanged. Stops after the first epoch whose
// mean approximate KL exceeds config.target_kl. Throws UpdateDiverged.
UpdateStats ppo_update(PolicyNet& human, PolicyNet& exo, PolicyNet& critic, Optimizers& opt,
                       const RolloutBuffer& buffer, const PpoConfig& config, const TrainMask& mask, Rng& rng);

}  // namespace smat
