#pragma once

#include <memory>

#include "smat/dynamics.hpp"
#include "smat/policy.hpp"
#include "smat/reference_gait.hpp"
#include "smat/rewards.hpp"

namespace smat {

struct EnvConfig {
  double control_dt = kControlDt;
  double v_star = kTargetSpeed;
  int max_episode_steps = 1000;
  double init_noise = 0.02;  // rad, on reference joint angles at reset
  ExoRewardParams exo_reward;
};

struct EnvStep {
  RewardBreakdown reward;
  bool fallen = false;
  bool truncated = false;
  bool done() const { return fallen || truncated; }
};

// One walker episode stream: physics, observation history, reference phase and
// the stage reward. Reset draws the initial reference phase from the env's rng.
class WalkerEnv {
 public:
  WalkerEnv(WalkerModel model, std::shared_ptr<const ReferenceGait> reference, RewardWeights weights,
            EnvConfig config, std::uint64_t seed);

  void reset();
  // exo_cmd is applied as-is; callers pass zero when the exo does not act.
  EnvStep step(const Vec& excitations, const Eigen::Vector2d& exo_cmd);

  Vec human_obs(bool include_exo_torque) const { return observe_human(state_, history_, include_exo_torque); }
  Vec exo_obs() const { return observe_exo(history_); }
  Vec critic_obs() const;
  static int critic_obs_dim(int num_muscles);

  double phase() const;
  int episode_steps() const { return episode_steps_; }
  const SimState& state() const { return state_; }
  const ObsHistory& history() const { return history_; }
  const WalkerModel& model() const { return model_; }
  const RewardWeights& weights() const { return weights_; }

 private:
  WalkerModel model_;
  std::shared_ptr<const ReferenceGait> reference_;
  RewardWeights weights_;
  EnvConfig config_;
  Rng rng_;
  SimState state_;
  ObsHistory history_;
  double phase0_ = 0.0;
  int episode_steps_ = 0;
  std::vector<int> hip_idx_;
};

}  // namespace smat
