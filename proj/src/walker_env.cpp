#include "smat/walker_env.hpp"

#include <cmath>
#include <numbers>

namespace smat {

WalkerEnv::WalkerEnv(WalkerModel model, std::shared_ptr<const ReferenceGait> reference, RewardWeights weights,
                     EnvConfig config, std::uint64_t seed)
    : model_(std::move(model)),
      reference_(std::move(reference)),
      weights_(weights),
      config_(config),
      rng_(seed),
      hip_idx_(model_.hip_muscle_indices()) {
  model_.validate();
  reset();
}

void WalkerEnv::reset() {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, config_.init_noise);
  phase0_ = uni(rng_);
  const ReferenceGait::Sample ref = reference_->at(phase0_);
  const double rho = reference_->speed_scale(config_.v_star);

  GenVec<double> q = GenVec<double>::Zero();
  GenVec<double> qd = GenVec<double>::Zero();
  for (int j = 0; j < kNumTracked; ++j) {
    q[kPelvisPitch + j] = ref.angle[j] + noise(rng_);
    qd[kPelvisPitch + j] = rho * ref.velocity[j];
  }
  for (int i = 0; i < kNumJoints; ++i) {
    const JointLimit& lim = model_.joint_limits[i];
    q[kFirstJoint + i] = std::clamp(q[kFirstJoint + i], lim.lower, lim.upper);
  }
  qd[kPelvisX] = config_.v_star;
  state_ = make_state(model_, q, qd);
  history_.seed(hip_kinematics(state_), Eigen::Vector2d::Zero());
  episode_steps_ = 0;
}

double WalkerEnv::phase() const {
  const double p = phase0_ + state_.time / reference_->cycle_duration();
  return p - std::floor(p);
}

int WalkerEnv::critic_obs_dim(int num_muscles) {
  return human_obs_dim(num_muscles, false) + ObsHistory::kExoObsDim - 4 + 2;
}

Vec WalkerEnv::critic_obs() const {
  const Vec base = observe_human(state_, history_, false);
  const auto exo = observe_exo(history_);
  Vec obs(critic_obs_dim(model_.num_muscles()));
  obs.head(base.size()) = base;
  // The newest hip kinematics already appear in the human block.
  obs.segment(base.size(), 8) = exo.head<8>();
  obs.segment(base.size() + 8, 6) = exo.tail<6>();
  const double angle = 2.0 * std::numbers::pi * phase();
  obs[obs.size() - 2] = std::sin(angle);
  obs[obs.size() - 1] = std::cos(angle);
  return obs;
}

EnvStep WalkerEnv::step(const Vec& excitations, const Eigen::Vector2d& exo_cmd) {
  RewardInputs in;
  in.dt = config_.control_dt;
  in.v_star = config_.v_star;
  in.prev_activations = state_.activations;
  in.u_prev = history_.latest_command();
  in.exo = config_.exo_reward;

  const Eigen::Vector2d cmd = exo_cmd.cwiseMax(-1.0).cwiseMin(1.0);
  StepResult r = smat::step(state_, model_, excitations, cmd, config_.control_dt);
  state_ = std::move(r.state);
  history_.push(hip_kinematics(state_), cmd);
  ++episode_steps_;

  const ReferenceGait::Sample ref = reference_->at(phase());
  in.v = state_.forward_speed();
  in.activations = state_.activations;
  in.hip_activations = state_.activations(hip_idx_);
  in.q = state_.q.tail<kNumTracked>();
  in.qd = state_.qd.tail<kNumTracked>();
  in.q_ref = ref.angle;
  in.qd_ref = ref.velocity;
  in.rho = reference_->speed_scale(config_.v_star);
  in.u = cmd;
  in.omega = Eigen::Vector2d(state_.qd[kHipR], state_.qd[kHipL]);
  in.joint_forces = Eigen::Map<const Vec>(state_.limit_torque.data(), kNumJoints);
  in.f_r = state_.foot_force_r;
  in.f_l = state_.foot_force_l;
  in.mg = model_.body_weight();

  EnvStep out;
  out.reward = total_reward(weights_, in);
  out.fallen = r.fallen;
  out.truncated = !r.fallen && episode_steps_ >= config_.max_episode_steps;
  return out;
}

}  // namespace smat
