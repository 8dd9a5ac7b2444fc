#include "smat/rewards.hpp"

#include <string>

namespace smat {

std::string_view reward_term_name(RewardTerm term) {
  switch (term) {
    case kTermFwd: return "fwd";
    case kTermMuscle: return "muscle";
    case kTermDeltaA: return "delta_a";
    case kTermHipAct: return "hip_act";
    case kTermExo: return "exo";
    case kTermDeltaTau: return "delta_tau";
    case kTermQpos: return "qpos";
    case kTermQvel: return "qvel";
    case kTermConstraint: return "constraint";
    case kTermFoot: return "foot";
    default: return "unknown";
  }
}

RewardWeights get_stage_weights(int stage) {
  if (stage < 1 || stage > 4) throw ConfigError("stage must be in 1..4, got " + std::to_string(stage));
  RewardWeights rw;
  rw.stage = stage;
  rw.joint.fill(1.0);
  auto& w = rw.w;
  if (stage <= 2) {
    w[kTermFwd] = 0.8;
    w[kTermMuscle] = 0.01;
    w[kTermDeltaA] = 0.005;
    w[kTermQpos] = 1.0;
    w[kTermQvel] = 1.0;
    return rw;
  }
  w[kTermFwd] = 1.5;
  w[kTermMuscle] = 0.15;
  w[kTermDeltaA] = 0.05;
  w[kTermHipAct] = stage == 3 ? 2.0 : 5.0;
  w[kTermExo] = 4.0;
  w[kTermDeltaTau] = stage == 3 ? 0.0 : 1.0;
  w[kTermQpos] = 1.0;
  w[kTermQvel] = 1.0;
  w[kTermConstraint] = 0.5;
  w[kTermFoot] = 0.3;
  // Hip flexion imitation is off from stage 3 on; other joints keep tracking.
  rw.joint[kTrackHipR] = 0.0;
  rw.joint[kTrackHipL] = 0.0;
  return rw;
}

RewardBreakdown total_reward(const RewardWeights& weights, const RewardInputs& in) {
  RewardBreakdown b;
  b.weight = weights.w;
  const double dt = in.dt;
  auto active = [&](RewardTerm t) { return weights.w[t] != 0.0; };

  if (active(kTermFwd)) b.term[kTermFwd] = forward_velocity_reward(in.v, in.v_star, dt);
  if (active(kTermMuscle)) b.term[kTermMuscle] = muscle_effort_penalty(in.activations, dt);
  if (active(kTermDeltaA)) {
    b.term[kTermDeltaA] = activation_smoothness_reward(in.activations, in.prev_activations, dt);
  }
  if (active(kTermHipAct)) b.term[kTermHipAct] = hip_activation_penalty(in.hip_activations, dt);
  if (active(kTermExo)) {
    if (weights.stage == 3) {
      b.term[kTermExo] = exo_timing_reward_s3<double>(in.u, in.omega, dt, in.exo.alpha_d);
    } else if (weights.stage == 4) {
      b.term[kTermExo] = exo_power_reward_s4<double>(in.u, in.omega, dt, in.exo);
    }
  }
  if (active(kTermDeltaTau)) b.term[kTermDeltaTau] = torque_rate_penalty<double>(in.u, in.u_prev, dt);
  if (active(kTermQpos)) {
    b.term[kTermQpos] = imitation_qpos_reward(in.q, in.q_ref, weights.joint_weights(), dt);
  }
  if (active(kTermQvel)) {
    b.term[kTermQvel] = imitation_qvel_reward(in.qd, in.qd_ref, in.rho, weights.joint_weights(), dt);
  }
  if (active(kTermConstraint)) b.term[kTermConstraint] = constraint_penalty(in.joint_forces, in.mg, dt);
  if (active(kTermFoot)) b.term[kTermFoot] = foot_force_penalty(in.f_r, in.f_l, in.mg, dt);

  b.total = b.recompute_total();
  return b;
}

RewardBreakdown total_reward(int stage, const RewardInputs& in) {
  return total_reward(get_stage_weights(stage), in);
}

}  // namespace smat
