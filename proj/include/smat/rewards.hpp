#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

#include "smat/error.hpp"

namespace smat {

inline constexpr double kControlDt = 0.02;  // s, 50 Hz
inline constexpr double kTargetSpeed = 1.25;  // m/s

// Joints tracked by the imitation terms, in this order.
enum TrackedJoint : int {
  kTrackPelvisPitch = 0,
  kTrackHipR,
  kTrackKneeR,
  kTrackAnkleR,
  kTrackHipL,
  kTrackKneeL,
  kTrackAnkleL,
  kNumTracked
};

enum RewardTerm : int {
  kTermFwd = 0,
  kTermMuscle,
  kTermDeltaA,
  kTermHipAct,
  kTermExo,
  kTermDeltaTau,
  kTermQpos,
  kTermQvel,
  kTermConstraint,
  kTermFoot,
  kNumTerms
};

std::string_view reward_term_name(RewardTerm term);

struct ExoRewardParams {
  double alpha_d = 0.5;  // stage-3 timing gain
  double alpha = 0.3;    // stage-4 power gain
  double beta = 0.15;    // stage-4 magnitude penalty
  double lambda_s = 2.0;
  double delta = 0.8;    // saturation threshold on |u|
  double omega_s = 2.0;  // rad/s velocity normalizer
};

// ---------------------------------------------------------------------------
// Individual terms. Every term carries a factor dt so magnitudes do not depend
// on the control rate.

template <typename Scalar>
Scalar forward_velocity_reward(Scalar v, Scalar v_star, Scalar dt) {
  const Scalar e = v - v_star;
  return dt * std::exp(Scalar(-5) * e * e);
}

template <typename Derived>
typename Derived::Scalar muscle_effort_penalty(const Eigen::MatrixBase<Derived>& a,
                                               typename Derived::Scalar dt) {
  return -dt / static_cast<typename Derived::Scalar>(a.size()) * a.sum();
}

template <typename D1, typename D2, typename D3>
typename D1::Scalar imitation_qpos_reward(const Eigen::MatrixBase<D1>& q, const Eigen::MatrixBase<D2>& q_ref,
                                          const Eigen::MatrixBase<D3>& w, typename D1::Scalar dt) {
  require_same_size(q.size(), q_ref.size(), "imitation_qpos_reward q_ref");
  require_same_size(q.size(), w.size(), "imitation_qpos_reward weights");
  using S = typename D1::Scalar;
  S sum = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const S e = q[i] - q_ref[i];
    sum += w[i] * std::exp(S(-8) * e * e);
  }
  return dt * sum;
}

template <typename D1, typename D2, typename D3>
typename D1::Scalar imitation_qvel_reward(const Eigen::MatrixBase<D1>& qd, const Eigen::MatrixBase<D2>& qd_ref,
                                          typename D1::Scalar rho, const Eigen::MatrixBase<D3>& w,
                                          typename D1::Scalar dt) {
  require_same_size(qd.size(), qd_ref.size(), "imitation_qvel_reward qd_ref");
  require_same_size(qd.size(), w.size(), "imitation_qvel_reward weights");
  using S = typename D1::Scalar;
  S sum = 0;
  for (Eigen::Index i = 0; i < qd.size(); ++i) {
    const S e = qd[i] - rho * qd_ref[i];
    sum += w[i] * std::exp(S(-8) * e * e);
  }
  return dt * sum;
}

template <typename D1, typename D2>
typename D1::Scalar activation_smoothness_reward(const Eigen::MatrixBase<D1>& a_t,
                                                 const Eigen::MatrixBase<D2>& a_prev,
                                                 typename D1::Scalar dt) {
  require_same_size(a_t.size(), a_prev.size(), "activation_smoothness_reward");
  using S = typename D1::Scalar;
  S sum = 0;
  for (Eigen::Index j = 0; j < a_t.size(); ++j) {
    const S d = a_t[j] - a_prev[j];
    sum += std::exp(S(-4) * d * d);
  }
  return dt / static_cast<S>(a_t.size()) * sum;
}

template <typename Derived>
typename Derived::Scalar hip_activation_penalty(const Eigen::MatrixBase<Derived>& a_hip,
                                                typename Derived::Scalar dt) {
  if (a_hip.size() == 0) throw DimensionMismatch("hip_activation_penalty: empty muscle set");
  return -dt * a_hip.squaredNorm() / static_cast<typename Derived::Scalar>(a_hip.size());
}

template <typename Scalar>
Scalar sign0(Scalar x) {
  return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
}

template <typename Scalar>
Scalar exo_timing_reward_s3(const Eigen::Matrix<Scalar, 2, 1>& u, const Eigen::Matrix<Scalar, 2, 1>& omega,
                            Scalar dt, Scalar alpha_d = Scalar(0.5)) {
  Scalar sum = 0;
  for (int j = 0; j < 2; ++j) sum += alpha_d * u[j] * u[j] * sign0(u[j] * omega[j]);
  return dt * sum;
}

template <typename Scalar>
Scalar exo_power_reward_s4(const Eigen::Matrix<Scalar, 2, 1>& u, const Eigen::Matrix<Scalar, 2, 1>& omega,
                           Scalar dt, const ExoRewardParams& p = {}) {
  Scalar sum = 0;
  for (int j = 0; j < 2; ++j) {
    const Scalar w_hat = std::clamp<Scalar>(omega[j] / Scalar(p.omega_s), Scalar(-1), Scalar(1));
    const Scalar over = std::max<Scalar>(Scalar(0), std::abs(u[j]) - Scalar(p.delta));
    sum += Scalar(p.alpha) * u[j] * w_hat - Scalar(p.beta) * u[j] * u[j] - Scalar(p.lambda_s) * over * over;
  }
  return dt * sum;
}

template <typename Scalar>
Scalar torque_rate_penalty(const Eigen::Matrix<Scalar, 2, 1>& u_t, const Eigen::Matrix<Scalar, 2, 1>& u_prev,
                           Scalar dt) {
  return -dt * (u_t - u_prev).squaredNorm();
}

template <typename Derived>
typename Derived::Scalar constraint_penalty(const Eigen::MatrixBase<Derived>& f_joint,
                                            typename Derived::Scalar mg, typename Derived::Scalar dt) {
  if (f_joint.size() == 0) return 0;
  return -dt * (f_joint.cwiseAbs().maxCoeff() / mg);
}

template <typename Scalar>
Scalar foot_force_penalty(Scalar f_r, Scalar f_l, Scalar mg, Scalar dt) {
  return -dt * std::max<Scalar>(Scalar(0), (std::abs(f_r) + std::abs(f_l)) / mg - Scalar(1.2));
}

// ---------------------------------------------------------------------------
// Stage configuration and the weighted sum.

struct RewardWeights {
  int stage = 1;
  std::array<double, kNumTerms> w{};
  // Per tracked joint, shared by the qpos and qvel terms.
  std::array<double, kNumTracked> joint{};

  double operator[](RewardTerm t) const { return w[t]; }
  double& operator[](RewardTerm t) { return w[t]; }
  Eigen::Map<const Eigen::Matrix<double, kNumTracked, 1>> joint_weights() const {
    return Eigen::Map<const Eigen::Matrix<double, kNumTracked, 1>>(joint.data());
  }
};

// Table values per stage (1..4). Throws ConfigError otherwise.
RewardWeights get_stage_weights(int stage);

// Everything any term may need. Inputs of inactive terms are ignored.
struct RewardInputs {
  double dt = kControlDt;
  double v = 0.0;
  double v_star = kTargetSpeed;
  Eigen::VectorXd activations;
  Eigen::VectorXd prev_activations;
  Eigen::VectorXd hip_activations;
  Eigen::Matrix<double, kNumTracked, 1> q = Eigen::Matrix<double, kNumTracked, 1>::Zero();
  Eigen::Matrix<double, kNumTracked, 1> q_ref = Eigen::Matrix<double, kNumTracked, 1>::Zero();
  Eigen::Matrix<double, kNumTracked, 1> qd = Eigen::Matrix<double, kNumTracked, 1>::Zero();
  Eigen::Matrix<double, kNumTracked, 1> qd_ref = Eigen::Matrix<double, kNumTracked, 1>::Zero();
  double rho = 1.0;
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Eigen::Vector2d u_prev = Eigen::Vector2d::Zero();
  Eigen::Vector2d omega = Eigen::Vector2d::Zero();
  Eigen::VectorXd joint_forces;
  double f_r = 0.0;
  double f_l = 0.0;
  double mg = 1.0;
  ExoRewardParams exo;
};

struct RewardBreakdown {
  std::array<double, kNumTerms> term{};    // unweighted values, 0 when inactive
  std::array<double, kNumTerms> weight{};  // weights used
  double total = 0.0;                      // sum_k weight_k * term_k

  double recompute_total() const {
    double t = 0.0;
    for (int k = 0; k < kNumTerms; ++k) t += weight[k] * term[k];
    return t;
  }
};

RewardBreakdown total_reward(const RewardWeights& weights, const RewardInputs& in);
RewardBreakdown total_reward(int stage, const RewardInputs& in);

}  // namespace smat
