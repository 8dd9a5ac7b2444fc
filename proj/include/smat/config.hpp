#pragma once

#include <cstdint>
#include <string>

#include "smat/curriculum.hpp"

namespace smat {

inline constexpr int kConfigVersion = 1;

// One body segment; left and right share the values.
struct BodySegment {
  double mass = 0.0;     // kg
  double length = 0.0;   // m
  double inertia = 0.0;  // kg m^2
};

struct ModelConfig {
  BodySegment torso{50.84, 0.82, 3.2};
  BodySegment thigh{7.5, 0.43, 0.145};
  BodySegment shank{3.49, 0.43, 0.059};
  BodySegment foot{1.09, 0.26, 0.01};
  double exo_pelvis_mass = 3.94;
  double exo_thigh_mass = 1.0;
  double physics_dt = 0.002;
  double contact_stiffness = 1e4;
  double contact_damping = 1e2;
  double friction = 0.9;
  double limit_stiffness = 1000.0;
  double limit_damping = 10.0;
};

struct RewardConfig {
  double v_star = kTargetSpeed;
  std::string reference_csv;  // empty: built-in parametric reference
  std::optional<std::array<double, kNumTracked>> joint_weights;
  ExoRewardParams exo;
};

struct EnvSection {
  int max_episode_steps = 1000;
  double init_noise = 0.02;
  int eval_steps = 500;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/smat";
  Preset preset = Preset::kFullSmat;
  ModelConfig model;
  PlanOverrides plan;  // budgets, per-stage learning rate / entropy, shared PPO fields
  RewardConfig rewards;
  EnvSection env;

  void validate() const;  // throws ConfigError
};

// Unknown keys, wrong types and invalid values raise ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& cfg);  // pretty JSON, every key present

std::uint64_t config_hash(const RunConfig& cfg);

// Model, reference gait and env settings for the curriculum.
RunContext make_context(const RunConfig& cfg, int threads);

}  // namespace smat
