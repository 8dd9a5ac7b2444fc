#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smat/checkpoint.hpp"
#include "smat/gait_analysis.hpp"
#include "smat/ppo.hpp"
#include "smat/walker_env.hpp"

namespace smat {

enum class Preset { kFullSmat, kStage3Only, kStage4Only, kStage4NoRexo };

std::string_view preset_name(Preset p);
Preset parse_preset(std::string_view name);  // throws ConfigError
// Stages the preset runs, in order.
std::vector<int> preset_sequence(Preset p);

// Torque limit per stage: detached, zero, pattern learning, full capacity.
inline constexpr std::array<double, 4> kTorqueSchedule{0.0, 0.0, 6.0, 25.0};

struct StageConfig {
  int stage = 1;
  long long budget = 0;  // environment steps
  double torque_limit = 0.0;  // Nm per hip
  TrainMask mask;
  RewardWeights weights;
  bool augment_obs = false;  // human actor sees the latest exo commands
  bool exo_attached = false;
  bool reinit_exo = false;
  int source_stage = 0;  // checkpoint this stage starts from; 0 = fresh networks
  PpoConfig ppo;
};

struct PlanOverrides {
  std::array<long long, 4> budgets{2'000'000, 1'000'000, 200'000, 500'000};
  std::array<double, 4> learning_rate{5e-5, 3e-5, 3e-5, 3e-5};
  std::array<double, 4> ent_coef{0.001, 0.001, 0.003, 0.003};
  PpoConfig ppo;  // shared fields; learning_rate and ent_coef come from the arrays
  // Replaces the per-joint imitation weights; hips are still zeroed from stage 3.
  std::optional<std::array<double, kNumTracked>> joint_weights;
  Preset preset = Preset::kFullSmat;
};

// Always four entries, index k holding stage k + 1.
std::vector<StageConfig> build_plan(const PlanOverrides& overrides);

// Independent engine for a component, derived from the run seed.
enum RngStream : std::uint64_t {
  kStreamInit = 1,
  kStreamTrainer,
  kStreamExoReinit,
  kStreamAugment,
  kStreamEnv,
  kStreamEval,
};
Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0, std::uint64_t b = 0);

// Stage-0 state: random human actor, exo actor and critic.
Checkpoint initial_checkpoint(int num_muscles, std::uint64_t seed);

// Prepares the networks for `to`. Throws InvalidTransition unless
// from.stage == to.source_stage and the plan permits that source.
Checkpoint transition(const Checkpoint& from, const StageConfig& to, std::uint64_t seed);

struct UpdateRecord {
  long long step = 0;
  double mean_episode_reward = 0.0;
  int episodes = 0;
  double mean_episode_length = 0.0;
  std::array<double, kNumTerms> term_mean{};  // weighted, per step
  UpdateStats stats;
  double mean_abs_u = 0.0;  // deterministic exo command magnitude over the rollout
  double toe_off_pct = 0.0;  // NaN when no cycle was found
};

std::vector<std::string> metrics_header();
std::vector<double> metrics_row(const UpdateRecord& r);

// Deterministic episode with the trained actors.
struct EvalTrace {
  GaitTrace trace;  // exo torque as applied, foot forces included
  Eigen::VectorXd u_r, u_l;
  Eigen::MatrixXd activations;  // samples x muscles
  std::vector<std::string> muscle_names;
  Eigen::MatrixXd joint_angles;  // samples x tracked joints
  bool fallen = false;
};

void write_eval_trace(const std::string& path, const EvalTrace& ev);
EvalTrace read_eval_trace(const std::string& path);

struct RunContext {
  WalkerModel model = default_walker_model();  // without exo
  ExoAttachment exo;  // masses used from stage 2; torque limit comes from the stage
  std::shared_ptr<const ReferenceGait> reference;
  EnvConfig env;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  int threads = 1;
  int eval_steps = 500;
  std::function<void(const UpdateRecord&)> on_update;
};

struct StageResult {
  Checkpoint checkpoint;
  std::vector<UpdateRecord> log;
  EvalTrace eval;
};

// WalkerModel for a stage: exo masses attached from stage 2 on.
WalkerModel stage_model(const RunContext& ctx, const StageConfig& cfg);

// collect -> GAE -> update cycles until the budget is used. Propagates
// UpdateDiverged and IntegrationDiverged with the step count prepended.
StageResult run_stage(const Checkpoint& start, const StageConfig& cfg, const RunContext& ctx);

EvalTrace evaluate(const Checkpoint& ckpt, const StageConfig& cfg, const RunContext& ctx);

}  // namespace smat
