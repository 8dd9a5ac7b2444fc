#include "smat/curriculum.hpp"

#include "smat/csv.hpp"
#include "smat/error.hpp"

#include <cmath>
#include <limits>
#include <thread>

namespace smat {

std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::kFullSmat: return "full-smat";
    case Preset::kStage3Only: return "stage3-only";
    case Preset::kStage4Only: return "stage4-only";
    case Preset::kStage4NoRexo: return "stage4-no-rexo";
  }
  return "full-smat";
}

Preset parse_preset(std::string_view name) {
  for (Preset p : {Preset::kFullSmat, Preset::kStage3Only, Preset::kStage4Only, Preset::kStage4NoRexo}) {
    if (preset_name(p) == name) return p;
  }
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected full-smat, stage3-only, stage4-only or stage4-no-rexo)");
}

std::vector<int> preset_sequence(Preset p) {
  switch (p) {
    case Preset::kStage3Only: return {1, 2, 3};
    case Preset::kStage4Only:
    case Preset::kStage4NoRexo: return {1, 2, 4};
    default: return {1, 2, 3, 4};
  }
}

std::vector<StageConfig> build_plan(const PlanOverrides& ov) {
  std::vector<StageConfig> plan(4);
  for (int k = 1; k <= 4; ++k) {
    StageConfig& s = plan[k - 1];
    s.stage = k;
    s.budget = ov.budgets[k - 1];
    if (s.budget < 0) throw ConfigError("stage budgets must be >= 0");
    s.torque_limit = kTorqueSchedule[k - 1];
    s.exo_attached = k >= 2;
    s.mask = k <= 2 ? TrainMask{true, false, false} : (k == 3 ? TrainMask{false, true, true} : TrainMask{true, true, true});
    s.weights = get_stage_weights(k);
    if (ov.joint_weights) {
      s.weights.joint = *ov.joint_weights;
      if (k >= 3) s.weights.joint[kTrackHipR] = s.weights.joint[kTrackHipL] = 0.0;
    }
    s.augment_obs = k == 4;
    s.reinit_exo = k == 3;
    s.source_stage = k - 1;
    s.ppo = ov.ppo;
    s.ppo.learning_rate = ov.learning_rate[k - 1];
    s.ppo.ent_coef = ov.ent_coef[k - 1];
  }
  if (ov.preset == Preset::kStage4Only || ov.preset == Preset::kStage4NoRexo) {
    plan[3].source_stage = 2;
    plan[3].reinit_exo = true;
  }
  if (ov.preset == Preset::kStage4NoRexo) plan[3].weights[kTermExo] = 0.0;
  return plan;
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
  auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x & 0xFFFFFFFFu); };
  auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(a), hi(a), lo(b), hi(b)};
  return Rng(seq);
}

Checkpoint initial_checkpoint(int num_muscles, std::uint64_t seed) {
  Rng rng = make_rng(seed, kStreamInit);
  Checkpoint ck;
  ck.human = make_policy(human_actor_spec(human_obs_dim(num_muscles, false), num_muscles), rng);
  ck.exo = make_policy(exo_actor_spec(), rng);
  ck.critic = make_policy(critic_spec(WalkerEnv::critic_obs_dim(num_muscles)), rng);
  ck.rng_state = rng_to_string(make_rng(seed, kStreamTrainer));
  return ck;
}

Checkpoint transition(const Checkpoint& from, const StageConfig& to, std::uint64_t seed) {
  if (to.stage < 1 || to.stage > 4) throw InvalidTransition("stage must be 1..4");
  if (from.stage != to.source_stage) {
    throw InvalidTransition("stage " + std::to_string(to.stage) + " starts from a stage-" +
                            std::to_string(to.source_stage) + " checkpoint, got stage " + std::to_string(from.stage));
  }
  if (to.source_stage >= to.stage) throw InvalidTransition("stage order must increase");
  // Skipping a stage is only meaningful for the ablations that drop the
  // pattern-learning stage and start from a fresh exo actor.
  if (to.source_stage != to.stage - 1 && !to.reinit_exo) {
    throw InvalidTransition("stage " + std::to_string(to.stage) + " cannot skip stage " +
                            std::to_string(to.stage - 1) + " outside an ablation preset");
  }
  Checkpoint out = from;
  out.stage = to.stage;
  out.steps = 0;
  if (to.reinit_exo) {
    Rng rng = make_rng(seed, kStreamExoReinit, static_cast<std::uint64_t>(to.stage));
    out.exo = make_policy(exo_actor_spec(), rng);
  }
  const int base = human_obs_dim(out.human.output_dim(), false);
  if (to.augment_obs && out.human.input_dim() == base) {
    Rng rng = make_rng(seed, kStreamAugment, static_cast<std::uint64_t>(to.stage));
    out.human = augment_input(out.human, 2, 0.01, rng);
  } else if (!to.augment_obs && out.human.input_dim() != base) {
    throw InvalidTransition("stage " + std::to_string(to.stage) + " expects the base human observation");
  }
  return out;
}

WalkerModel stage_model(const RunContext& ctx, const StageConfig& cfg) {
  if (!cfg.exo_attached) return ctx.model;
  ExoAttachment exo = ctx.exo;
  exo.torque_limit = cfg.torque_limit;
  return attach_exo(ctx.model, exo);
}

std::vector<std::string> metrics_header() {
  std::vector<std::string> h{"step", "mean_episode_reward", "episodes", "mean_episode_length"};
  for (int k = 0; k < kNumTerms; ++k) h.push_back("r_" + std::string(reward_term_name(static_cast<RewardTerm>(k))));
  for (const char* c : {"policy_loss", "value_loss", "approx_kl", "clip_fraction", "entropy", "epochs_run",
                        "early_stopped", "mean_abs_u", "toe_off_pct"}) {
    h.emplace_back(c);
  }
  return h;
}

std::vector<double> metrics_row(const UpdateRecord& r) {
  std::vector<double> row{static_cast<double>(r.step), r.mean_episode_reward, static_cast<double>(r.episodes),
                          r.mean_episode_length};
  row.insert(row.end(), r.term_mean.begin(), r.term_mean.end());
  row.insert(row.end(), {r.stats.policy_loss, r.stats.value_loss, r.stats.approx_kl, r.stats.clip_fraction,
                         r.stats.entropy, static_cast<double>(r.stats.epochs_run),
                         r.stats.early_stopped ? 1.0 : 0.0, r.mean_abs_u, r.toe_off_pct});
  return row;
}

namespace {

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < n; i += threads) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename E>
[[noreturn]] void rethrow_at(const E& e, int stage, long long step) {
  throw E("stage " + std::to_string(stage) + ", step " + std::to_string(step) + ": " + e.what());
}

double mean_toe_off(const std::vector<double>& angle, const std::vector<double>& force, double mg) {
  if (angle.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(angle.data(), angle.size());
  const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(force.data(), force.size());
  try {
    std::vector<GaitCycle> cycles = segment_cycles(a, 1.0 / kControlDt);
    detect_toe_off(f, cycles, mg);
    double sum = 0.0;
    int n = 0;
    for (const GaitCycle& c : cycles) {
      if (c.toe_off) {
        sum += *c.toe_off;
        ++n;
      }
    }
    if (n > 0) return sum / n;
  } catch (const EmptySegmentation&) {
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

StageResult run_stage(const Checkpoint& start, const StageConfig& cfg, const RunContext& ctx) {
  if (start.stage != cfg.stage) {
    throw InvalidTransition("run_stage: checkpoint is prepared for stage " + std::to_string(start.stage) +
                            ", not " + std::to_string(cfg.stage));
  }
  if (!ctx.reference) throw ConfigError("run_stage: no reference gait");
  cfg.ppo.validate();
  if (cfg.mask.exo_learns && !cfg.mask.exo_acts) throw ConfigError("an exo actor that learns must act");

  StageResult res;
  res.checkpoint = start;
  Checkpoint& ck = res.checkpoint;
  const WalkerModel model = stage_model(ctx, cfg);
  const int nm = model.num_muscles();
  check_dimensions(ck, nm);
  const bool augmented = ck.human.input_dim() == human_obs_dim(nm, true);
  if (augmented != cfg.augment_obs) throw DimensionMismatch("human actor input does not match the stage");

  Rng rng = rng_from_string(ck.rng_state);
  const int n_envs = cfg.ppo.n_envs;
  const int steps = cfg.ppo.rollout_steps;
  std::vector<WalkerEnv> envs;
  envs.reserve(n_envs);
  for (int i = 0; i < n_envs; ++i) {
    Rng seeder = make_rng(ctx.seed, kStreamEnv, static_cast<std::uint64_t>(cfg.stage), static_cast<std::uint64_t>(i));
    envs.emplace_back(model, ctx.reference, cfg.weights, ctx.env, seeder());
  }

  Optimizers opt;
  opt.set_learning_rate(cfg.ppo.learning_rate);
  const int hdim = ck.human.input_dim();
  const int cdim = ck.critic.input_dim();
  std::vector<double> ep_return(n_envs, 0.0);
  std::vector<int> ep_length(n_envs, 0);
  std::vector<EnvStep> results(n_envs);
  const double mg = model.body_weight();

  while (ck.steps < cfg.budget) {
    RolloutBuffer buf(steps, n_envs, hdim, nm, ObsHistory::kExoObsDim, 2, cdim);
    UpdateRecord rec;
    double completed_return = 0.0;
    long long completed_length = 0;
    std::vector<double> trace_angle, trace_force;

    for (int t = 0; t < steps; ++t) {
      const int base = t * n_envs;
      for (int i = 0; i < n_envs; ++i) {
        buf.human.obs.col(base + i) = envs[i].human_obs(augmented);
        buf.exo.obs.col(base + i) = envs[i].exo_obs();
        buf.critic_obs.col(base + i) = envs[i].critic_obs();
      }
      const auto hobs = buf.human.obs.middleCols(base, n_envs);
      const BatchSample human = sample_actions(ck.human, hobs, rng, !cfg.mask.human_learns);
      buf.human.actions.middleCols(base, n_envs) = human.raw;
      buf.human.log_probs.segment(base, n_envs) = human.log_prob;
      Mat exo_cmd = Mat::Zero(2, n_envs);
      if (cfg.mask.exo_acts) {
        const BatchSample exo = sample_actions(ck.exo, buf.exo.obs.middleCols(base, n_envs), rng, !cfg.mask.exo_learns);
        buf.exo.actions.middleCols(base, n_envs) = exo.raw;
        buf.exo.log_probs.segment(base, n_envs) = exo.log_prob;
        exo_cmd = exo.action;
      }
      buf.values.segment(base, n_envs) = forward_batch(ck.critic, buf.critic_obs.middleCols(base, n_envs)).row(0);

      try {
        parallel_for(n_envs, ctx.threads, [&](int i) {
          results[i] = envs[i].step(human.action.col(i), exo_cmd.col(i));
        });
      } catch (const IntegrationDiverged& e) {
        rethrow_at(e, cfg.stage, ck.steps + base);
      }

      for (int i = 0; i < n_envs; ++i) {
        const EnvStep& r = results[i];
        buf.rewards[base + i] = r.reward.total;
        buf.dones[base + i] = r.done() ? 1.0 : 0.0;
        for (int k = 0; k < kNumTerms; ++k) rec.term_mean[k] += r.reward.weight[k] * r.reward.term[k];
        ep_return[i] += r.reward.total;
        ++ep_length[i];
        if (i == 0) {
          trace_angle.push_back(envs[0].state().q[kHipR]);
          trace_force.push_back(envs[0].state().foot_force_r);
        }
        if (r.done()) {
          completed_return += ep_return[i];
          completed_length += ep_length[i];
          ++rec.episodes;
          ep_return[i] = 0.0;
          ep_length[i] = 0;
          envs[i].reset();
        }
      }
    }
    Mat last_obs(cdim, n_envs);
    for (int i = 0; i < n_envs; ++i) last_obs.col(i) = envs[i].critic_obs();
    buf.last_values = forward_batch(ck.critic, last_obs).row(0).transpose();
    compute_gae(buf, cfg.ppo.gamma, cfg.ppo.gae_lambda);

    try {
      rec.stats = ppo_update(ck.human, ck.exo, ck.critic, opt, buf, cfg.ppo, cfg.mask, rng);
    } catch (const UpdateDiverged& e) {
      rethrow_at(e, cfg.stage, ck.steps + buf.size());
    }

    ck.steps += buf.size();
    rec.step = ck.steps;
    for (double& v : rec.term_mean) v /= buf.size();
    if (rec.episodes > 0) {
      rec.mean_episode_reward = completed_return / rec.episodes;
      rec.mean_episode_length = static_cast<double>(completed_length) / rec.episodes;
    } else {
      // No episode ended in this rollout: report the running returns.
      double sum = 0.0, len = 0.0;
      for (int i = 0; i < n_envs; ++i) {
        sum += ep_return[i];
        len += ep_length[i];
      }
      rec.mean_episode_reward = sum / n_envs;
      rec.mean_episode_length = len / n_envs;
    }
    if (cfg.mask.exo_acts) {
      const Mat mean = forward_batch(ck.exo, buf.exo.obs);
      rec.mean_abs_u = mean.cwiseMax(-1.0).cwiseMin(1.0).cwiseAbs().mean();
    }
    rec.toe_off_pct = mean_toe_off(trace_angle, trace_force, mg);
    res.log.push_back(rec);
    if (ctx.on_update) ctx.on_update(rec);
  }
  if (!res.log.empty()) {
    ck.config_hash = ctx.config_hash;
    ck.rng_state = rng_to_string(rng);
  }
  res.eval = evaluate(ck, cfg, ctx);
  return res;
}

EvalTrace evaluate(const Checkpoint& ckpt, const StageConfig& cfg, const RunContext& ctx) {
  const WalkerModel model = stage_model(ctx, cfg);
  const int nm = model.num_muscles();
  check_dimensions(ckpt, nm);
  const bool augmented = ckpt.human.input_dim() == human_obs_dim(nm, true);
  Rng seeder = make_rng(ctx.seed, kStreamEval, static_cast<std::uint64_t>(cfg.stage));
  WalkerEnv env(model, ctx.reference, cfg.weights, ctx.env, seeder());
  Rng unused(0);

  const int n = std::max(ctx.eval_steps, 1);
  EvalTrace ev;
  ev.activations.resize(n + 1, nm);
  ev.joint_angles.resize(n + 1, kNumTracked);
  std::vector<double> cols[11];
  auto record = [&](int k, const Eigen::Vector2d& u) {
    const SimState& s = env.state();
    const double vals[11] = {s.time,           s.q[kHipR],       s.q[kHipL],         s.qd[kHipR],
                             s.qd[kHipL],      s.exo_torque[0],  s.exo_torque[1],    s.foot_force_r,
                             s.foot_force_l,   u[0],             u[1]};
    for (int c = 0; c < 11; ++c) cols[c].push_back(vals[c]);
    ev.activations.row(k) = s.activations.transpose();
    ev.joint_angles.row(k) = s.q.tail<kNumTracked>().transpose();
  };
  record(0, Eigen::Vector2d::Zero());
  int k = 0;
  while (k < n) {
    const Vec a = sample_action(ckpt.human, env.human_obs(augmented), unused, true).action;
    Eigen::Vector2d u = Eigen::Vector2d::Zero();
    if (cfg.mask.exo_acts) u = sample_action(ckpt.exo, env.exo_obs(), unused, true).action;
    const EnvStep r = env.step(a, u);
    ++k;
    record(k, u);
    if (r.fallen) {
      ev.fallen = true;
      break;
    }
  }
  auto vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval(); };
  ev.trace.time = vec(cols[0]);
  ev.trace.angle_r = vec(cols[1]);
  ev.trace.angle_l = vec(cols[2]);
  ev.trace.vel_r = vec(cols[3]);
  ev.trace.vel_l = vec(cols[4]);
  ev.trace.torque_r = vec(cols[5]);
  ev.trace.torque_l = vec(cols[6]);
  ev.trace.foot_force_r = vec(cols[7]);
  ev.trace.foot_force_l = vec(cols[8]);
  ev.u_r = vec(cols[9]);
  ev.u_l = vec(cols[10]);
  ev.activations.conservativeResize(k + 1, nm);
  ev.joint_angles.conservativeResize(k + 1, kNumTracked);
  for (const MuscleSpec& m : model.muscles) ev.muscle_names.push_back(m.name);
  return ev;
}

void write_eval_trace(const std::string& path, const EvalTrace& ev) {
  std::vector<std::string> header = gait_trace_columns();
  header.push_back("u_r");
  header.push_back("u_l");
  for (const std::string& m : ev.muscle_names) header.push_back("act_" + m);
  for (int j = 0; j < kNumTracked; ++j) header.push_back(std::string("q_") + ReferenceGait::joint_name(j));
  const GaitTrace& t = ev.trace;
  std::vector<std::vector<double>> rows(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    rows[i] = {t.time[i],     t.angle_r[i],      t.angle_l[i],      t.vel_r[i],        t.vel_l[i],    t.torque_r[i],
               t.torque_l[i], t.foot_force_r[i], t.foot_force_l[i], ev.u_r[i],         ev.u_l[i]};
    for (Eigen::Index m = 0; m < ev.activations.cols(); ++m) rows[i].push_back(ev.activations(i, m));
    for (int j = 0; j < kNumTracked; ++j) rows[i].push_back(ev.joint_angles(i, j));
  }
  write_csv(path, header, rows);
}

EvalTrace read_eval_trace(const std::string& path) {
  EvalTrace ev;
  ev.trace = read_gait_trace(path);
  const CsvTable t = read_csv(path);
  auto vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval(); };
  ev.u_r = vec(t.column("u_r"));
  ev.u_l = vec(t.column("u_l"));
  for (const std::string& h : t.header) {
    if (h.rfind("act_", 0) == 0) ev.muscle_names.push_back(h.substr(4));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(t.rows());
  ev.activations.resize(n, static_cast<Eigen::Index>(ev.muscle_names.size()));
  for (std::size_t m = 0; m < ev.muscle_names.size(); ++m) {
    ev.activations.col(static_cast<Eigen::Index>(m)) = vec(t.column("act_" + ev.muscle_names[m]));
  }
  ev.joint_angles.resize(n, kNumTracked);
  for (int j = 0; j < kNumTracked; ++j) {
    ev.joint_angles.col(j) = vec(t.column(std::string("q_") + ReferenceGait::joint_name(j)));
  }
  return ev;
}

}  // namespace smat
