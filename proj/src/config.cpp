#include "smat/config.hpp"

#include "smat/checkpoint.hpp"
#include "smat/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace smat {

using nlohmann::json;

namespace {

// Reads known keys of one JSON object and rejects everything else.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(label(key) + " has the wrong type");
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + label(item.key()) + "'");
    }
  }

 private:
  std::string label(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void positive(double x, const char* what) {
  if (!(x > 0.0)) throw ConfigError(std::string(what) + " must be > 0");
}

void non_negative(double x, const char* what) {
  if (!(x >= 0.0)) throw ConfigError(std::string(what) + " must be >= 0");
}

}  // namespace

void RunConfig::validate() const {
  if (version != kConfigVersion) throw ConfigError("unsupported config version " + std::to_string(version));
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  for (const BodySegment* b : {&model.torso, &model.thigh, &model.shank, &model.foot}) {
    positive(b->mass, "model.segments mass");
    positive(b->length, "model.segments length");
    positive(b->inertia, "model.segments inertia");
  }
  non_negative(model.exo_pelvis_mass, "model.exo_pelvis_mass");
  non_negative(model.exo_thigh_mass, "model.exo_thigh_mass");
  positive(model.physics_dt, "model.physics_dt");
  if (model.physics_dt > kControlDt) throw ConfigError("model.physics_dt must not exceed the control step");
  positive(model.contact_stiffness, "model.contact_stiffness");
  non_negative(model.contact_damping, "model.contact_damping");
  non_negative(model.friction, "model.friction");
  non_negative(model.limit_stiffness, "model.limit_stiffness");
  non_negative(model.limit_damping, "model.limit_damping");
  for (int k = 0; k < 4; ++k) {
    if (plan.budgets[k] < 0) throw ConfigError("plan.budgets must be >= 0");
    PpoConfig p = plan.ppo;
    p.learning_rate = plan.learning_rate[k];
    p.ent_coef = plan.ent_coef[k];
    p.validate();
  }
  positive(rewards.v_star, "rewards.v_star");
  if (rewards.joint_weights) {
    for (double w : *rewards.joint_weights) non_negative(w, "rewards.joint_weights");
  }
  positive(rewards.exo.omega_s, "rewards.exo.omega_s");
  if (env.max_episode_steps < 1) throw ConfigError("env.max_episode_steps must be >= 1");
  non_negative(env.init_noise, "env.init_noise");
  if (env.eval_steps < 1) throw ConfigError("env.eval_steps must be >= 1");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "");
  root.get("version", c.version);
  root.get("seed", c.seed);
  root.get("output_dir", c.output_dir);
  std::string preset(preset_name(c.preset));
  root.get("preset", preset);
  c.preset = parse_preset(preset);
  c.plan.preset = c.preset;

  Section m = root.sub("model");
  {
    Section seg = m.sub("segments");
    const std::pair<const char*, BodySegment*> parts[] = {
        {"torso", &c.model.torso}, {"thigh", &c.model.thigh}, {"shank", &c.model.shank}, {"foot", &c.model.foot}};
    for (const auto& [name, part] : parts) {
      Section one = seg.sub(name);
      one.get("mass", part->mass);
      one.get("length", part->length);
      one.get("inertia", part->inertia);
      one.finish();
    }
    seg.finish();
  }
  m.get("exo_pelvis_mass", c.model.exo_pelvis_mass);
  m.get("exo_thigh_mass", c.model.exo_thigh_mass);
  m.get("physics_dt", c.model.physics_dt);
  m.get("contact_stiffness", c.model.contact_stiffness);
  m.get("contact_damping", c.model.contact_damping);
  m.get("friction", c.model.friction);
  m.get("limit_stiffness", c.model.limit_stiffness);
  m.get("limit_damping", c.model.limit_damping);
  m.finish();

  Section pl = root.sub("plan");
  pl.get("budgets", c.plan.budgets);
  pl.finish();

  Section pp = root.sub("ppo");
  PpoConfig& p = c.plan.ppo;
  pp.get("learning_rate", c.plan.learning_rate);
  pp.get("ent_coef", c.plan.ent_coef);
  pp.get("clip_range", p.clip_range);
  pp.get("rollout_steps", p.rollout_steps);
  pp.get("minibatch_size", p.minibatch_size);
  pp.get("epochs", p.epochs);
  pp.get("gamma", p.gamma);
  pp.get("gae_lambda", p.gae_lambda);
  pp.get("target_kl", p.target_kl);
  pp.get("max_grad_norm", p.max_grad_norm);
  pp.get("vf_coef", p.vf_coef);
  pp.get("n_envs", p.n_envs);
  pp.finish();
  p.seed = c.seed;

  Section r = root.sub("rewards");
  r.get("v_star", c.rewards.v_star);
  r.get("reference_csv", c.rewards.reference_csv);
  std::optional<std::array<double, kNumTracked>> jw;
  json jw_raw = nullptr;
  r.get("joint_weights", jw_raw);
  if (!jw_raw.is_null()) {
    std::array<double, kNumTracked> w{};
    try {
      w = jw_raw.get<std::array<double, kNumTracked>>();
    } catch (const json::exception&) {
      throw ConfigError("rewards.joint_weights must be null or an array of 7 numbers");
    }
    if (jw_raw.size() != kNumTracked) throw ConfigError("rewards.joint_weights must have 7 entries");
    jw = w;
  }
  c.rewards.joint_weights = jw;
  c.plan.joint_weights = jw;
  Section ex = r.sub("exo");
  ex.get("alpha_d", c.rewards.exo.alpha_d);
  ex.get("alpha", c.rewards.exo.alpha);
  ex.get("beta", c.rewards.exo.beta);
  ex.get("lambda_s", c.rewards.exo.lambda_s);
  ex.get("delta", c.rewards.exo.delta);
  ex.get("omega_s", c.rewards.exo.omega_s);
  ex.finish();
  r.finish();

  Section e = root.sub("env");
  e.get("max_episode_steps", c.env.max_episode_steps);
  e.get("init_noise", c.env.init_noise);
  e.get("eval_steps", c.env.eval_steps);
  e.finish();
  root.finish();

  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

namespace {

json segment_json(const BodySegment& b) { return {{"mass", b.mass}, {"length", b.length}, {"inertia", b.inertia}}; }

void set_segment(Segment& s, const BodySegment& b) {
  s.mass = b.mass;
  s.length = b.length;
  s.inertia = b.inertia;
}

}  // namespace

std::string dump_config(const RunConfig& c) {
  const PpoConfig& p = c.plan.ppo;
  json jw = nullptr;
  if (c.rewards.joint_weights) jw = *c.rewards.joint_weights;
  const json j = {
      {"version", c.version},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"preset", std::string(preset_name(c.preset))},
      {"model",
       {{"segments",
         {{"torso", segment_json(c.model.torso)},
          {"thigh", segment_json(c.model.thigh)},
          {"shank", segment_json(c.model.shank)},
          {"foot", segment_json(c.model.foot)}}},
        {"exo_pelvis_mass", c.model.exo_pelvis_mass},
        {"exo_thigh_mass", c.model.exo_thigh_mass},
        {"physics_dt", c.model.physics_dt},
        {"contact_stiffness", c.model.contact_stiffness},
        {"contact_damping", c.model.contact_damping},
        {"friction", c.model.friction},
        {"limit_stiffness", c.model.limit_stiffness},
        {"limit_damping", c.model.limit_damping}}},
      {"plan", {{"budgets", c.plan.budgets}}},
      {"ppo",
       {{"learning_rate", c.plan.learning_rate},
        {"ent_coef", c.plan.ent_coef},
        {"clip_range", p.clip_range},
        {"rollout_steps", p.rollout_steps},
        {"minibatch_size", p.minibatch_size},
        {"epochs", p.epochs},
        {"gamma", p.gamma},
        {"gae_lambda", p.gae_lambda},
        {"target_kl", p.target_kl},
        {"max_grad_norm", p.max_grad_norm},
        {"vf_coef", p.vf_coef},
        {"n_envs", p.n_envs}}},
      {"rewards",
       {{"v_star", c.rewards.v_star},
        {"reference_csv", c.rewards.reference_csv},
        {"joint_weights", jw},
        {"exo",
         {{"alpha_d", c.rewards.exo.alpha_d},
          {"alpha", c.rewards.exo.alpha},
          {"beta", c.rewards.exo.beta},
          {"lambda_s", c.rewards.exo.lambda_s},
          {"delta", c.rewards.exo.delta},
          {"omega_s", c.rewards.exo.omega_s}}}}},
      {"env",
       {{"max_episode_steps", c.env.max_episode_steps},
        {"init_noise", c.env.init_noise},
        {"eval_steps", c.env.eval_steps}}},
  };
  return j.dump(2) + "\n";
}

std::uint64_t config_hash(const RunConfig& cfg) {
  // output_dir does not affect results.
  RunConfig c = cfg;
  c.output_dir = "-";
  return fnv1a64(dump_config(c));
}

RunContext make_context(const RunConfig& cfg, int threads) {
  RunContext ctx;
  WalkerModel& m = ctx.model;
  set_segment(m.segments[kTorso], cfg.model.torso);
  for (int id : {kThighR, kThighL}) set_segment(m.segments[id], cfg.model.thigh);
  for (int id : {kShankR, kShankL}) set_segment(m.segments[id], cfg.model.shank);
  for (int id : {kFootR, kFootL}) set_segment(m.segments[id], cfg.model.foot);
  m.physics_dt = cfg.model.physics_dt;
  m.contact.stiffness = cfg.model.contact_stiffness;
  m.contact.damping = cfg.model.contact_damping;
  m.contact.friction = cfg.model.friction;
  m.limit_stiffness = cfg.model.limit_stiffness;
  m.limit_damping = cfg.model.limit_damping;
  m.validate();
  ctx.exo.pelvis_mass = cfg.model.exo_pelvis_mass;
  ctx.exo.thigh_mass = cfg.model.exo_thigh_mass;
  ctx.reference = std::make_shared<const ReferenceGait>(
      cfg.rewards.reference_csv.empty() ? ReferenceGait::parametric() : ReferenceGait::from_csv(cfg.rewards.reference_csv));
  ctx.env.v_star = cfg.rewards.v_star;
  ctx.env.max_episode_steps = cfg.env.max_episode_steps;
  ctx.env.init_noise = cfg.env.init_noise;
  ctx.env.exo_reward = cfg.rewards.exo;
  ctx.seed = cfg.seed;
  ctx.config_hash = config_hash(cfg);
  ctx.threads = std::max(threads, 1);
  ctx.eval_steps = cfg.env.eval_steps;
  return ctx;
}

}  // namespace smat
