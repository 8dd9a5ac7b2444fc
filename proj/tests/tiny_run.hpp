// Desk-scale training fixtures shared by unit and acceptance tests.
#pragma once

#include "smat/curriculum.hpp"
#include "smat/reference_gait.hpp"

#include <memory>

namespace fixture {

inline smat::PlanOverrides tiny_overrides(long long budget, smat::Preset preset = smat::Preset::kFullSmat) {
  smat::PlanOverrides ov;
  ov.budgets = {budget, budget, budget, budget};
  ov.ppo.n_envs = 2;
  ov.ppo.rollout_steps = 32;
  ov.ppo.minibatch_size = 32;
  ov.ppo.epochs = 2;
  ov.preset = preset;
  return ov;
}

inline smat::RunContext tiny_context(std::uint64_t seed, int threads = 2) {
  smat::RunContext ctx;
  ctx.reference = std::make_shared<const smat::ReferenceGait>(smat::ReferenceGait::parametric());
  ctx.seed = seed;
  ctx.threads = threads;
  ctx.eval_steps = 25;
  ctx.env.max_episode_steps = 200;
  return ctx;
}

}  // namespace fixture
