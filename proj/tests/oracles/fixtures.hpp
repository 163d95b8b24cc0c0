#pragma once

// Hand-built batches for optimizer tests and the acceptance suite.

#include <vector>

#include "empo2/optimizer.hpp"
#include "empo2/policy.hpp"
#include "empo2/rollout.hpp"

namespace empo2::fixture {

// 2-4 actions, base feature a for action a, tip features on a separate set
// of buckets.
inline ContextFeatures context(std::size_t actions, bool tips) {
  ContextFeatures ctx;
  ctx.tip_present = tips;
  for (std::size_t a = 0; a < actions; ++a) {
    ctx.base.push_back({{static_cast<std::uint32_t>(a), 1.0}});
    if (tips)
      ctx.tip.push_back({{static_cast<std::uint32_t>(a), 1.0}, {static_cast<std::uint32_t>(7), 0.5}});
    else
      ctx.tip.push_back({});
  }
  return ctx;
}

inline FeatureSpace space() { return FeatureSpace{8, 8, kDefaultFeatureSalt}; }

// One-step trajectory whose action was sampled by `behavior` from `ctx`.
inline Trajectory one_step(const ContextFeatures& ctx, int action, const PolicyParams& behavior,
                           RolloutMode mode) {
  StepRecord s;
  s.action = ActionId{action};
  s.admissible_count = static_cast<int>(ctx.action_count());
  for (std::size_t a = 0; a < ctx.action_count(); ++a) s.action_tokens.push_back({"a" + std::to_string(a)});
  s.context = ctx;
  s.behavior_logprob = logprob(behavior, ctx, s.action);
  if (ctx.tip_present) s.tip_ids = {0};
  Trajectory t;
  t.steps = {s};
  t.mode = mode;
  return t;
}

// Batch with explicit advantages, one group holding everything.
inline GroupBatch batch(std::vector<Trajectory> trajs, std::vector<double> advantages) {
  GroupBatch b;
  b.trajectories = std::move(trajs);
  b.advantages = std::move(advantages);
  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < b.trajectories.size(); ++i) all.push_back(i);
  b.groups = {all};
  return b;
}

}  // namespace empo2::fixture
