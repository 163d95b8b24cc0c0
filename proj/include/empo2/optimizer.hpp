#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "empo2/policy.hpp"
#include "empo2/random.hpp"
#include "empo2/rollout.hpp"

namespace empo2 {

enum class UpdateMode { kOnPolicy, kOffPolicy };

// How the off-policy ratio is built.
//   kTable3: current side without tips, old side the recorded (with-tip)
//            behavior log-probability.
//   kAlg1:   current side without tips, old side recomputed without tips.
enum class OffPolicyRatio { kTable3, kAlg1 };

std::string to_string(UpdateMode mode);
std::string to_string(OffPolicyRatio r);
OffPolicyRatio offpolicy_ratio_from_string(std::string_view text);

struct UpdateConfig {
  double eps_low = 0.20;
  double eps_high = 0.30;
  double dual_clip_c = 10.0;
  double beta = 0.0;
  double delta = 1e-6;
  double lr = 1.0;
  double eps_std = 1e-8;
  double lambda_int = 1.0;
  double p = 0.25;
  double q = 2.0 / 3.0;
  OffPolicyRatio offpolicy_ratio = OffPolicyRatio::kAlg1;
  int horizon = kMaxEpisodeSteps;  // T in the 1/(B N T) normalizer

  // Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct GroupBatch {
  std::vector<Trajectory> trajectories;
  std::vector<std::vector<std::size_t>> groups;  // trajectory indices per task
  std::vector<double> advantages;                // per trajectory, broadcast to its actions
  std::vector<std::vector<double>> old_logprobs;  // per trajectory, per step
  UpdateMode mode = UpdateMode::kOnPolicy;
  bool prepared = false;

  std::size_t action_count() const;
};

// Population-standardized returns; all zeros when std < eps_std.
std::vector<double> group_advantages(std::span<const double> returns, double eps_std);

// Groups consecutive runs of `group_size` trajectories and fills advantages
// from return_total.
GroupBatch make_batch(std::vector<Trajectory> trajectories, std::size_t group_size,
                      double eps_std);

// Plain rollouts are always on-policy and consume no draw; memory rollouts go
// off-policy with probability q.
UpdateMode select_update_mode(double q, Rng& rng, RolloutMode traj_mode);

void prepare_old_logprobs(GroupBatch& batch, UpdateMode mode, const PolicyParams& params_old,
                          OffPolicyRatio ratio = OffPolicyRatio::kTable3);

// Current-side context for a step under the batch's update mode.
const ContextFeatures& current_context(const StepRecord& step, UpdateMode mode,
                                       RolloutMode traj_mode, ContextFeatures& scratch);

struct SurrogateStats {
  double objective = 0.0;
  double surrogate = 0.0;  // objective before the KL penalty
  double kl = 0.0;         // mean over visited states
  double entropy = 0.0;    // mean no-tip entropy over visited states
  double mean_abs_ratio_dev = 0.0;
  double clip_fraction = 0.0;
  double mask_fraction = 0.0;
  std::size_t actions = 0;
};

struct SurrogateResult {
  double objective = 0.0;
  Gradient gradient;
  SurrogateStats stats;
};

// rho for one step of a prepared batch, computed the way the surrogate does.
double importance_ratio(const GroupBatch& batch, const PolicyParams& params, std::size_t traj,
                        std::size_t step);

// Per-action term for one (rho, A): min(rho A, clip(rho) A), floored at c A
// when A < 0. Exposed for fixtures.
double clipped_term(double rho, double advantage, const UpdateConfig& cfg);
// True when the term's derivative in rho is A (not clipped flat).
bool term_active(double rho, double advantage, const UpdateConfig& cfg);

// Masked clipped surrogate averaged by 1/(B N T), minus beta * mean KL.
// Throws NonFiniteError with the failing location on any NaN or infinity.
SurrogateResult surrogate_objective(const GroupBatch& batch, const PolicyParams& params,
                                    const PolicyParams& ref, const UpdateConfig& cfg);

// Gradient ascent step; version + 1.
PolicyParams apply_update(const PolicyParams& params, const Gradient& gradient, double lr);

struct GroupStats {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct UpdateReport {
  SurrogateStats stats;
  double grad_norm = 0.0;
  RolloutMode rollout_mode = RolloutMode::kWithoutMemory;
  UpdateMode update_mode = UpdateMode::kOnPolicy;
  std::vector<GroupStats> groups;  // extrinsic returns per task group
};

std::vector<GroupStats> group_return_stats(const GroupBatch& batch);
nlohmann::json to_json(const UpdateReport& report);

}  // namespace empo2
