#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "empo2/env.hpp"
#include "empo2/memory.hpp"
#include "empo2/policy.hpp"
#include "empo2/random.hpp"
#include "empo2/tip.hpp"

namespace empo2 {

inline constexpr int kMaxEpisodeSteps = 30;

enum class RolloutMode { kWithoutMemory, kMemoryAugmented };

std::string to_string(RolloutMode mode);
RolloutMode rollout_mode_from_string(std::string_view text);

struct StepRecord {
  Observation obs;
  ActionId action;
  int admissible_count = 0;
  std::vector<Tokens> action_tokens;  // admissible list, in id order
  ContextFeatures context;            // exactly what the action was sampled from
  double reward_ext = 0.0;
  double reward_int = 0.0;
  double behavior_logprob = 0.0;
  std::vector<std::uint64_t> tip_ids;
};

struct Trajectory {
  TaskSpec task;
  std::vector<StepRecord> steps;
  double return_ext = 0.0;
  double return_total = 0.0;
  RolloutMode mode = RolloutMode::kWithoutMemory;
  bool success = false;
  Observation final_obs;
  std::vector<std::string> missing_milestones;  // at episode end
};

// MemoryAugmented with probability p. Always consumes one draw.
RolloutMode sample_rollout_mode(double p, Rng& rng);

struct RolloutConfig {
  int group_size = 8;  // N
  int max_steps = kMaxEpisodeSteps;
};

// Action selection inside one episode.
enum class ActionSelect { kSample, kGreedy };

// Runs one episode from reset. When `memory` is non-null, tips are retrieved
// at every step with key embed(obs tokens) and injected into
// featurization. `rng` is only used with kSample.
Trajectory run_episode(const TaskSpec& task, const PolicyParams& params,
                       const TipMemory* memory, RolloutMode mode, ActionSelect select,
                       int max_steps, Rng* rng);

// Retrieval key for a decision point.
std::vector<double> retrieval_key(const Observation& obs);

// Runs B tasks x N copies. Trajectory i*N + j is copy j of task i and uses
// the rng stream derive_seed(seed, {i*N + j}). The memory bank is read only;
// a task whose family has no buffer sees no tips.
std::vector<Trajectory> run_group(std::span<const TaskSpec> tasks, const PolicyParams& params_old,
                                  const MemoryBank& mems, RolloutMode mode,
                                  const RolloutConfig& config, std::uint64_t seed);

// Turns a finished trajectory into a tip.
class TipGenerator {
 public:
  virtual ~TipGenerator() = default;
  virtual Tip generate(const Trajectory& traj) const = 0;
};

// Template tip: missing milestones, last action, extrinsic score. The key is
// embed(final observation tokens + task tokens).
class TemplateTipGenerator : public TipGenerator {
 public:
  Tip generate(const Trajectory& traj) const override;
};

Tip generate_tip(const Trajectory& traj);

// Fills reward_int per step from the novelty store (visit order) and sets
// return_total = return_ext + lambda_int * sum(reward_int).
void assign_intrinsic(Trajectory& traj, NoveltyStore& store, double lambda_int);

// JSON-lines trajectory dump. Contexts are included only when asked, since
// they dominate the size.
nlohmann::json trajectory_to_json(const Trajectory& traj, bool with_context = false);
Trajectory trajectory_from_json(const nlohmann::json& j);
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajs,
                        bool with_context = false);
std::vector<Trajectory> read_trajectories(std::istream& in);

}  // namespace empo2
