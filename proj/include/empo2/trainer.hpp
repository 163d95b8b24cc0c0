#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "empo2/config.hpp"
#include "empo2/memory.hpp"
#include "empo2/optimizer.hpp"
#include "empo2/policy.hpp"
#include "empo2/random.hpp"
#include "empo2/rollout.hpp"

namespace empo2 {

// Lifetime of the novelty store behind the intrinsic reward: one store per
// trajectory, or one store for the whole run.
enum class NoveltyScope { kEpisode, kRun };

std::string to_string(NoveltyScope scope);
NoveltyScope novelty_scope_from_string(std::string_view text);

struct TrainConfig {
  std::string env = "lightbulb-world";
  std::vector<std::uint64_t> train_variants = {0, 1, 2, 3, 4};
  std::vector<std::uint64_t> test_variants = {5,  6,  7,  8,  9,  10, 11, 12, 13, 14,
                                              15, 16, 17, 18, 19, 20, 21, 22, 23, 24};
  int batch_tasks = 16;  // B
  int group_size = 8;   // N
  int max_steps = kMaxEpisodeSteps;
  int iterations = 300;
  UpdateConfig update;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 0;  // 0: derived from seed
  bool eval_sampled = false;
  int eval_every = 1;
  int eval_episodes = 1;  // per test variant
  double tip_prior = 16.0;
  double theta_state = 0.95;
  NoveltyScope novelty_scope = NoveltyScope::kRun;
  std::size_t base_dim = 512;
  std::size_t tip_dim = 512;
  std::uint64_t feature_salt = kDefaultFeatureSalt;

  void validate() const;
  // Every field as key=value text, in a fixed order.
  KeyValues to_key_values() const;
  // Throws InvalidArgument naming the key on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
};

struct EvalSummary {
  double mean_return = 0.0;
  double median_return = 0.0;
  double success_rate = 0.0;
  std::vector<double> returns;  // per episode, variant-major
};

struct EvalOptions {
  bool use_memory = false;
  int episodes_per_variant = 1;
  ActionSelect select = ActionSelect::kGreedy;
  std::uint64_t seed = 0;  // sampled selection only
  int max_steps = kMaxEpisodeSteps;
};

// Episode e on variant v uses rng derive_seed(seed, {trial, v, e}); evaluate
// is trial 0.
EvalSummary evaluate(const PolicyParams& params, const std::string& family,
                     const std::vector<std::uint64_t>& variants, const EvalOptions& options,
                     const TipMemory* memory = nullptr);

struct AdaptOptions {
  int trials = 10;  // K
  int episodes_per_variant = 1;
  ActionSelect select = ActionSelect::kSample;
  std::uint64_t seed = 0;
  int max_steps = kMaxEpisodeSteps;
};

// One adaptation trial: memory-augmented episodes with frozen params, then one
// tip per episode appended to `memory`, in episode order.
EvalSummary adapt_trial(const PolicyParams& params, const std::string& family,
                        const std::vector<std::uint64_t>& variants, const AdaptOptions& options,
                        int trial, TipMemory& memory);
// K trials from an empty buffer. Returns one summary per trial.
std::vector<EvalSummary> adapt(const PolicyParams& params, const std::string& family,
                               const std::vector<std::uint64_t>& variants,
                               const AdaptOptions& options, TipMemory* memory_out = nullptr);

struct MetricsRecord {
  int iteration = 0;
  std::uint64_t wall_step = 0;  // cumulative training environment steps
  double train_mean_return = 0.0;
  double train_median_return = 0.0;
  double train_success = 0.0;
  double train_intrinsic = 0.0;  // mean per-trajectory intrinsic sum
  std::optional<EvalSummary> eval;
  double entropy = 0.0;
  double mask_fraction = 0.0;
  bool memory_rollout = false;
  bool offpolicy_update = false;
  std::size_t memory_size = 0;
  UpdateReport update;

  nlohmann::json to_json() const;
};

// Runs the training loop. Owns every piece of mutable run state, so a
// checkpoint of this object is enough to resume exactly.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  static Trainer resume(const std::filesystem::path& checkpoint_dir);

  // One iteration. Throws NonFiniteError after writing a dump when a dump
  // directory is set.
  MetricsRecord step();
  // Steps until config().iterations, writing one JSON line per iteration.
  // `on_iteration` runs after each record is written.
  void run(std::ostream* metrics,
           const std::function<void(const Trainer&, const MetricsRecord&)>& on_iteration = {});

  void save_checkpoint(const std::filesystem::path& dir) const;
  void set_dump_dir(std::filesystem::path dir) { dump_dir_ = std::move(dir); }

  const TrainConfig& config() const { return config_; }
  TrainConfig& mutable_config() { return config_; }
  const PolicyParams& params() const { return params_; }
  const PolicyParams& ref_params() const { return ref_; }
  const MemoryBank& memories() const { return mems_; }
  const NoveltyStore& novelty() const { return novelty_; }
  int iteration() const { return iteration_; }
  std::uint64_t wall_step() const { return wall_step_; }

 private:
  struct ResumeTag {};
  Trainer(TrainConfig config, ResumeTag);
  std::vector<TaskSpec> sample_tasks();
  EvalSummary run_eval() const;

  TrainConfig config_;
  PolicyParams params_;
  PolicyParams ref_;
  MemoryBank mems_;
  NoveltyStore novelty_;
  Rng task_rng_;
  Rng mode_rng_;
  Rng rollout_rng_;
  TemplateTipGenerator tip_generator_;
  int iteration_ = 0;
  std::uint64_t wall_step_ = 0;
  std::filesystem::path dump_dir_;
};

// Seed streams fanned out from the master seed.
enum SeedStream : std::uint64_t {
  kTaskStream = 1,
  kModeStream = 2,
  kRolloutStream = 3,
  kEvalStream = 4,
};

PolicyParams initial_params(const TrainConfig& config);

}  // namespace empo2
