#include "empo2/trainer.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "empo2/stats.hpp"

namespace empo2 {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TrainConfig

std::string to_string(NoveltyScope scope) {
  return scope == NoveltyScope::kRun ? "run" : "episode";
}

NoveltyScope novelty_scope_from_string(std::string_view text) {
  if (text == "episode") return NoveltyScope::kEpisode;
  if (text == "run") return NoveltyScope::kRun;
  throw InvalidArgument("novelty_scope must be episode or run, got '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
  };
  require(find_env_spec(env) != nullptr, "env: unknown family '" + env + "'");
  require(!train_variants.empty(), "train_variants: must not be empty");
  require(!test_variants.empty(), "test_variants: must not be empty");
  const auto spec = find_env_spec(env);
  for (auto v : train_variants) {
    require(v < spec->variants, "train_variants: variant " + std::to_string(v) + " out of range");
    for (auto w : test_variants)
      require(v != w, "train_variants and test_variants must be disjoint");
  }
  for (auto v : test_variants)
    require(v < spec->variants, "test_variants: variant " + std::to_string(v) + " out of range");
  require(batch_tasks >= 1, "batch_tasks: must be positive");
  require(group_size >= 2, "group_size: must be at least 2");
  require(max_steps >= 1 && max_steps <= kMaxEpisodeSteps, "max_steps: must lie in [1, 30]");
  require(iterations >= 0, "iterations: must be >= 0");
  require(eval_every >= 0, "eval_every: must be >= 0");
  require(eval_episodes >= 1, "eval_episodes: must be positive");
  require(std::isfinite(tip_prior), "tip_prior: must be finite");
  require(theta_state > 0.0 && theta_state < 1.0, "theta_state: must lie in (0, 1)");
  require(base_dim >= 1 && tip_dim > 5, "base_dim must be positive and tip_dim above 5");
  update.validate();
}

KeyValues TrainConfig::to_key_values() const {
  const auto& u = update;
  return {
      {"env", env},
      {"train_variants", format_index_list(train_variants)},
      {"test_variants", format_index_list(test_variants)},
      {"batch_tasks", std::to_string(batch_tasks)},
      {"group_size", std::to_string(group_size)},
      {"max_steps", std::to_string(max_steps)},
      {"iterations", std::to_string(iterations)},
      {"seed", std::to_string(seed)},
      {"eval_seed", std::to_string(eval_seed)},
      {"eval_sampled", eval_sampled ? "true" : "false"},
      {"eval_every", std::to_string(eval_every)},
      {"eval_episodes", std::to_string(eval_episodes)},
      {"tip_prior", format_double(tip_prior)},
      {"theta_state", format_double(theta_state)},
      {"novelty_scope", to_string(novelty_scope)},
      {"base_dim", std::to_string(base_dim)},
      {"tip_dim", std::to_string(tip_dim)},
      {"feature_salt", std::to_string(feature_salt)},
      {"p", format_double(u.p)},
      {"q", format_double(u.q)},
      {"lambda_int", format_double(u.lambda_int)},
      {"beta", format_double(u.beta)},
      {"delta", format_double(u.delta)},
      {"lr", format_double(u.lr)},
      {"eps_low", format_double(u.eps_low)},
      {"eps_high", format_double(u.eps_high)},
      {"dual_clip_c", format_double(u.dual_clip_c)},
      {"eps_std", format_double(u.eps_std)},
      {"offpolicy_ratio", to_string(u.offpolicy_ratio)},
      {"horizon", std::to_string(u.horizon)},
  };
}

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    const auto x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const auto x = to_u64(key, v);
  if (x > 100000000) throw InvalidArgument(key + ": value too large");
  return static_cast<int>(x);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const FormatError&) {
    throw InvalidArgument(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::uint64_t> to_indices(const std::string& key, const std::string& v) {
  try {
    return parse_index_list(v);
  } catch (const FormatError& e) {
    throw InvalidArgument(key + ": " + e.what());
  }
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  auto& u = update;
  if (key == "env") env = value;
  else if (key == "train_variants") train_variants = to_indices(key, value);
  else if (key == "test_variants") test_variants = to_indices(key, value);
  else if (key == "batch_tasks") batch_tasks = to_int(key, value);
  else if (key == "group_size") group_size = to_int(key, value);
  else if (key == "max_steps") max_steps = to_int(key, value);
  else if (key == "iterations") iterations = to_int(key, value);
  else if (key == "seed") seed = to_u64(key, value);
  else if (key == "eval_seed") eval_seed = to_u64(key, value);
  else if (key == "eval_sampled") eval_sampled = to_bool(key, value);
  else if (key == "eval_every") eval_every = to_int(key, value);
  else if (key == "eval_episodes") eval_episodes = to_int(key, value);
  else if (key == "tip_prior") tip_prior = to_double(key, value);
  else if (key == "theta_state") theta_state = to_double(key, value);
  else if (key == "novelty_scope") novelty_scope = novelty_scope_from_string(value);
  else if (key == "base_dim") base_dim = to_u64(key, value);
  else if (key == "tip_dim") tip_dim = to_u64(key, value);
  else if (key == "feature_salt") feature_salt = to_u64(key, value);
  else if (key == "p") u.p = to_double(key, value);
  else if (key == "q") u.q = to_double(key, value);
  else if (key == "lambda_int") u.lambda_int = to_double(key, value);
  else if (key == "beta") u.beta = to_double(key, value);
  else if (key == "delta") u.delta = to_double(key, value);
  else if (key == "lr") u.lr = to_double(key, value);
  else if (key == "eps_low") u.eps_low = to_double(key, value);
  else if (key == "eps_high") u.eps_high = to_double(key, value);
  else if (key == "dual_clip_c") u.dual_clip_c = to_double(key, value);
  else if (key == "eps_std") u.eps_std = to_double(key, value);
  else if (key == "offpolicy_ratio") u.offpolicy_ratio = offpolicy_ratio_from_string(value);
  else if (key == "horizon") u.horizon = to_int(key, value);
  else throw InvalidArgument("unknown config key '" + key + "'");
}

void TrainConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv) set(k, v);
}

// ---------------------------------------------------------------------------
// Evaluation and adaptation

namespace {

EvalSummary summarize(std::vector<double> returns, std::size_t successes) {
  EvalSummary s;
  s.returns = std::move(returns);
  if (!s.returns.empty()) {
    s.mean_return = mean(s.returns);
    s.median_return = median(s.returns);
    s.success_rate = static_cast<double>(successes) / static_cast<double>(s.returns.size());
  }
  return s;
}

std::vector<Trajectory> run_episodes(const PolicyParams& params, const std::string& family,
                                     const std::vector<std::uint64_t>& variants,
                                     int episodes, ActionSelect select, std::uint64_t seed,
                                     int trial, int max_steps, const TipMemory* memory) {
  if (episodes < 1) throw InvalidArgument("episodes per variant must be positive");
  const RolloutMode mode =
      memory != nullptr ? RolloutMode::kMemoryAugmented : RolloutMode::kWithoutMemory;
  std::vector<Trajectory> out;
  for (auto v : variants) {
    const TaskSpec task = make_task(family, v);
    for (int e = 0; e < episodes; ++e) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(trial), v,
                                 static_cast<std::uint64_t>(e)}));
      out.push_back(run_episode(task, params, memory, mode, select, max_steps, &rng));
    }
  }
  return out;
}

EvalSummary summarize(const std::vector<Trajectory>& trajs) {
  std::vector<double> returns;
  std::size_t successes = 0;
  for (const auto& t : trajs) {
    returns.push_back(t.return_ext);
    successes += t.success ? 1 : 0;
  }
  return summarize(std::move(returns), successes);
}

}  // namespace

EvalSummary evaluate(const PolicyParams& params, const std::string& family,
                     const std::vector<std::uint64_t>& variants, const EvalOptions& options,
                     const TipMemory* memory) {
  const TipMemory* mem = options.use_memory ? memory : nullptr;
  return summarize(run_episodes(params, family, variants, options.episodes_per_variant,
                                options.select, options.seed, 0, options.max_steps, mem));
}

EvalSummary adapt_trial(const PolicyParams& params, const std::string& family,
                        const std::vector<std::uint64_t>& variants, const AdaptOptions& options,
                        int trial, TipMemory& memory) {
  const auto trajs = run_episodes(params, family, variants, options.episodes_per_variant,
                                  options.select, options.seed, trial, options.max_steps, &memory);
  TemplateTipGenerator gen;
  for (const auto& t : trajs) memory.add(gen.generate(t));
  return summarize(trajs);
}

std::vector<EvalSummary> adapt(const PolicyParams& params, const std::string& family,
                               const std::vector<std::uint64_t>& variants,
                               const AdaptOptions& options, TipMemory* memory_out) {
  if (options.trials < 1) throw InvalidArgument("adapt: trials must be at least 1");
  TipMemory memory;
  std::vector<EvalSummary> curve;
  for (int k = 0; k < options.trials; ++k)
    curve.push_back(adapt_trial(params, family, variants, options, k, memory));
  if (memory_out != nullptr) *memory_out = std::move(memory);
  return curve;
}

// ---------------------------------------------------------------------------
// Metrics

json MetricsRecord::to_json() const {
  json j{{"iteration", iteration},
         {"wall_step", wall_step},
         {"train_mean_return", train_mean_return},
         {"train_median_return", train_median_return},
         {"train_success", train_success},
         {"train_intrinsic", train_intrinsic},
         {"entropy", entropy},
         {"mask_fraction", mask_fraction},
         {"memory_rollout", memory_rollout},
         {"offpolicy_update", offpolicy_update},
         {"memory_size", memory_size},
         {"update", empo2::to_json(update)}};
  if (eval) {
    j["eval_mean_return"] = eval->mean_return;
    j["eval_median_return"] = eval->median_return;
    j["eval_success"] = eval->success_rate;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Trainer

PolicyParams initial_params(const TrainConfig& config) {
  FeatureSpace space{config.base_dim, config.tip_dim, config.feature_salt};
  PolicyParams p = PolicyParams::zeros(space);
  apply_tip_prior(p, config.tip_prior);
  return p;
}

Trainer::Trainer(TrainConfig config, ResumeTag)
    : config_(std::move(config)),
      novelty_(config_.theta_state),
      task_rng_(derive_seed(config_.seed, {kTaskStream})),
      mode_rng_(derive_seed(config_.seed, {kModeStream})),
      rollout_rng_(derive_seed(config_.seed, {kRolloutStream})) {}

Trainer::Trainer(TrainConfig config) : Trainer(std::move(config), ResumeTag{}) {
  config_.validate();
  params_ = initial_params(config_);
  ref_ = params_;
}

std::vector<TaskSpec> Trainer::sample_tasks() {
  std::vector<TaskSpec> tasks;
  for (int b = 0; b < config_.batch_tasks; ++b) {
    const auto v = config_.train_variants[task_rng_.below(config_.train_variants.size())];
    tasks.push_back(make_task(config_.env, v));
  }
  return tasks;
}

EvalSummary Trainer::run_eval() const {
  EvalOptions opt;
  opt.use_memory = false;
  opt.episodes_per_variant = config_.eval_episodes;
  opt.select = config_.eval_sampled ? ActionSelect::kSample : ActionSelect::kGreedy;
  opt.seed = config_.eval_seed != 0 ? config_.eval_seed
                                    : derive_seed(config_.seed, {kEvalStream});
  opt.max_steps = config_.max_steps;
  return evaluate(params_, config_.env, config_.test_variants, opt);
}

MetricsRecord Trainer::step() {
  const auto& ucfg = config_.update;
  const PolicyParams params_old = params_;
  const RolloutMode mode = sample_rollout_mode(ucfg.p, mode_rng_);
  const auto tasks = sample_tasks();
  RolloutConfig rcfg{config_.group_size, config_.max_steps};
  auto trajs = run_group(tasks, params_old, mems_, mode, rcfg, rollout_rng_.next_u64());

  for (const auto& t : trajs) {
    auto it = mems_.try_emplace(t.task.env_id).first;
    it->second.add(tip_generator_.generate(t));
  }
  for (auto& t : trajs) {
    if (config_.novelty_scope == NoveltyScope::kEpisode) {
      NoveltyStore episodic(config_.theta_state);
      assign_intrinsic(t, episodic, ucfg.lambda_int);
    } else {
      assign_intrinsic(t, novelty_, ucfg.lambda_int);
    }
  }

  MetricsRecord rec;
  std::vector<double> returns;
  std::size_t successes = 0;
  double intrinsic = 0.0;
  for (const auto& t : trajs) {
    returns.push_back(t.return_ext);
    successes += t.success ? 1 : 0;
    wall_step_ += t.steps.size();
    for (const auto& s : t.steps) intrinsic += s.reward_int;
  }

  GroupBatch batch = make_batch(std::move(trajs), static_cast<std::size_t>(config_.group_size),
                                ucfg.eps_std);
  const UpdateMode umode = select_update_mode(ucfg.q, mode_rng_, mode);
  prepare_old_logprobs(batch, umode, params_old, ucfg.offpolicy_ratio);

  SurrogateResult res;
  try {
    res = surrogate_objective(batch, params_, ref_, ucfg);
    params_ = apply_update(params_, res.gradient, ucfg.lr);
  } catch (const NonFiniteError&) {
    if (!dump_dir_.empty()) {
      std::filesystem::create_directories(dump_dir_);
      save_policy(params_, dump_dir_ / "policy.txt");
      std::ofstream out(dump_dir_ / "batch.jsonl");
      write_trajectories(out, batch.trajectories, true);
    }
    throw;
  }
  ++iteration_;

  rec.iteration = iteration_;
  rec.wall_step = wall_step_;
  rec.train_mean_return = mean(returns);
  rec.train_median_return = median(returns);
  rec.train_success = static_cast<double>(successes) / static_cast<double>(returns.size());
  rec.train_intrinsic = intrinsic / static_cast<double>(returns.size());
  rec.entropy = res.stats.entropy;
  rec.mask_fraction = res.stats.mask_fraction;
  rec.memory_rollout = mode == RolloutMode::kMemoryAugmented;
  rec.offpolicy_update = umode == UpdateMode::kOffPolicy;
  for (const auto& [family, mem] : mems_) rec.memory_size += mem.size();
  rec.update.stats = res.stats;
  rec.update.grad_norm = res.gradient.norm();
  rec.update.rollout_mode = mode;
  rec.update.update_mode = umode;
  rec.update.groups = group_return_stats(batch);
  if (config_.eval_every > 0 && iteration_ % config_.eval_every == 0) rec.eval = run_eval();
  return rec;
}

void Trainer::run(std::ostream* metrics,
                  const std::function<void(const Trainer&, const MetricsRecord&)>& on_iteration) {
  while (iteration_ < config_.iterations) {
    const MetricsRecord rec = step();
    if (metrics != nullptr) *metrics << rec.to_json().dump() << "\n" << std::flush;
    if (on_iteration) on_iteration(*this, rec);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointFormat = "empo2-checkpoint 1";

std::string memory_file(std::size_t index) { return "tips-" + std::to_string(index) + ".txt"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  save_policy(params_, dir / "policy.txt");
  save_policy(ref_, dir / "ref_policy.txt");
  json mems = json::array();
  std::size_t index = 0;
  for (const auto& [family, mem] : mems_) {
    mem.save(dir / memory_file(index));
    mems.push_back({{"family", family}, {"file", memory_file(index)}});
    ++index;
  }
  {
    std::ofstream out(dir / "novelty.txt");
    if (!out) throw Error("cannot write novelty store");
    novelty_.save(out);
  }
  json config = json::object();
  for (const auto& [k, v] : config_.to_key_values()) config[k] = v;
  json state{{"format", kCheckpointFormat},
             {"iteration", iteration_},
             {"wall_step", wall_step_},
             {"rng", {{"task", task_rng_.state()},
                      {"mode", mode_rng_.state()},
                      {"rollout", rollout_rng_.state()}}},
             {"memories", mems},
             {"config", config}};
  write_text(dir / "state.json", state.dump(1) + "\n");
}

Trainer Trainer::resume(const std::filesystem::path& dir) {
  std::ifstream in(dir / "state.json");
  if (!in) throw FormatError("no checkpoint state in " + dir.string());
  json state;
  try {
    state = json::parse(in);
    if (state.at("format").get<std::string>() != kCheckpointFormat)
      throw FormatError("unsupported checkpoint format");
    TrainConfig cfg;
    for (const auto& [k, v] : state.at("config").items()) cfg.set(k, v.get<std::string>());
    cfg.validate();
    Trainer t(std::move(cfg), ResumeTag{});
    t.params_ = load_policy(dir / "policy.txt");
    t.ref_ = load_policy(dir / "ref_policy.txt");
    if (t.params_.space != t.ref_.space)
      throw FormatError("checkpoint policies disagree on feature space");
    for (const auto& m : state.at("memories"))
      t.mems_.emplace(m.at("family").get<std::string>(),
                      TipMemory::load(dir / m.at("file").get<std::string>()));
    std::ifstream nin(dir / "novelty.txt");
    if (!nin) throw FormatError("checkpoint has no novelty store");
    t.novelty_ = NoveltyStore::load(nin);
    t.task_rng_.set_state(state.at("rng").at("task").get<std::string>());
    t.mode_rng_.set_state(state.at("rng").at("mode").get<std::string>());
    t.rollout_rng_.set_state(state.at("rng").at("rollout").get<std::string>());
    t.iteration_ = state.at("iteration").get<int>();
    t.wall_step_ = state.at("wall_step").get<std::uint64_t>();
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint state: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("corrupt checkpoint config: ") + e.what());
  }
}

}  // namespace empo2
