#include "empo2/rollout.hpp"

#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace empo2 {

std::string to_string(RolloutMode mode) {
  return mode == RolloutMode::kMemoryAugmented ? "memory" : "plain";
}

RolloutMode rollout_mode_from_string(std::string_view text) {
  if (text == "memory") return RolloutMode::kMemoryAugmented;
  if (text == "plain") return RolloutMode::kWithoutMemory;
  throw FormatError("unknown rollout mode '" + std::string(text) + "'");
}

RolloutMode sample_rollout_mode(double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
  return rng.bernoulli(p) ? RolloutMode::kMemoryAugmented : RolloutMode::kWithoutMemory;
}

std::vector<double> retrieval_key(const Observation& obs) { return embed(obs.tokens); }

Trajectory run_episode(const TaskSpec& task, const PolicyParams& params,
                       const TipMemory* memory, RolloutMode mode, ActionSelect select,
                       int max_steps, Rng* rng) {
  if (select == ActionSelect::kSample && rng == nullptr)
    throw InvalidArgument("run_episode: sampling needs an rng");
  Environment env = make_env(task);
  Trajectory traj;
  traj.task = task;
  traj.mode = mode;
  Observation obs = env.reset();
  const bool use_memory = mode == RolloutMode::kMemoryAugmented && memory != nullptr;

  for (int t = 0; t < max_steps && !env.done(); ++t) {
    StepRecord rec;
    rec.obs = obs;
    const auto actions = env.admissible_actions();
    rec.admissible_count = static_cast<int>(actions.size());
    rec.action_tokens.reserve(actions.size());
    for (const auto& a : actions) rec.action_tokens.push_back(a.tokens);

    std::vector<Tip> tips;
    if (use_memory && memory->size() > 0) tips = memory->retrieve(retrieval_key(obs));
    for (const auto& tip : tips) rec.tip_ids.push_back(tip.seq);
    rec.context = featurize(params.space, obs, task, actions, tips);

    if (select == ActionSelect::kSample) {
      const auto s = sample_action(params, rec.context, *rng);
      rec.action = s.action;
      rec.behavior_logprob = s.logprob;
    } else {
      rec.action = greedy_action(params, rec.context);
      rec.behavior_logprob = logprob(params, rec.context, rec.action);
    }

    const StepOutcome out = env.step(rec.action);
    rec.reward_ext = out.reward;
    traj.return_ext += out.reward;
    obs = out.next_obs;
    traj.steps.push_back(std::move(rec));
  }
  traj.return_total = traj.return_ext;
  traj.success = env.success();
  traj.final_obs = obs;
  traj.missing_milestones = env.missing_milestones();
  return traj;
}

std::vector<Trajectory> run_group(std::span<const TaskSpec> tasks, const PolicyParams& params_old,
                                  const MemoryBank& mems, RolloutMode mode,
                                  const RolloutConfig& config, std::uint64_t seed) {
  if (config.group_size < 2) throw InvalidArgument("run_group: group size must be at least 2");
  if (config.max_steps < 1) throw InvalidArgument("run_group: max_steps must be positive");
  const auto n = static_cast<std::size_t>(config.group_size);
  std::vector<Trajectory> out;
  out.reserve(tasks.size() * n);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const TipMemory* mem = nullptr;
    if (auto it = mems.find(tasks[i].env_id); it != mems.end()) mem = &it->second;
    for (std::size_t j = 0; j < n; ++j) {
      Rng rng(derive_seed(seed, {i * n + j}));
      out.push_back(run_episode(tasks[i], params_old, mem, mode, ActionSelect::kSample,
                                config.max_steps, &rng));
    }
  }
  return out;
}

Tip TemplateTipGenerator::generate(const Trajectory& traj) const {
  Tokens last;
  if (!traj.steps.empty()) {
    const auto& s = traj.steps.back();
    last = s.action_tokens.at(static_cast<std::size_t>(s.action.value));
  }
  Tip tip;
  tip.content = format_tip_content(traj.missing_milestones, last, traj.return_ext);
  Tokens key_tokens = traj.final_obs.tokens;
  key_tokens.insert(key_tokens.end(), traj.task.description.begin(), traj.task.description.end());
  tip.key = embed(key_tokens);
  tip.score = traj.return_ext;
  return tip;
}

Tip generate_tip(const Trajectory& traj) { return TemplateTipGenerator().generate(traj); }

void assign_intrinsic(Trajectory& traj, NoveltyStore& store, double lambda_int) {
  double total = 0.0;
  for (auto& s : traj.steps) {
    s.reward_int = store.visit(embed(s.obs.tokens));
    total += s.reward_int;
  }
  traj.return_total = traj.return_ext + lambda_int * total;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json obs_to_json(const Observation& o) {
  return json{{"tokens", o.tokens}, {"room", o.room_id}, {"milestones", o.milestone_flags}};
}

Observation obs_from_json(const json& j) {
  Observation o;
  o.tokens = j.at("tokens").get<Tokens>();
  o.room_id = j.at("room").get<int>();
  o.milestone_flags = j.at("milestones").get<std::uint32_t>();
  return o;
}

json sparse_to_json(const SparseFeatures& f) {
  json a = json::array();
  for (const auto& [i, v] : f) a.push_back(json::array({i, v}));
  return a;
}

SparseFeatures sparse_from_json(const json& j) {
  SparseFeatures f;
  for (const auto& e : j) f.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<double>());
  return f;
}

}  // namespace

nlohmann::json trajectory_to_json(const Trajectory& traj, bool with_context) {
  json steps = json::array();
  for (const auto& s : traj.steps) {
    json js{{"obs", obs_to_json(s.obs)},
            {"action", s.action.value},
            {"admissible", s.action_tokens},
            {"reward_ext", s.reward_ext},
            {"reward_int", s.reward_int},
            {"behavior_logprob", s.behavior_logprob},
            {"tip_ids", s.tip_ids}};
    if (with_context) {
      json base = json::array(), tip = json::array();
      for (const auto& f : s.context.base) base.push_back(sparse_to_json(f));
      for (const auto& f : s.context.tip) tip.push_back(sparse_to_json(f));
      js["context"] = json{{"base", base}, {"tip", tip}, {"tip_present", s.context.tip_present}};
    }
    steps.push_back(std::move(js));
  }
  return json{{"env", traj.task.env_id},
              {"variant", traj.task.variant},
              {"task", traj.task.description},
              {"mode", to_string(traj.mode)},
              {"return_ext", traj.return_ext},
              {"return_total", traj.return_total},
              {"success", traj.success},
              {"final_obs", obs_to_json(traj.final_obs)},
              {"missing", traj.missing_milestones},
              {"steps", steps}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  t.task.env_id = j.at("env").get<std::string>();
  t.task.variant = j.at("variant").get<std::uint64_t>();
  t.task.description = j.at("task").get<Tokens>();
  t.mode = rollout_mode_from_string(j.at("mode").get<std::string>());
  t.return_ext = j.at("return_ext").get<double>();
  t.return_total = j.at("return_total").get<double>();
  t.success = j.at("success").get<bool>();
  t.final_obs = obs_from_json(j.at("final_obs"));
  t.missing_milestones = j.at("missing").get<std::vector<std::string>>();
  for (const auto& js : j.at("steps")) {
    StepRecord s;
    s.obs = obs_from_json(js.at("obs"));
    s.action = ActionId{js.at("action").get<int>()};
    s.action_tokens = js.at("admissible").get<std::vector<Tokens>>();
    s.admissible_count = static_cast<int>(s.action_tokens.size());
    s.reward_ext = js.at("reward_ext").get<double>();
    s.reward_int = js.at("reward_int").get<double>();
    s.behavior_logprob = js.at("behavior_logprob").get<double>();
    s.tip_ids = js.at("tip_ids").get<std::vector<std::uint64_t>>();
    if (js.contains("context")) {
      const auto& c = js.at("context");
      for (const auto& f : c.at("base")) s.context.base.push_back(sparse_from_json(f));
      for (const auto& f : c.at("tip")) s.context.tip.push_back(sparse_from_json(f));
      s.context.tip_present = c.at("tip_present").get<bool>();
    }
    t.steps.push_back(std::move(s));
  }
  return t;
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajs, bool with_context) {
  for (const auto& t : trajs) out << trajectory_to_json(t, with_context).dump() << "\n";
}

std::vector<Trajectory> read_trajectories(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(trajectory_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("trajectory dump: ") + e.what());
    }
  }
  return out;
}

}  // namespace empo2
