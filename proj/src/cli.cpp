#include "empo2/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "empo2/config.hpp"
#include "empo2/stats.hpp"
#include "empo2/trainer.hpp"

namespace empo2 {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "empo2 0.1.0";

// Flags shared by train and ablate. Unset optionals leave the config alone.
struct RunFlags {
  std::string config_file;
  std::string algo = "empo2";
  std::optional<std::string> env;
  std::optional<double> p, q, delta, lambda_int, beta, lr, tip_prior;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<std::string> offpolicy_ratio;
  std::vector<std::string> sets;
  std::string out;
  int checkpoint_every = 0;
  bool resume = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_file, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--algo", f.algo, "empo2 or grpo")->check(CLI::IsMember({"empo2", "grpo"}));
  cmd->add_option("--env", f.env, "environment family");
  cmd->add_option("--p", f.p, "memory rollout probability")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--q", f.q, "off-policy update probability")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--delta", f.delta, "low-probability mask threshold")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--lambda-int", f.lambda_int, "intrinsic reward weight")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--beta", f.beta, "KL coefficient")->check(CLI::NonNegativeNumber);
  cmd->add_option("--lr", f.lr, "learning rate")->check(CLI::NonNegativeNumber);
  cmd->add_option("--tip-prior", f.tip_prior, "initial tip-channel weight");
  cmd->add_option("--offpolicy-ratio", f.offpolicy_ratio, "table3 or alg1")
      ->check(CLI::IsMember({"table3", "alg1"}));
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--iters", f.iters, "training iterations")->check(CLI::NonNegativeNumber);
  cmd->add_option("--set", f.sets, "extra key=value override (repeatable)");
  cmd->add_option("--checkpoint-every", f.checkpoint_every, "checkpoint cadence in iterations")
      ->check(CLI::NonNegativeNumber);
}

TrainConfig build_config(const RunFlags& f) {
  TrainConfig cfg;
  if (!f.config_file.empty()) cfg.apply(load_key_values(f.config_file));
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.env) cfg.env = *f.env;
  if (f.p) cfg.update.p = *f.p;
  if (f.q) cfg.update.q = *f.q;
  if (f.delta) cfg.update.delta = *f.delta;
  if (f.lambda_int) cfg.update.lambda_int = *f.lambda_int;
  if (f.beta) cfg.update.beta = *f.beta;
  if (f.lr) cfg.update.lr = *f.lr;
  if (f.tip_prior) cfg.tip_prior = *f.tip_prior;
  if (f.offpolicy_ratio) cfg.update.offpolicy_ratio = offpolicy_ratio_from_string(*f.offpolicy_ratio);
  if (f.seed) cfg.seed = *f.seed;
  if (f.iters) cfg.iterations = *f.iters;
  if (f.algo == "grpo") {
    if (f.p && *f.p != 0.0) throw InvalidArgument("--p: grpo runs without memory rollouts");
    if (f.lambda_int && *f.lambda_int != 0.0)
      throw InvalidArgument("--lambda-int: grpo runs without intrinsic reward");
    cfg.update.p = 0.0;
    cfg.update.lambda_int = 0.0;
  }
  cfg.validate();
  return cfg;
}

json manifest_json(const std::string& command, const std::string& algo, const TrainConfig& cfg,
                   const json& outputs) {
  json config = json::object();
  for (const auto& [k, v] : cfg.to_key_values()) config[k] = v;
  const auto spec = find_env_spec(cfg.env);
  return json{{"command", command},
              {"version", kVersion},
              {"algo", algo},
              {"seed", cfg.seed},
              {"env_checksum", spec ? spec->checksum : 0},
              {"config", config},
              {"outputs", outputs}};
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Keeps the first `lines` lines of a metrics file (drops a partial tail).
void truncate_metrics(const fs::path& path, int lines) {
  std::istringstream in(read_file(path));
  std::string kept, line;
  for (int i = 0; i < lines && std::getline(in, line); ++i) kept += line + "\n";
  write_file(path, kept);
}

// Trains into `dir`: manifest.json, metrics.jsonl, checkpoint/. With `resume`
// and an existing checkpoint, continues from it.
void train_into(const fs::path& dir, const TrainConfig& cfg, const std::string& algo,
                int checkpoint_every, bool resume, std::ostream& log) {
  fs::create_directories(dir);
  const fs::path metrics_path = dir / "metrics.jsonl";
  const fs::path ckpt = dir / "checkpoint";
  json outputs{{"metrics", metrics_path.string()}, {"checkpoint", ckpt.string()}};

  std::optional<Trainer> trainer;
  if (resume && fs::exists(ckpt / "state.json")) {
    trainer.emplace(Trainer::resume(ckpt));
    if (trainer->config().to_key_values() != [&] {
          TrainConfig c = cfg;
          c.iterations = trainer->config().iterations;
          return c.to_key_values();
        }())
      throw InvalidArgument("--resume: configuration differs from the checkpoint");
    trainer->mutable_config().iterations = cfg.iterations;
    truncate_metrics(metrics_path, trainer->iteration());
    log << "resuming at iteration " << trainer->iteration() << "\n";
  } else {
    write_file(dir / "manifest.json", manifest_json("train", algo, cfg, outputs).dump(2) + "\n");
    write_file(metrics_path, "");
    trainer.emplace(cfg);
  }
  trainer->set_dump_dir(dir / "nonfinite-dump");

  std::ofstream metrics(metrics_path, std::ios::app | std::ios::binary);
  if (!metrics) throw Error("cannot open " + metrics_path.string());
  trainer->run(&metrics, [&](const Trainer& t, const MetricsRecord&) {
    if (checkpoint_every > 0 && t.iteration() % checkpoint_every == 0) t.save_checkpoint(ckpt);
  });
  trainer->save_checkpoint(ckpt);
}

std::vector<json> read_metrics(const fs::path& path) {
  std::vector<json> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

double tail_mean(const std::vector<json>& records, const char* key, std::size_t tail) {
  std::vector<double> xs;
  const std::size_t start = records.size() > tail ? records.size() - tail : 0;
  for (std::size_t i = start; i < records.size(); ++i)
    if (records[i].contains(key)) xs.push_back(records[i][key].get<double>());
  return xs.empty() ? std::nan("") : mean(xs);
}

// ---------------------------------------------------------------------------

int cmd_train(const RunFlags& f, std::ostream& out) {
  const TrainConfig cfg = build_config(f);
  const fs::path dir = resolve_output(
      f.out.empty() ? fs::path("runs") / (f.algo + "-" + cfg.env + "-s" + std::to_string(cfg.seed))
                    : fs::path(f.out));
  train_into(dir, cfg, f.algo, f.checkpoint_every, f.resume, out);
  const auto records = read_metrics(dir / "metrics.jsonl");
  out << "trained " << records.size() << " iterations into " << dir.string() << "\n";
  if (!records.empty() && records.back().contains("eval_mean_return"))
    out << "final eval mean return " << records.back()["eval_mean_return"].get<double>()
        << ", success " << records.back()["eval_success"].get<double>() << "\n";
  return 0;
}

struct AblateFlags {
  std::string param;
  std::string values;
  std::string seeds = "1";
  std::size_t tail = 50;
};

int cmd_ablate(const RunFlags& f, const AblateFlags& a, std::ostream& out) {
  const auto values = parse_double_list(a.values);
  if (values.empty()) throw InvalidArgument("--values: sweep list is empty");
  const auto seeds = parse_index_list(a.seeds);
  if (seeds.empty()) throw InvalidArgument("--seeds: seed list is empty");
  const TrainConfig base = build_config(f);
  const std::string key = a.param == "lambda-int" ? "lambda_int" : a.param;
  const fs::path root = resolve_output(f.out.empty() ? fs::path("runs") / ("ablate-" + a.param)
                                                     : fs::path(f.out));
  fs::create_directories(root);

  json cells = json::array();
  std::vector<std::pair<TrainConfig, fs::path>> plan;
  for (double v : values) {
    for (auto s : seeds) {
      TrainConfig cfg = base;
      cfg.set(key, format_double(v));
      cfg.seed = s;
      cfg.validate();
      const fs::path dir = root / (a.param + "=" + format_double(v)) / ("seed=" + std::to_string(s));
      cells.push_back({{"value", v}, {"seed", s}, {"dir", dir.string()}});
      plan.emplace_back(cfg, dir);
    }
  }
  json manifest = manifest_json("ablate", f.algo, base, {{"root", root.string()}, {"cells", cells}});
  manifest["sweep"] = {{"param", a.param}, {"values", values}, {"seeds", seeds}};
  write_file(root / "manifest.json", manifest.dump(2) + "\n");

  for (const auto& [cfg, dir] : plan) {
    if (fs::exists(dir / "done")) {
      out << "skip " << dir.string() << " (complete)\n";
      continue;
    }
    train_into(dir, cfg, f.algo, f.checkpoint_every, true, out);
    write_file(dir / "done", "");
    out << "done " << dir.string() << "\n";
  }

  std::ostringstream csv;
  csv << "param,value,seed,iterations,tail_eval_mean_return,tail_eval_success,tail_train_mean_return\n";
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto records = read_metrics(plan[i].second / "metrics.jsonl");
    csv << a.param << "," << format_double(cells[i]["value"].get<double>()) << ","
        << plan[i].first.seed << "," << records.size() << ","
        << format_double(tail_mean(records, "eval_mean_return", a.tail)) << ","
        << format_double(tail_mean(records, "eval_success", a.tail)) << ","
        << format_double(tail_mean(records, "train_mean_return", a.tail)) << "\n";
  }
  write_file(root / "summary.csv", csv.str());
  out << "summary " << (root / "summary.csv").string() << "\n";
  return 0;
}

struct PolicySource {
  PolicyParams params;
  TrainConfig config;
};

PolicySource load_source(const fs::path& ckpt) {
  PolicySource s;
  if (!fs::exists(ckpt / "state.json")) throw FormatError("no checkpoint at " + ckpt.string());
  try {
    s.params = load_policy(ckpt / "policy.txt");
    const json state = json::parse(read_file(ckpt / "state.json"));
    for (const auto& [k, v] : state.at("config").items()) s.config.set(k, v.get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("corrupt checkpoint: ") + e.what());
  }
  return s;
}

struct EvalFlags {
  std::string checkpoint;
  std::optional<std::string> env;
  std::optional<std::string> variants;
  int episodes = 1;
  bool sampled = false;
  std::uint64_t seed = 0;
  std::string memory;
  std::string out;
};

json summary_json(const EvalSummary& s) {
  return {{"mean_return", s.mean_return},
          {"median_return", s.median_return},
          {"success_rate", s.success_rate},
          {"returns", s.returns}};
}

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const fs::path ckpt = f.checkpoint;
  const fs::path out_path = resolve_output(f.out.empty() ? ckpt.parent_path() / "eval.json"
                                                         : fs::path(f.out));
  PolicySource src = load_source(ckpt);
  const std::string env = f.env.value_or(src.config.env);
  const auto variants = f.variants ? parse_index_list(*f.variants) : src.config.test_variants;
  if (variants.empty()) throw InvalidArgument("--variants: empty list");
  EvalOptions opt;
  opt.episodes_per_variant = f.episodes;
  opt.select = f.sampled ? ActionSelect::kSample : ActionSelect::kGreedy;
  opt.seed = f.seed;
  std::optional<TipMemory> mem;
  if (!f.memory.empty()) {
    mem = TipMemory::load(fs::path(f.memory));
    opt.use_memory = true;
  }

  json manifest = manifest_json("eval", "", src.config, {{"summary", out_path.string()}});
  manifest["eval"] = {{"checkpoint", ckpt.string()}, {"env", env},
                      {"variants", format_index_list(variants)}, {"episodes", f.episodes},
                      {"sampled", f.sampled}, {"seed", f.seed}, {"memory", f.memory}};
  write_file(out_path.parent_path() / (out_path.stem().string() + ".manifest.json"),
             manifest.dump(2) + "\n");

  const EvalSummary s = evaluate(src.params, env, variants, opt, mem ? &*mem : nullptr);
  if (!std::isfinite(s.mean_return)) throw NonFiniteError("eval produced a non-finite return");
  json j = summary_json(s);
  j["env"] = env;
  write_file(out_path, j.dump(2) + "\n");
  out << "mean_return " << format_double(s.mean_return) << "\n"
      << "median_return " << format_double(s.median_return) << "\n"
      << "success_rate " << format_double(s.success_rate) << "\n";
  return 0;
}

struct AdaptFlags {
  std::string checkpoint;
  std::string env = "paint-mix";
  std::string variants = "5-24";
  int trials = 10;
  int episodes = 4;
  std::uint64_t seed = 1;
  bool greedy = false;
  bool resume = false;
  std::string out;
};

int cmd_adapt(const AdaptFlags& f, std::ostream& out) {
  const fs::path ckpt = f.checkpoint;
  PolicySource src = load_source(ckpt);
  const auto variants = parse_index_list(f.variants);
  if (variants.empty()) throw InvalidArgument("--variants: empty list");
  if (f.trials < 1) throw InvalidArgument("--trials: must be at least 1");
  const fs::path dir = resolve_output(f.out.empty() ? ckpt.parent_path() / ("adapt-" + f.env)
                                                    : fs::path(f.out));
  fs::create_directories(dir);
  const fs::path tips = dir / "tips.txt";
  const fs::path curve_path = dir / "curve.csv";

  AdaptOptions opt;
  opt.trials = f.trials;
  opt.episodes_per_variant = f.episodes;
  opt.seed = f.seed;
  opt.select = f.greedy ? ActionSelect::kGreedy : ActionSelect::kSample;

  TipMemory memory;
  std::vector<std::string> rows;
  if (f.resume && fs::exists(tips) && fs::exists(curve_path)) {
    memory = TipMemory::load(tips);
    std::istringstream in(read_file(curve_path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty()) rows.push_back(line);
    out << "resuming at trial " << rows.size() << "\n";
  } else {
    json manifest = manifest_json("adapt", "", src.config,
                                  {{"curve", curve_path.string()}, {"memory", tips.string()}});
    manifest["adapt"] = {{"checkpoint", ckpt.string()}, {"env", f.env},
                         {"variants", format_index_list(variants)}, {"trials", f.trials},
                         {"episodes", f.episodes}, {"seed", f.seed}, {"greedy", f.greedy}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  }
  const std::uint64_t version = src.params.version;
  for (int k = static_cast<int>(rows.size()); k < f.trials; ++k) {
    const EvalSummary s = adapt_trial(src.params, f.env, variants, opt, k, memory);
    if (!std::isfinite(s.mean_return)) throw NonFiniteError("adapt produced a non-finite return");
    rows.push_back(std::to_string(k) + "," + format_double(s.mean_return) + "," +
                   format_double(s.median_return) + "," + format_double(s.success_rate) + "," +
                   std::to_string(memory.size()));
    memory.save(tips);
    std::string csv = "trial,mean_return,median_return,success_rate,memory_size\n";
    for (const auto& r : rows) csv += r + "\n";
    write_file(curve_path, csv);
    out << rows.back() << "\n";
  }
  if (src.params.version != version) throw Error("adapt changed the parameters");
  return 0;
}

int cmd_export(const std::string& metrics, const std::string& out_file, std::ostream& out) {
  std::ifstream in(metrics);
  if (!in) throw Error("cannot read " + metrics);
  const fs::path out_path = resolve_output(out_file.empty() ? fs::path(metrics).replace_extension(".csv")
                                                            : fs::path(out_file));
  std::ostringstream csv;
  const std::size_t rows = export_metrics_csv(in, csv);
  write_file(out_path, csv.str());
  out << rows << " rows written to " << out_path.string() << "\n";
  return 0;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, double>>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string name = prefix.empty() ? k : prefix + "." + k;
    if (v.is_number()) out.emplace_back(name, v.get<double>());
    else if (v.is_boolean()) out.emplace_back(name, v.get<bool>() ? 1.0 : 0.0);
    else if (v.is_object()) flatten(v, name, out);
  }
}

}  // namespace

fs::path resolve_output(const fs::path& p) {
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("EMPO2_OUT_ROOT"); root != nullptr && *root != '\0')
    return fs::path(root) / p;
  return p;
}

std::size_t export_metrics_csv(std::istream& metrics, std::ostream& csv) {
  csv << "iteration,series,value\n";
  std::size_t rows = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(metrics, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw FormatError("metrics line " + std::to_string(lineno) + " is not JSON");
    }
    const auto iteration = j.at("iteration").get<int>();
    std::vector<std::pair<std::string, double>> series;
    flatten(j, "", series);
    for (const auto& [name, value] : series) {
      if (name == "iteration") continue;
      csv << iteration << "," << name << "," << format_double(value) << "\n";
      ++rows;
    }
  }
  return rows;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group-relative policy optimization with memory tips on toy environments",
               "empo2"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "train a policy");
  add_run_flags(train, train_flags);
  train->add_option("--out", train_flags.out, "output directory");
  train->add_flag("--resume", train_flags.resume, "continue from <out>/checkpoint");

  RunFlags ablate_flags;
  AblateFlags ab;
  auto* ablate = app.add_subcommand("ablate", "seeded sweep over p, q or lambda-int");
  add_run_flags(ablate, ablate_flags);
  ablate->add_option("--param", ab.param, "p, q or lambda-int")
      ->required()
      ->check(CLI::IsMember({"p", "q", "lambda-int"}));
  ablate->add_option("--values", ab.values, "comma-separated values")->required();
  ablate->add_option("--seeds", ab.seeds, "seed list, e.g. 1-5");
  ablate->add_option("--tail", ab.tail, "iterations averaged in the summary");
  ablate->add_option("--out", ablate_flags.out, "sweep root directory");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", ef.checkpoint, "checkpoint directory")->required();
  eval->add_option("--env", ef.env, "family (default: training family)");
  eval->add_option("--variants", ef.variants, "variant list (default: test variants)");
  eval->add_option("--episodes", ef.episodes, "episodes per variant")->check(CLI::PositiveNumber);
  eval->add_flag("--sampled", ef.sampled, "sample actions instead of greedy");
  eval->add_option("--seed", ef.seed, "seed for sampled evaluation");
  eval->add_option("--memory", ef.memory, "tip snapshot to retrieve from")->check(CLI::ExistingFile);
  eval->add_option("--out", ef.out, "summary JSON path");

  AdaptFlags af;
  auto* adapt_cmd = app.add_subcommand("adapt", "frozen-weight adaptation with memory");
  adapt_cmd->add_option("--checkpoint", af.checkpoint, "checkpoint directory")->required();
  adapt_cmd->add_option("--env", af.env, "held-out family");
  adapt_cmd->add_option("--variants", af.variants, "variant list");
  adapt_cmd->add_option("--trials", af.trials, "K")->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--episodes", af.episodes, "episodes per variant and trial")
      ->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--seed", af.seed, "episode seed");
  adapt_cmd->add_flag("--greedy", af.greedy, "greedy instead of sampled actions");
  adapt_cmd->add_flag("--resume", af.resume, "continue from <out>/tips.txt and curve.csv");
  adapt_cmd->add_option("--out", af.out, "output directory");

  std::string export_in, export_out;
  auto* exp = app.add_subcommand("export", "metrics JSON-lines to CSV");
  exp->add_option("--metrics", export_in, "metrics.jsonl")->required();
  exp->add_option("--out", export_out, "CSV path");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*train) return cmd_train(train_flags, out);
    if (*ablate) return cmd_ablate(ablate_flags, ab, out);
    if (*eval) return cmd_eval(ef, out);
    if (*adapt_cmd) return cmd_adapt(af, out);
    if (*exp) return cmd_export(export_in, export_out, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace empo2
