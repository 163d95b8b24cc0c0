// Acceptance suite: one PASS/FAIL line per criterion, a JSON report with the
// measured values, exit status 0 only when every selected criterion passes.
//
// Criteria 9-11 train real runs (5 seeds x 3 configurations, 300 iterations)
// through the command-line front end, so they also exercise manifests and
// checkpoints. Finished runs are reused when the work directory is kept.

#include <CLI/CLI.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "empo2/cli.hpp"
#include "empo2/config.hpp"
#include "empo2/memory.hpp"
#include "empo2/optimizer.hpp"
#include "empo2/policy.hpp"
#include "empo2/stats.hpp"
#include "empo2/trainer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace empo2;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
  json data = json::object();
  std::vector<oracle::OracleReport> failures;
};

struct Options {
  fs::path work = "acceptance-work";
  std::string only;
  std::string seeds = "1-5";
  int iterations = 300;
  double significance = 0.05;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

PolicyParams random_params(Rng& rng, const FeatureSpace& space, double scale = 1.0) {
  PolicyParams p = PolicyParams::zeros(space);
  for (double& x : p.w) x = scale * rng.normal();
  for (double& x : p.v) x = scale * rng.normal();
  return p;
}

ContextFeatures random_context(Rng& rng, const FeatureSpace& space, bool tips) {
  auto sparse = [&](std::size_t dim) {
    std::set<std::uint32_t> idx;
    const int k = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < k; ++i) idx.insert(static_cast<std::uint32_t>(rng.below(dim)));
    SparseFeatures f;
    for (auto i : idx) f.emplace_back(i, 0.1 + 0.9 * rng.uniform());
    return f;
  };
  ContextFeatures ctx;
  ctx.tip_present = tips;
  const std::size_t n = 2 + rng.below(6);
  for (std::size_t a = 0; a < n; ++a) {
    ctx.base.push_back(sparse(space.base_dim));
    ctx.tip.push_back(tips ? sparse(space.tip_dim) : SparseFeatures{});
  }
  return ctx;
}

std::vector<double> unit_noise(Rng& rng, const std::vector<double>& center, double noise) {
  std::vector<double> v(center.size());
  double n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = center[i] + noise * rng.normal();
    n += v[i] * v[i];
  }
  for (double& x : v) x /= std::sqrt(n);
  return v;
}

// ---------------------------------------------------------------------------

Verdict ratio_table() {
  Verdict v;
  Rng rng(101);
  const auto space = fixture::space();
  const auto old = random_params(rng, space);
  const auto cur = random_params(rng, space);
  const auto plain = fixture::context(3, false);
  const auto tips = fixture::context(3, true);
  double worst = 0;
  auto check = [&](const std::string& name, GroupBatch b, double expected) {
    const double got = importance_ratio(b, cur, 0, 0);
    auto r = oracle::compare(name, expected, got);
    v.data[name] = r.to_json();
    worst = std::max(worst, r.abs_error);
    if (!(r.abs_error <= 1e-12)) v.failures.push_back(r);
  };

  auto on_plain = fixture::batch({fixture::one_step(plain, 1, old, RolloutMode::kWithoutMemory)}, {1});
  prepare_old_logprobs(on_plain, UpdateMode::kOnPolicy, old);
  check("plain rollout, on-policy", on_plain, oracle::ratio(cur, plain, old, plain, 1));

  auto on_tips = fixture::batch({fixture::one_step(tips, 1, old, RolloutMode::kMemoryAugmented)}, {1});
  prepare_old_logprobs(on_tips, UpdateMode::kOnPolicy, old);
  check("memory rollout, on-policy", on_tips, oracle::ratio(cur, tips, old, tips, 1));

  auto off = on_tips;
  prepare_old_logprobs(off, UpdateMode::kOffPolicy, old, OffPolicyRatio::kTable3);
  check("memory rollout, off-policy (table3)", off, oracle::ratio(cur, tips.without_tips(), old, tips, 1));

  auto off_alg1 = on_tips;
  prepare_old_logprobs(off_alg1, UpdateMode::kOffPolicy, old, OffPolicyRatio::kAlg1);
  check("memory rollout, off-policy (alg1)", off_alg1,
        oracle::ratio(cur, tips.without_tips(), old, tips.without_tips(), 1));

  v.pass = v.failures.empty();
  v.detail = "4 fixtures, max |rho - oracle| = " + fmt(worst, 3);
  return v;
}

Verdict gradient_fidelity() {
  Verdict v;
  Rng rng(202);
  const FeatureSpace space{64, 32, kDefaultFeatureSalt};
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_params(rng, space);
    const auto ctx = random_context(rng, space, trial % 2 == 0);
    const ActionId a{static_cast<int>(rng.below(ctx.action_count()))};
    const auto analytic = grad_logprob(p, ctx, a);
    const auto numeric =
        oracle::finite_difference(p, [&](const PolicyParams& q) { return logprob(q, ctx, a); }, 1e-6);
    const double err = oracle::max_relative_error(analytic, numeric, 1e-6);
    worst = std::max(worst, err);
    if (!(err < 1e-5))
      v.failures.push_back(oracle::compare("triple " + std::to_string(trial), 0.0, err));
  }
  v.pass = v.failures.empty();
  v.data["max_relative_error"] = worst;
  v.detail = "100 triples, max relative error " + fmt(worst, 3) + " (floor 1e-6)";
  return v;
}

Verdict advantage_stats() {
  Verdict v;
  Rng rng(303);
  double worst_mean = 0, worst_std = 0;
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> r(8);
    for (double& x : r) x = 200.0 * rng.uniform() - 100.0;
    if (g % 3 == 0)
      for (double& x : r) x = std::round(x / 25.0) * 25.0;  // tied returns, as from milestones
    const auto a = group_advantages(r, 1e-8);
    const double m = mean(a);
    worst_mean = std::max(worst_mean, std::abs(m));
    worst_std = std::max(worst_std, std::abs(population_std(a) - 1.0));
  }
  bool zeros = true;
  for (double c : {-100.0, 0.0, 37.5, 100.0}) {
    const std::vector<double> flat(8, c);
    for (double x : group_advantages(flat, 1e-8)) zeros = zeros && x == 0.0;
  }
  v.pass = worst_mean < 1e-9 && worst_std < 1e-9 && zeros;
  v.data = {{"max_abs_mean", worst_mean}, {"max_std_dev", worst_std}, {"degenerate_zero", zeros}};
  v.detail = "1000 groups, max |mean| " + fmt(worst_mean, 3) + ", max |std-1| " + fmt(worst_std, 3) +
             (zeros ? ", flat groups exact zeros" : ", flat groups NOT zero");
  return v;
}

Verdict retrieval_equivalence() {
  Verdict v;
  Rng rng(404);
  std::size_t total_hits = 0;
  for (int b = 0; b < 1000; ++b) {
    TipMemory mem;
    std::vector<double> query(kEmbedDim);
    for (double& x : query) x = rng.normal();
    query = unit_noise(rng, query, 0.0);
    const std::size_t adds = rng.below(1201);
    for (std::size_t i = 0; i < adds; ++i) {
      const double noise = 0.05 + 0.3 * rng.uniform();
      mem.add(Tip{"tip " + std::to_string(rng.below(1500)), unit_noise(rng, query, noise),
                  std::round(rng.uniform() * 8.0) * 25.0 - 100.0, 0});
    }
    const std::vector<Tip> all(mem.entries().begin(), mem.entries().end());
    const auto got = mem.retrieve(query);
    const auto want = oracle::retrieve(all, query);
    total_hits += got.size();
    if (got != want) {
      v.failures.push_back(oracle::compare("buffer " + std::to_string(b), static_cast<double>(want.size()),
                                           static_cast<double>(got.size())));
    }
  }
  v.pass = v.failures.empty();
  v.data = {{"buffers", 1000}, {"mismatches", v.failures.size()}, {"returned", total_hits}};
  v.detail = "1000 buffers (0-1200 adds), " + std::to_string(v.failures.size()) + " mismatches, " +
             std::to_string(total_hits) + " tips returned";
  return v;
}

Verdict intrinsic_decay() {
  Verdict v;
  NoveltyStore store;
  const auto key = embed({"workshop", "wire", "battery"});
  for (int n = 1; n <= 20; ++n) {
    const double r = novelty_reward(store, key);
    if (r != 1.0 / n) v.failures.push_back(oracle::compare("visit " + std::to_string(n), 1.0 / n, r));
  }
  v.pass = v.failures.empty();
  v.detail = "20 visits, " + std::to_string(v.failures.size()) + " deviations from 1/n";
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI; throws with its stderr on failure.
void cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) throw std::runtime_error("empo2 " + args.front() + " failed: " + err.str());
}

Verdict grpo_reduction(const Options& o) {
  Verdict v;
  const fs::path a = o.work / "c6" / "empo2-p0";
  const fs::path b = o.work / "c6" / "grpo";
  fs::remove_all(o.work / "c6");
  cli({"train", "--algo", "empo2", "--p", "0", "--lambda-int", "0", "--seed", "1", "--iters", "50", "--out",
       a.string()});
  cli({"train", "--algo", "grpo", "--seed", "1", "--iters", "50", "--out", b.string()});
  const std::string ma = slurp(a / "metrics.jsonl");
  const std::string mb = slurp(b / "metrics.jsonl");
  v.pass = !ma.empty() && ma == mb;
  v.data = {{"bytes", ma.size()}, {"identical", ma == mb}};
  v.detail = "50 iterations, " + std::to_string(ma.size()) + " bytes, " +
             (ma == mb ? "byte-identical" : "streams differ");
  return v;
}

Verdict distillation_direction() {
  Verdict v;
  // Mild tip effect so rho stays inside the clip range under both ratio
  // definitions.
  auto old = PolicyParams::zeros(fixture::space());
  old.w = {0.2, -0.1, 0.0, 0, 0, 0, 0, 0};
  old.v[1] = 0.15;
  const auto ctx = fixture::context(3, true);
  bool ok = true;
  for (auto ratio : {OffPolicyRatio::kAlg1, OffPolicyRatio::kTable3}) {
    for (double adv : {1.0, -1.0}) {
      auto b = fixture::batch({fixture::one_step(ctx, 1, old, RolloutMode::kMemoryAugmented)}, {adv});
      prepare_old_logprobs(b, UpdateMode::kOffPolicy, old, ratio);
      UpdateConfig cfg;
      cfg.offpolicy_ratio = ratio;
      const auto res = surrogate_objective(b, old, old, cfg);
      const auto next = apply_update(old, res.gradient, 1.0);
      const double before = logprob(old, ctx.without_tips(), ActionId{1});
      const double after = logprob(next, ctx.without_tips(), ActionId{1});
      const bool good = adv > 0 ? after > before : after < before;
      ok = ok && good && res.stats.mask_fraction == 0.0;
      const std::string name = to_string(ratio) + (adv > 0 ? " A=+1" : " A=-1");
      v.data[name] = {{"before", before}, {"after", after}};
      if (!good) v.failures.push_back(oracle::compare(name, before, after));
    }
  }
  v.pass = ok;
  v.detail = std::string("A=+1 raises and A=-1 lowers the no-tip log-probability under alg1 and table3") +
             (ok ? "" : ": violated");
  return v;
}

Verdict mask_effectiveness() {
  Verdict v;
  auto p = PolicyParams::zeros(fixture::space());
  p.w[0] = std::log(1e-8 / (1 - 1e-8));
  const auto ctx = fixture::context(2, false);
  auto b = fixture::batch({fixture::one_step(ctx, 0, p, RolloutMode::kWithoutMemory)}, {1.0});
  prepare_old_logprobs(b, UpdateMode::kOnPolicy, p);
  UpdateConfig cfg;
  cfg.delta = 1e-6;
  const double masked = surrogate_objective(b, p, p, cfg).gradient.norm();
  cfg.delta = 1e-10;
  const double open = surrogate_objective(b, p, p, cfg).gradient.norm();
  v.pass = masked == 0.0 && open > 0.0;
  v.data = {{"prob", std::exp(logprob(p, ctx, ActionId{0}))}, {"grad_norm_delta_1e-6", masked},
            {"grad_norm_delta_1e-10", open}};
  v.detail = "pi=1e-8: |grad| " + fmt(masked) + " at delta 1e-6, " + fmt(open, 3) + " at delta 1e-10";
  return v;
}

// --- training experiments --------------------------------------------------

struct Run {
  std::vector<json> records;
  fs::path dir;
};

std::vector<json> read_records(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

// Trains (or reuses) one run; a `done` marker means the run finished.
Run train_run(const Options& o, const std::string& name, std::uint64_t seed,
              const std::vector<std::string>& extra) {
  Run r;
  r.dir = o.work / "runs" / (name + "-s" + std::to_string(seed));
  if (!fs::exists(r.dir / "done")) {
    std::vector<std::string> args = {"train", "--seed", std::to_string(seed), "--iters",
                                     std::to_string(o.iterations), "--out", r.dir.string(), "--resume"};
    args.insert(args.end(), extra.begin(), extra.end());
    cli(args);
    std::ofstream(r.dir / "done") << "";
  }
  r.records = read_records(r.dir / "metrics.jsonl");
  return r;
}

double tail_mean(const std::vector<json>& recs, const char* key, std::size_t tail) {
  std::vector<double> xs;
  for (std::size_t i = recs.size() > tail ? recs.size() - tail : 0; i < recs.size(); ++i)
    if (recs[i].contains(key)) xs.push_back(recs[i][key].get<double>());
  return xs.empty() ? std::nan("") : mean(xs);
}

struct Experiments {
  std::vector<std::uint64_t> seeds;
  std::vector<Run> empo2, grpo, no_intrinsic;
};

Experiments& experiments(const Options& o, bool need_no_intrinsic) {
  static Experiments e;
  if (e.seeds.empty()) {
    e.seeds = parse_index_list(o.seeds);
    for (auto s : e.seeds) e.empo2.push_back(train_run(o, "empo2", s, {"--algo", "empo2"}));
    for (auto s : e.seeds) e.grpo.push_back(train_run(o, "grpo", s, {"--algo", "grpo"}));
  }
  if (need_no_intrinsic && e.no_intrinsic.empty())
    for (auto s : e.seeds)
      e.no_intrinsic.push_back(train_run(o, "empo2-lambda0", s, {"--algo", "empo2", "--lambda-int", "0"}));
  return e;
}

Verdict exploration_win(const Options& o) {
  Verdict v;
  auto& e = experiments(o, false);
  std::vector<double> ret_e, ret_g, succ_e, succ_g;
  for (const auto& r : e.empo2) {
    ret_e.push_back(tail_mean(r.records, "eval_mean_return", 50));
    succ_e.push_back(tail_mean(r.records, "eval_success", 50));
  }
  for (const auto& r : e.grpo) {
    ret_g.push_back(tail_mean(r.records, "eval_mean_return", 50));
    succ_g.push_back(tail_mean(r.records, "eval_success", 50));
  }
  const auto mw = mann_whitney_greater(ret_e, ret_g);
  const double med_e = median(succ_e), med_g = median(succ_g);
  v.pass = mw.p_value < o.significance && med_e >= 0.8 && med_g <= 0.4;
  v.data = {{"empo2_tail_eval_return", ret_e}, {"grpo_tail_eval_return", ret_g},
            {"empo2_tail_eval_success", succ_e}, {"grpo_tail_eval_success", succ_g},
            {"mann_whitney_u", mw.statistic}, {"p_value", mw.p_value},
            {"empo2_median_success", med_e}, {"grpo_median_success", med_g}};
  v.detail = "tail-50 eval return median " + fmt(median(ret_e)) + " vs " + fmt(median(ret_g)) +
             " (U=" + fmt(mw.statistic) + ", p=" + fmt(mw.p_value, 3) + "), median success " + fmt(med_e, 3) +
             " vs " + fmt(med_g, 3) + " (need >=0.8 and <=0.4)";
  return v;
}

Verdict entropy_maintenance(const Options& o) {
  Verdict v;
  auto& e = experiments(o, true);
  const std::size_t idx = 149;  // iteration 150
  std::vector<double> with, without;
  for (const auto& r : e.empo2) with.push_back(r.records.at(idx).at("entropy").get<double>());
  for (const auto& r : e.no_intrinsic) without.push_back(r.records.at(idx).at("entropy").get<double>());
  const auto t = paired_permutation_greater(with, without);
  v.pass = mean(with) > mean(without) && t.p_value < o.significance;
  v.data = {{"entropy_lambda1", with}, {"entropy_lambda0", without}, {"p_value", t.p_value}};
  v.detail = "entropy at iteration 150: mean " + fmt(mean(with)) + " (lambda 1) vs " + fmt(mean(without)) +
             " (lambda 0), paired p=" + fmt(t.p_value, 3);
  return v;
}

std::vector<double> adapt_curve(const Options& o, const Run& run, std::uint64_t seed) {
  const fs::path dir = run.dir / "adapt-paint-mix";
  if (!fs::exists(dir / "done")) {
    cli({"adapt", "--checkpoint", (run.dir / "checkpoint").string(), "--env", "paint-mix", "--variants", "5-24",
         "--trials", "10", "--episodes", "4", "--seed", std::to_string(seed), "--out", dir.string(), "--resume"});
    std::ofstream(dir / "done") << "";
  }
  std::vector<double> means;
  std::istringstream in(slurp(dir / "curve.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    means.push_back(parse_double(line.substr(a + 1, line.find(',', a + 1) - a - 1)));
  }
  return means;
}

Verdict ood_adaptation(const Options& o) {
  Verdict v;
  auto& e = experiments(o, false);
  std::vector<double> first, late, late_grpo;
  int beats_grpo = 0;
  for (std::size_t i = 0; i < e.seeds.size(); ++i) {
    const auto c = adapt_curve(o, e.empo2[i], e.seeds[i]);
    const auto g = adapt_curve(o, e.grpo[i], e.seeds[i]);
    first.push_back(c.at(0));
    late.push_back((c.at(7) + c.at(8) + c.at(9)) / 3.0);
    late_grpo.push_back((g.at(7) + g.at(8) + g.at(9)) / 3.0);
    beats_grpo += late.back() > late_grpo.back() ? 1 : 0;
    v.data["curves"].push_back({{"seed", e.seeds[i]}, {"empo2", c}, {"grpo", g}});
  }
  const auto t = paired_permutation_greater(late, first);
  const double margin = mean(late) - mean(first);
  const int needed = static_cast<int>(e.seeds.size()) - 1;
  v.pass = margin >= 0.0 && t.p_value < o.significance && beats_grpo >= needed;
  v.data["trial0"] = first;
  v.data["trials8_10"] = late;
  v.data["grpo_trials8_10"] = late_grpo;
  v.data["p_value"] = t.p_value;
  v.detail = "paint-mix trials 8-10 mean " + fmt(mean(late)) + " vs trial 0 " + fmt(mean(first)) +
             " (paired p=" + fmt(t.p_value, 3) + "), beats GRPO-trained in " + std::to_string(beats_grpo) + "/" +
             std::to_string(e.seeds.size()) + " seeds";
  return v;
}

Verdict determinism_resume(const Options& o) {
  Verdict v;
  const fs::path root = o.work / "c12";
  fs::remove_all(root);
  const std::vector<std::string> common = {"--algo", "empo2", "--seed", "7", "--set", "test_variants=5-14"};
  auto train = [&](const fs::path& dir, int iters, bool resume) {
    std::vector<std::string> args = {"train", "--iters", std::to_string(iters), "--out", dir.string()};
    args.insert(args.end(), common.begin(), common.end());
    if (resume) args.push_back("--resume");
    cli(args);
  };
  train(root / "a", 40, false);
  train(root / "b", 40, false);
  train(root / "c", 20, false);
  train(root / "c", 40, true);
  const std::string a = slurp(root / "a" / "metrics.jsonl");
  const std::string b = slurp(root / "b" / "metrics.jsonl");
  const std::string c = slurp(root / "c" / "metrics.jsonl");
  const bool same = !a.empty() && a == b;
  const bool resumed = a == c;
  const bool params = slurp(root / "a" / "checkpoint" / "policy.txt") == slurp(root / "c" / "checkpoint" / "policy.txt");
  v.pass = same && resumed && params;
  v.data = {{"same_seed_identical", same}, {"resume_identical", resumed}, {"final_policy_identical", params}};
  v.detail = std::string("same seed ") + (same ? "identical" : "DIFFERS") + ", resume at 20/40 " +
             (resumed && params ? "identical tail" : "DIFFERS");
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"acceptance suite"};
  app.add_option("--work-dir", o.work, "directory for training runs and the report");
  app.add_option("--only", o.only, "criteria to run, e.g. 1-8,12");
  app.add_option("--seeds", o.seeds, "seeds for the training experiments");
  app.add_option("--iters", o.iterations, "iterations per training run");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "ratio table conformance", 1, [](const Options&) { return ratio_table(); }},
      {2, "gradient fidelity", 5, [](const Options&) { return gradient_fidelity(); }},
      {3, "advantage statistics", 1, [](const Options&) { return advantage_stats(); }},
      {4, "retrieval oracle equivalence", 5, [](const Options&) { return retrieval_equivalence(); }},
      {5, "intrinsic decay", 1, [](const Options&) { return intrinsic_decay(); }},
      {6, "GRPO reduction", 60, grpo_reduction},
      {7, "distillation direction", 1, [](const Options&) { return distillation_direction(); }},
      {8, "mask effectiveness", 1, [](const Options&) { return mask_effectiveness(); }},
      {9, "exploration win", 900, exploration_win},
      {10, "entropy maintenance", 900, entropy_maintenance},
      {11, "OOD adaptation", 600, ood_adaptation},
      {12, "determinism and resume", 120, determinism_resume},
  };
  std::set<std::uint64_t> selected;
  if (!o.only.empty())
    for (auto i : parse_index_list(o.only)) selected.insert(i);

  fs::create_directories(o.work);
  json report = json::array();
  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(static_cast<std::uint64_t>(c.id))) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(o);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << v.detail << "; "
              << fmt(secs, 3) << " s" << (in_time ? "" : " over the " + fmt(c.budget_s) + " s budget") << std::endl;
    json entry = {{"criterion", c.id}, {"name", c.name}, {"pass", pass}, {"detail", v.detail},
                  {"seconds", secs}, {"budget_seconds", c.budget_s}, {"data", v.data}};
    for (const auto& f : v.failures) entry["oracle_failures"].push_back(f.to_json());
    report.push_back(entry);
  }
  std::ofstream(o.work / "report.json") << report.dump(2) << "\n";
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
