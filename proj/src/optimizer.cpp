#include "empo2/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace empo2 {

std::string to_string(UpdateMode mode) {
  return mode == UpdateMode::kOffPolicy ? "off-policy" : "on-policy";
}

std::string to_string(OffPolicyRatio r) { return r == OffPolicyRatio::kAlg1 ? "alg1" : "table3"; }

OffPolicyRatio offpolicy_ratio_from_string(std::string_view text) {
  if (text == "table3") return OffPolicyRatio::kTable3;
  if (text == "alg1") return OffPolicyRatio::kAlg1;
  throw InvalidArgument("offpolicy_ratio must be table3 or alg1, got '" + std::string(text) + "'");
}

void UpdateConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
  };
  require(eps_low > 0.0 && eps_low < 1.0, "eps_low must lie in (0, 1)");
  require(eps_high > 0.0 && eps_high < 1.0, "eps_high must lie in (0, 1)");
  require(dual_clip_c > 1.0, "dual_clip_c must exceed 1");
  require(beta >= 0.0 && std::isfinite(beta), "beta must be >= 0");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(lr >= 0.0 && std::isfinite(lr), "lr must be >= 0");
  require(eps_std > 0.0, "eps_std must be positive");
  require(lambda_int >= 0.0 && std::isfinite(lambda_int), "lambda_int must be >= 0");
  require(p >= 0.0 && p <= 1.0, "p must lie in [0, 1]");
  require(q >= 0.0 && q <= 1.0, "q must lie in [0, 1]");
  require(horizon >= 1, "horizon must be positive");
}

std::size_t GroupBatch::action_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps.size();
  return n;
}

std::vector<double> group_advantages(std::span<const double> returns, double eps_std) {
  if (returns.size() < 2) throw InvalidArgument("group_advantages: group size must be at least 2");
  const double n = static_cast<double>(returns.size());
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(returns.size(), 0.0);
  if (sd < eps_std) return out;
  for (std::size_t i = 0; i < returns.size(); ++i) out[i] = (returns[i] - mean) / sd;
  return out;
}

GroupBatch make_batch(std::vector<Trajectory> trajectories, std::size_t group_size,
                      double eps_std) {
  if (group_size < 2) throw InvalidArgument("make_batch: group size must be at least 2");
  if (trajectories.size() % group_size != 0)
    throw InvalidArgument("make_batch: trajectory count is not a multiple of the group size");
  GroupBatch b;
  b.trajectories = std::move(trajectories);
  b.advantages.assign(b.trajectories.size(), 0.0);
  for (std::size_t g = 0; g < b.trajectories.size(); g += group_size) {
    std::vector<std::size_t> idx;
    std::vector<double> returns;
    for (std::size_t k = g; k < g + group_size; ++k) {
      idx.push_back(k);
      returns.push_back(b.trajectories[k].return_total);
    }
    const auto adv = group_advantages(returns, eps_std);
    for (std::size_t k = 0; k < idx.size(); ++k) b.advantages[idx[k]] = adv[k];
    b.groups.push_back(std::move(idx));
  }
  return b;
}

UpdateMode select_update_mode(double q, Rng& rng, RolloutMode traj_mode) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("q must lie in [0, 1]");
  if (traj_mode == RolloutMode::kWithoutMemory) return UpdateMode::kOnPolicy;
  return rng.bernoulli(q) ? UpdateMode::kOffPolicy : UpdateMode::kOnPolicy;
}

void prepare_old_logprobs(GroupBatch& batch, UpdateMode mode, const PolicyParams& params_old,
                          OffPolicyRatio ratio) {
  batch.mode = mode;
  batch.old_logprobs.assign(batch.trajectories.size(), {});
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& traj = batch.trajectories[i];
    auto& old = batch.old_logprobs[i];
    old.reserve(traj.steps.size());
    for (const auto& s : traj.steps) {
      if (s.context.action_count() == 0)
        throw InvalidArgument("prepare_old_logprobs: step has no recorded context");
      if (mode == UpdateMode::kOffPolicy && ratio == OffPolicyRatio::kAlg1)
        old.push_back(logprob(params_old, s.context.without_tips(), s.action));
      else
        old.push_back(s.behavior_logprob);
    }
  }
  batch.prepared = true;
}

const ContextFeatures& current_context(const StepRecord& step, UpdateMode mode,
                                       RolloutMode traj_mode, ContextFeatures& scratch) {
  const bool with_tips = mode == UpdateMode::kOnPolicy && traj_mode == RolloutMode::kMemoryAugmented;
  if (with_tips || !step.context.tip_present) return step.context;
  scratch = step.context.without_tips();
  return scratch;
}

double importance_ratio(const GroupBatch& batch, const PolicyParams& params, std::size_t traj,
                        std::size_t step) {
  if (!batch.prepared) throw InvalidArgument("importance_ratio: batch not prepared");
  const auto& tr = batch.trajectories.at(traj);
  const auto& s = tr.steps.at(step);
  ContextFeatures scratch;
  const ContextFeatures& cur = current_context(s, batch.mode, tr.mode, scratch);
  return std::exp(logprob(params, cur, s.action) - batch.old_logprobs.at(traj).at(step));
}

double clipped_term(double rho, double advantage, const UpdateConfig& cfg) {
  const double clipped = std::clamp(rho, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
  double term = std::min(rho * advantage, clipped * advantage);
  if (advantage < 0.0) term = std::max(term, cfg.dual_clip_c * advantage);
  return term;
}

bool term_active(double rho, double advantage, const UpdateConfig& cfg) {
  if (advantage > 0.0) return rho <= 1.0 + cfg.eps_high;
  if (advantage < 0.0) return rho >= 1.0 - cfg.eps_low && rho <= cfg.dual_clip_c;
  return false;
}

namespace {

[[noreturn]] void non_finite(const char* what, std::size_t traj, std::size_t step, double value) {
  std::ostringstream os;
  os << "non-finite " << what << " at trajectory " << traj << ", step " << step << " (value "
     << value << ")";
  throw NonFiniteError(os.str());
}

}  // namespace

SurrogateResult surrogate_objective(const GroupBatch& batch, const PolicyParams& params,
                                    const PolicyParams& ref, const UpdateConfig& cfg) {
  if (!batch.prepared) throw InvalidArgument("surrogate_objective: batch not prepared");
  if (params.space != ref.space) throw InvalidArgument("surrogate_objective: reference space differs");
  SurrogateResult res;
  res.gradient = Gradient::zeros(params.space);
  auto& st = res.stats;

  const std::size_t total_actions = batch.action_count();
  const double norm = 1.0 / (static_cast<double>(batch.trajectories.size()) *
                             static_cast<double>(cfg.horizon));
  const double kl_coef = total_actions > 0 ? cfg.beta / static_cast<double>(total_actions) : 0.0;

  std::size_t masked = 0, clipped = 0;
  double ratio_dev = 0.0, surrogate = 0.0, kl_sum = 0.0, ent_sum = 0.0;
  ContextFeatures scratch, notip_scratch;

  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& traj = batch.trajectories[i];
    const double adv = batch.advantages[i];
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& s = traj.steps[t];
      const ContextFeatures& cur = current_context(s, batch.mode, traj.mode, scratch);
      const ContextFeatures& notip =
          s.context.tip_present ? (notip_scratch = s.context.without_tips(), notip_scratch)
                                : s.context;

      const auto lp_notip_all = log_probs(params, notip);
      const double lp_notip = lp_notip_all[static_cast<std::size_t>(s.action.value)];
      const double lp_cur = cur.tip_present ? logprob(params, cur, s.action) : lp_notip;
      const double lp_old = batch.old_logprobs[i][t];
      const double rho = std::exp(lp_cur - lp_old);
      if (!std::isfinite(lp_cur)) non_finite("current logprob", i, t, lp_cur);
      if (!std::isfinite(lp_old)) non_finite("old logprob", i, t, lp_old);
      if (!std::isfinite(rho)) non_finite("importance ratio", i, t, rho);

      double h = 0.0;
      for (double lp : lp_notip_all) h -= std::exp(lp) * lp;
      ent_sum += h;
      ratio_dev += std::abs(rho - 1.0);

      if (std::exp(lp_notip) < cfg.delta) {
        ++masked;
      } else {
        const double term = clipped_term(rho, adv, cfg);
        surrogate += term;
        if (term_active(rho, adv, cfg)) {
          accumulate_grad_logprob(params, cur, s.action, norm * adv * rho, res.gradient);
        } else if (adv != 0.0) {
          ++clipped;
        }
      }

      kl_sum += kl_to_ref(params, ref, cur);
      if (cfg.beta > 0.0) accumulate_grad_kl(params, ref, cur, -kl_coef, res.gradient);
    }
  }

  const double n = total_actions > 0 ? static_cast<double>(total_actions) : 1.0;
  st.actions = total_actions;
  st.surrogate = surrogate * norm;
  st.kl = kl_sum / n;
  st.entropy = ent_sum / n;
  st.mean_abs_ratio_dev = ratio_dev / n;
  st.clip_fraction = static_cast<double>(clipped) / n;
  st.mask_fraction = static_cast<double>(masked) / n;
  st.objective = st.surrogate - cfg.beta * st.kl;
  res.objective = st.objective;
  if (!std::isfinite(res.objective)) non_finite("objective", 0, 0, res.objective);
  if (!res.gradient.finite()) throw NonFiniteError("non-finite gradient entry");
  return res;
}

PolicyParams apply_update(const PolicyParams& params, const Gradient& gradient, double lr) {
  if (gradient.w.size() != params.w.size() || gradient.v.size() != params.v.size())
    throw InvalidArgument("apply_update: gradient dimensions differ from params");
  if (!gradient.finite()) throw NonFiniteError("apply_update: non-finite gradient");
  PolicyParams out = params;
  for (std::size_t k = 0; k < out.w.size(); ++k) out.w[k] += lr * gradient.w[k];
  for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += lr * gradient.v[k];
  for (double x : out.w)
    if (!std::isfinite(x)) throw NonFiniteError("apply_update: non-finite base weight");
  for (double x : out.v)
    if (!std::isfinite(x)) throw NonFiniteError("apply_update: non-finite tip weight");
  ++out.version;
  return out;
}

std::vector<GroupStats> group_return_stats(const GroupBatch& batch) {
  std::vector<GroupStats> out;
  for (const auto& g : batch.groups) {
    GroupStats s;
    if (g.empty()) {
      out.push_back(s);
      continue;
    }
    s.min = s.max = batch.trajectories[g.front()].return_ext;
    for (auto k : g) {
      const double r = batch.trajectories[k].return_ext;
      s.mean += r;
      s.min = std::min(s.min, r);
      s.max = std::max(s.max, r);
    }
    s.mean /= static_cast<double>(g.size());
    for (auto k : g) {
      const double d = batch.trajectories[k].return_ext - s.mean;
      s.std += d * d;
    }
    s.std = std::sqrt(s.std / static_cast<double>(g.size()));
    out.push_back(s);
  }
  return out;
}

nlohmann::json to_json(const UpdateReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : r.groups)
    groups.push_back({{"mean", g.mean}, {"std", g.std}, {"min", g.min}, {"max", g.max}});
  return {{"objective", r.stats.objective},
          {"surrogate", r.stats.surrogate},
          {"grad_norm", r.grad_norm},
          {"mean_abs_ratio_dev", r.stats.mean_abs_ratio_dev},
          {"clip_fraction", r.stats.clip_fraction},
          {"mask_fraction", r.stats.mask_fraction},
          {"kl", r.stats.kl},
          {"entropy", r.stats.entropy},
          {"rollout_mode", to_string(r.rollout_mode)},
          {"update_mode", to_string(r.update_mode)},
          {"groups", groups}};
}

}  // namespace empo2
