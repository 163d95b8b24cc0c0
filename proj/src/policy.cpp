#include "empo2/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>

namespace empo2 {
namespace {

constexpr std::string_view kBiasToken = "<bias>";

std::uint32_t bucket(std::uint64_t h, std::size_t dim) {
  return static_cast<std::uint32_t>(h % dim);
}

SparseFeatures binary_features(std::vector<std::uint32_t> idx) {
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  SparseFeatures out;
  out.reserve(idx.size());
  for (auto i : idx) out.emplace_back(i, 1.0);
  return out;
}

std::string strip_punct(std::string_view t) {
  while (!t.empty() && (t.back() == ',' || t.back() == ';' || t.back() == ':')) t.remove_suffix(1);
  return std::string(t);
}

double dot(const std::vector<double>& weights, const SparseFeatures& f) {
  double s = 0.0;
  for (const auto& [i, x] : f) {
    if (i >= weights.size()) throw InvalidArgument("feature index " + std::to_string(i) + " out of range");
    s += weights[i] * x;
  }
  return s;
}

// The plain relations get fixed slots so they can never share a weight;
// everything else in the tip block is hashed into the remaining buckets.
constexpr std::array<std::string_view, 5> kRelations = {"miss", "last-neg", "last-zero", "last-pos", "next"};
constexpr std::uint32_t kReservedTipSlots = kRelations.size();

void check_tip_dim(const FeatureSpace& space) {
  if (space.tip_dim <= kReservedTipSlots)
    throw InvalidArgument("tip_dim must exceed " + std::to_string(kReservedTipSlots));
}

void check_dims(const PolicyParams& params, const ContextFeatures& ctx) {
  if (params.w.size() != params.space.base_dim || params.v.size() != params.space.tip_dim)
    throw InvalidArgument("policy parameters do not match their feature space");
  if (ctx.base.empty()) throw InvalidArgument("context has no admissible actions");
  if (ctx.tip.size() != ctx.base.size()) throw InvalidArgument("context blocks disagree in size");
}

void check_action(const ContextFeatures& ctx, ActionId a) {
  if (a.value < 0 || static_cast<std::size_t>(a.value) >= ctx.action_count())
    throw InvalidArgument("action id " + std::to_string(a.value) + " outside context");
}

void add_features(std::vector<double>& out, const SparseFeatures& f, double coef) {
  for (const auto& [i, x] : f) out[i] += coef * x;
}

}  // namespace

ContextFeatures ContextFeatures::without_tips() const {
  ContextFeatures out;
  out.base = base;
  out.tip.assign(base.size(), {});
  out.tip_present = false;
  return out;
}

std::uint32_t base_bucket(const FeatureSpace& space, std::string_view context_token,
                          std::string_view action_part) {
  return bucket(hash_pair(context_token, action_part, space.salt), space.base_dim);
}

std::uint32_t tip_relation_bucket(const FeatureSpace& space, std::string_view relation) {
  check_tip_dim(space);
  for (std::size_t i = 0; i < kRelations.size(); ++i)
    if (kRelations[i] == relation) return static_cast<std::uint32_t>(i);
  throw InvalidArgument("unknown tip relation '" + std::string(relation) + "'");
}

std::uint32_t tip_relation_verb_bucket(const FeatureSpace& space, std::string_view relation,
                                       std::string_view verb) {
  check_tip_dim(space);
  return kReservedTipSlots +
         bucket(hash_pair(std::string("tip-rel:") + std::string(relation), verb, space.salt),
                space.tip_dim - kReservedTipSlots);
}

std::uint32_t tip_token_bucket(const FeatureSpace& space, std::string_view action_token) {
  check_tip_dim(space);
  return kReservedTipSlots +
         bucket(hash_pair("tip-token", action_token, space.salt), space.tip_dim - kReservedTipSlots);
}

ContextFeatures featurize(const FeatureSpace& space, const Observation& obs,
                          const TaskSpec& task, std::span<const AdmissibleAction> actions,
                          std::span<const Tip> tips) {
  if (actions.empty()) throw InvalidArgument("featurize: no admissible actions");
  if (space.base_dim == 0 || space.tip_dim == 0)
    throw InvalidArgument("featurize: feature dimensions must be positive");
  check_tip_dim(space);

  std::vector<std::string_view> context;
  context.reserve(obs.tokens.size() + task.description.size() + 1);
  for (const auto& t : obs.tokens) context.push_back(t);
  for (const auto& t : task.description) context.push_back(t);
  context.push_back(kBiasToken);
  std::sort(context.begin(), context.end());
  context.erase(std::unique(context.begin(), context.end()), context.end());

  struct ParsedTip {
    std::optional<TipContent> content;
    std::unordered_set<std::string> tokens;
    double score;
  };
  std::vector<ParsedTip> parsed;
  parsed.reserve(tips.size());
  for (const auto& tip : tips) {
    ParsedTip p{parse_tip_content(tip.content), {}, tip.score};
    for (const auto& t : split_ws(tip.content)) p.tokens.insert(strip_punct(t));
    parsed.push_back(std::move(p));
  }

  ContextFeatures out;
  out.base.resize(actions.size());
  out.tip.resize(actions.size());
  out.tip_present = !tips.empty();
  const double share = tips.empty() ? 0.0 : 1.0 / static_cast<double>(tips.size());

  for (std::size_t a = 0; a < actions.size(); ++a) {
    const Tokens& words = actions[a].tokens;
    const std::string phrase = join(words);
    std::vector<std::string> parts(words.begin(), words.end());
    std::sort(parts.begin(), parts.end());
    parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
    const std::size_t n_tokens = parts.size();
    parts.push_back("@" + phrase);

    std::vector<std::uint32_t> idx;
    idx.reserve(context.size() * parts.size());
    for (auto t : context)
      for (const auto& x : parts) idx.push_back(base_bucket(space, t, x));
    out.base[a] = binary_features(std::move(idx));

    if (parsed.empty()) continue;
    const std::string verb = words.empty() ? std::string() : words.front();
    std::map<std::uint32_t, double> acc;
    auto relation = [&](std::string_view rel) {
      acc[tip_relation_bucket(space, rel)] += share;
      acc[tip_relation_verb_bucket(space, rel, verb)] += share;
    };
    for (const auto& p : parsed) {
      if (p.content) {
        const auto& m = p.content->missing;
        if (std::find(m.begin(), m.end(), phrase) != m.end()) relation("miss");
        if (!m.empty() && m.front() == phrase) relation("next");
        if (p.content->last_action == phrase)
          relation(p.score < 0.0 ? "last-neg" : (p.score > 0.0 ? "last-pos" : "last-zero"));
      }
      for (std::size_t k = 0; k < n_tokens; ++k)
        if (p.tokens.count(parts[k])) acc[tip_token_bucket(space, parts[k])] += share;
    }
    SparseFeatures f;
    f.reserve(acc.size());
    for (const auto& [i, x] : acc) f.emplace_back(i, std::min(1.0, x));
    out.tip[a] = std::move(f);
  }
  return out;
}

PolicyParams PolicyParams::zeros(const FeatureSpace& space) {
  PolicyParams p;
  p.space = space;
  p.w.assign(space.base_dim, 0.0);
  p.v.assign(space.tip_dim, 0.0);
  return p;
}

void apply_tip_prior(PolicyParams& params, double strength) {
  params.v[tip_relation_bucket(params.space, "next")] += strength;
}

Gradient Gradient::zeros(const FeatureSpace& space) {
  return Gradient{std::vector<double>(space.base_dim, 0.0),
                  std::vector<double>(space.tip_dim, 0.0)};
}

double Gradient::norm() const {
  double s = 0.0;
  for (double x : w) s += x * x;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool Gradient::finite() const {
  auto ok = [](double x) { return std::isfinite(x); };
  return std::all_of(w.begin(), w.end(), ok) && std::all_of(v.begin(), v.end(), ok);
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> action_scores(const PolicyParams& params, const ContextFeatures& ctx) {
  check_dims(params, ctx);
  std::vector<double> s(ctx.action_count());
  for (std::size_t a = 0; a < s.size(); ++a) {
    s[a] = dot(params.w, ctx.base[a]);
    if (ctx.tip_present) s[a] += dot(params.v, ctx.tip[a]);
  }
  return s;
}

std::vector<double> log_probs(const PolicyParams& params, const ContextFeatures& ctx) {
  std::vector<double> s = action_scores(params, ctx);
  const double z = log_sum_exp(s);
  for (double& x : s) x -= z;
  return s;
}

double logprob(const PolicyParams& params, const ContextFeatures& ctx, ActionId a) {
  check_action(ctx, a);
  return log_probs(params, ctx)[static_cast<std::size_t>(a.value)];
}

SampledAction sample_action(const PolicyParams& params, const ContextFeatures& ctx, Rng& rng) {
  const std::vector<double> lp = log_probs(params, ctx);
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t pick = lp.size();
  for (std::size_t a = 0; a < lp.size(); ++a) {
    cum += std::exp(lp[a]);
    if (u < cum) {
      pick = a;
      break;
    }
  }
  if (pick == lp.size()) {
    // Rounding left cum just below u; take the last action with mass.
    pick = lp.size() - 1;
    while (pick > 0 && std::exp(lp[pick]) == 0.0) --pick;
  }
  return {ActionId{static_cast<int>(pick)}, lp[pick]};
}

ActionId greedy_action(const PolicyParams& params, const ContextFeatures& ctx) {
  const std::vector<double> s = action_scores(params, ctx);
  std::size_t best = 0;
  for (std::size_t a = 1; a < s.size(); ++a)
    if (s[a] > s[best]) best = a;
  return ActionId{static_cast<int>(best)};
}

void accumulate_grad_logprob(const PolicyParams& params, const ContextFeatures& ctx,
                             ActionId a, double coef, Gradient& out) {
  check_action(ctx, a);
  const std::vector<double> lp = log_probs(params, ctx);
  const auto chosen = static_cast<std::size_t>(a.value);
  add_features(out.w, ctx.base[chosen], coef);
  if (ctx.tip_present) add_features(out.v, ctx.tip[chosen], coef);
  for (std::size_t b = 0; b < lp.size(); ++b) {
    const double pb = std::exp(lp[b]);
    add_features(out.w, ctx.base[b], -coef * pb);
    if (ctx.tip_present) add_features(out.v, ctx.tip[b], -coef * pb);
  }
}

Gradient grad_logprob(const PolicyParams& params, const ContextFeatures& ctx, ActionId a) {
  Gradient g = Gradient::zeros(params.space);
  accumulate_grad_logprob(params, ctx, a, 1.0, g);
  return g;
}

double entropy(const PolicyParams& params, const ContextFeatures& ctx) {
  const std::vector<double> lp = log_probs(params, ctx);
  double h = 0.0;
  for (double l : lp) {
    const double p = std::exp(l);
    if (p > 0.0) h -= p * l;
  }
  return std::max(0.0, h);
}

namespace {

void check_same_space(const PolicyParams& a, const PolicyParams& b) {
  if (a.space != b.space || a.w.size() != b.w.size() || a.v.size() != b.v.size())
    throw InvalidArgument("kl_to_ref: parameter dimensions differ");
}

}  // namespace

double kl_to_ref(const PolicyParams& params, const PolicyParams& ref, const ContextFeatures& ctx) {
  check_same_space(params, ref);
  const std::vector<double> lp = log_probs(params, ctx);
  const std::vector<double> lq = log_probs(ref, ctx);
  double kl = 0.0;
  for (std::size_t a = 0; a < lp.size(); ++a) {
    const double p = std::exp(lp[a]);
    if (p > 0.0) kl += p * (lp[a] - lq[a]);
  }
  return std::max(0.0, kl);
}

void accumulate_grad_kl(const PolicyParams& params, const PolicyParams& ref,
                        const ContextFeatures& ctx, double coef, Gradient& out) {
  check_same_space(params, ref);
  const std::vector<double> lp = log_probs(params, ctx);
  const std::vector<double> lq = log_probs(ref, ctx);
  double kl = 0.0;
  for (std::size_t a = 0; a < lp.size(); ++a) {
    const double p = std::exp(lp[a]);
    if (p > 0.0) kl += p * (lp[a] - lq[a]);
  }
  // d KL / d score_j = pi_j * (log pi_j - log ref_j - KL)
  for (std::size_t j = 0; j < lp.size(); ++j) {
    const double p = std::exp(lp[j]);
    if (p == 0.0) continue;
    const double c = coef * p * (lp[j] - lq[j] - kl);
    add_features(out.w, ctx.base[j], c);
    if (ctx.tip_present) add_features(out.v, ctx.tip[j], c);
  }
}

// ---------------------------------------------------------------------------

void save_policy(const PolicyParams& params, std::ostream& out) {
  out << "empo2-policy 1\n";
  out << "salt " << params.space.salt << "\n";
  out << "version " << params.version << "\n";
  out << "base_dim " << params.space.base_dim << "\n";
  out << "tip_dim " << params.space.tip_dim << "\n";
  out << "w\n";
  for (double x : params.w) out << format_double(x) << "\n";
  out << "v\n";
  for (double x : params.v) out << format_double(x) << "\n";
  out << "end\n";
}

namespace {

std::string expect_line(std::istream& in, std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("policy file truncated before " + std::string(what));
  return line;
}

std::uint64_t expect_field(std::istream& in, std::string_view key) {
  const std::string line = expect_line(in, key);
  Tokens t = split_ws(line);
  if (t.size() != 2 || t[0] != key) throw FormatError("policy file: expected '" + std::string(key) + "'");
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(t[1], &used);
    if (used != t[1].size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError("policy file: bad value for '" + std::string(key) + "'");
  }
}

void read_block(std::istream& in, std::string_view name, std::vector<double>& out) {
  if (expect_line(in, name) != name) throw FormatError("policy file: expected block " + std::string(name));
  for (double& x : out) {
    x = parse_double(expect_line(in, name));
    if (!std::isfinite(x)) throw FormatError("policy file: non-finite weight");
  }
}

}  // namespace

PolicyParams load_policy(std::istream& in) {
  if (expect_line(in, "header") != "empo2-policy 1")
    throw FormatError("policy file: bad header");
  FeatureSpace space;
  space.salt = expect_field(in, "salt");
  const std::uint64_t version = expect_field(in, "version");
  space.base_dim = expect_field(in, "base_dim");
  space.tip_dim = expect_field(in, "tip_dim");
  if (space.base_dim == 0 || space.tip_dim == 0 || space.base_dim > (1u << 24) ||
      space.tip_dim > (1u << 24))
    throw FormatError("policy file: implausible dimensions");
  PolicyParams p = PolicyParams::zeros(space);
  p.version = version;
  read_block(in, "w", p.w);
  read_block(in, "v", p.v);
  if (expect_line(in, "end") != "end") throw FormatError("policy file: missing end marker");
  return p;
}

void save_policy(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  save_policy(params, out);
  if (!out) throw Error("failed writing " + path.string());
}

PolicyParams load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open policy file " + path.string());
  return load_policy(in);
}

}  // namespace empo2
