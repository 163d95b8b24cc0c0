#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "empo2/env.hpp"
#include "empo2/hashing.hpp"
#include "empo2/random.hpp"
#include "empo2/tip.hpp"

namespace empo2 {

// Hashed feature space shared by featurization and parameters.
struct FeatureSpace {
  std::size_t base_dim = 512;
  std::size_t tip_dim = 512;
  std::uint64_t salt = kDefaultFeatureSalt;

  bool operator==(const FeatureSpace&) const = default;
};

// Sorted by index, indices unique, values in [0, 1].
using SparseFeatures = std::vector<std::pair<std::uint32_t, double>>;

// Per-action features for one decision point.
struct ContextFeatures {
  std::vector<SparseFeatures> base;  // phi(s, u, a)
  std::vector<SparseFeatures> tip;   // psi(tips, a); all empty when !tip_present
  bool tip_present = false;

  std::size_t action_count() const { return base.size(); }
  ContextFeatures without_tips() const;
};

// Deterministic featurization.
//
// Base block: one binary feature per (context token, action token) pair and
// per (context token, whole action phrase) pair, where context tokens are the
// observation tokens, the task description and a bias token.
//
// Tip block, averaged over the retrieved tips. The five plain relations own
// slots 0-4; the verb-keyed relations and token features hash into the rest.
//   rel/miss       action phrase is listed among the tip's missing milestones
//   rel/last-neg   action phrase equals the tip's last action and score < 0
//   rel/last-zero  ... score == 0
//   rel/last-pos   ... score > 0
//   rel/next       action phrase is the first missing milestone
//   each relation again keyed by the action verb (first token)
//   token/<x>      action token x occurs anywhere in the tip content
// Bucket collisions are summed and clamped to 1.
ContextFeatures featurize(const FeatureSpace& space, const Observation& obs,
                          const TaskSpec& task,
                          std::span<const AdmissibleAction> actions,
                          std::span<const Tip> tips);

// Bucket helpers, exposed so tests can recompute indices independently.
std::uint32_t base_bucket(const FeatureSpace& space, std::string_view context_token,
                          std::string_view action_part);
std::uint32_t tip_relation_bucket(const FeatureSpace& space, std::string_view relation);
std::uint32_t tip_relation_verb_bucket(const FeatureSpace& space, std::string_view relation,
                                       std::string_view verb);
std::uint32_t tip_token_bucket(const FeatureSpace& space, std::string_view action_token);

struct PolicyParams {
  FeatureSpace space;
  std::vector<double> w;  // base weights, size space.base_dim
  std::vector<double> v;  // tip weights, size space.tip_dim
  std::uint64_t version = 0;

  static PolicyParams zeros(const FeatureSpace& space);
  bool operator==(const PolicyParams&) const = default;
};

// Initial tip-channel weight: +strength on rel/next only. Leaves the base
// block untouched, so the policy without tips is unchanged.
void apply_tip_prior(PolicyParams& params, double strength);

struct Gradient {
  std::vector<double> w;
  std::vector<double> v;

  static Gradient zeros(const FeatureSpace& space);
  double norm() const;
  bool finite() const;
};

// score(a) = w . phi(a) + v . psi(a)
std::vector<double> action_scores(const PolicyParams& params, const ContextFeatures& ctx);
std::vector<double> log_probs(const PolicyParams& params, const ContextFeatures& ctx);
double logprob(const PolicyParams& params, const ContextFeatures& ctx, ActionId a);

struct SampledAction {
  ActionId action;
  double logprob = 0.0;
};
SampledAction sample_action(const PolicyParams& params, const ContextFeatures& ctx, Rng& rng);
// Highest score, ties broken by lowest id.
ActionId greedy_action(const PolicyParams& params, const ContextFeatures& ctx);

Gradient grad_logprob(const PolicyParams& params, const ContextFeatures& ctx, ActionId a);
// out += coef * grad log pi(a)
void accumulate_grad_logprob(const PolicyParams& params, const ContextFeatures& ctx,
                             ActionId a, double coef, Gradient& out);

double entropy(const PolicyParams& params, const ContextFeatures& ctx);
// Exact KL(pi_params || pi_ref) over the admissible actions.
double kl_to_ref(const PolicyParams& params, const PolicyParams& ref, const ContextFeatures& ctx);
// out += coef * grad_params KL(pi_params || pi_ref)
void accumulate_grad_kl(const PolicyParams& params, const PolicyParams& ref,
                        const ContextFeatures& ctx, double coef, Gradient& out);

double log_sum_exp(std::span<const double> xs);

// Checkpoint format "empo2-policy 1"; see docs/formats.md.
void save_policy(const PolicyParams& params, std::ostream& out);
PolicyParams load_policy(std::istream& in);
void save_policy(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace empo2
