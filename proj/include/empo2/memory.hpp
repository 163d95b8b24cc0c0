#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "empo2/common.hpp"
#include "empo2/tip.hpp"

namespace empo2 {

inline constexpr std::size_t kEmbedDim = 64;
inline constexpr std::size_t kTipCapacity = 1000;
inline constexpr std::size_t kMaxRetrievedTips = 10;
inline constexpr double kRetrievalThreshold = 0.5;
inline constexpr double kUnitNormTolerance = 1e-9;

// Bag-of-tokens embedding: token counts hashed into kEmbedDim buckets, then
// L2-normalized. The empty list maps to the first basis vector.
std::vector<double> embed(const Tokens& tokens);
std::uint32_t embed_bucket(std::string_view token);

double cosine(std::span<const double> a, std::span<const double> b);
bool is_unit(std::span<const double> v);

// Capacity-bounded tip buffer with content de-duplication and FIFO eviction.
class TipMemory {
 public:
  explicit TipMemory(std::size_t capacity = kTipCapacity, std::size_t dim = kEmbedDim);

  // Returns false (and changes nothing) when the content is already stored.
  // Throws InvalidArgument if the key is not unit norm or has the wrong size.
  bool add(Tip tip);
  // Tips with cosine > 0.5 to `key`, best score first, ties by older seq,
  // at most 10.
  std::vector<Tip> retrieve(std::span<const double> key) const;
  void reset();

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t next_seq() const { return next_seq_; }
  const std::deque<Tip>& entries() const { return entries_; }
  bool contains(const std::string& content) const { return content_index_.count(content) > 0; }
  const std::unordered_set<std::string>& content_index() const { return content_index_; }

  // Snapshot format "empo2-tips 1"; see docs/formats.md.
  void save(std::ostream& out) const;
  static TipMemory load(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static TipMemory load(const std::filesystem::path& path);

  bool operator==(const TipMemory& other) const {
    return capacity_ == other.capacity_ && dim_ == other.dim_ &&
           next_seq_ == other.next_seq_ && entries_ == other.entries_;
  }

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::uint64_t next_seq_ = 0;
  std::deque<Tip> entries_;
  std::unordered_set<std::string> content_index_;
};

// Tip buffers keyed by buffer name (one per task family in training).
using MemoryBank = std::map<std::string, TipMemory>;

// Pseudo-count store behind the intrinsic reward.
class NoveltyStore {
 public:
  struct Entry {
    std::vector<double> key;
    std::uint64_t count = 1;

    bool operator==(const Entry&) const = default;
  };

  explicit NoveltyStore(double threshold = 0.95);

  // Counts a visit and returns 1/count for the matched neighbourhood. A key
  // with no stored state at cosine >= threshold starts a new entry (reward 1).
  double visit(std::span<const double> key);
  void reset() { entries_.clear(); }

  double threshold() const { return threshold_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void save(std::ostream& out) const;
  static NoveltyStore load(std::istream& in);

  bool operator==(const NoveltyStore&) const = default;

 private:
  double threshold_;
  std::vector<Entry> entries_;
};

double novelty_reward(NoveltyStore& store, std::span<const double> key);

}  // namespace empo2
