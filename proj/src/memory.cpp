#include "empo2/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "empo2/hashing.hpp"

namespace empo2 {

std::uint32_t embed_bucket(std::string_view token) {
  return static_cast<std::uint32_t>(hash_text(token, kEmbedSalt) % kEmbedDim);
}

std::vector<double> embed(const Tokens& tokens) {
  std::vector<double> v(kEmbedDim, 0.0);
  if (tokens.empty()) {
    v[0] = 1.0;
    return v;
  }
  for (const auto& t : tokens) v[embed_bucket(t)] += 1.0;
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine: dimension mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

bool is_unit(std::span<const double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  return std::abs(std::sqrt(n) - 1.0) <= kUnitNormTolerance;
}

// ---------------------------------------------------------------------------

TipMemory::TipMemory(std::size_t capacity, std::size_t dim) : capacity_(capacity), dim_(dim) {
  if (capacity == 0) throw InvalidArgument("TipMemory: capacity must be positive");
  if (dim == 0) throw InvalidArgument("TipMemory: key dimension must be positive");
}

bool TipMemory::add(Tip tip) {
  if (tip.key.size() != dim_) throw InvalidArgument("TipMemory::add: key has wrong dimension");
  if (!is_unit(tip.key)) throw InvalidArgument("TipMemory::add: key is not unit norm");
  if (content_index_.count(tip.content)) return false;
  tip.seq = next_seq_++;
  content_index_.insert(tip.content);
  entries_.push_back(std::move(tip));
  while (entries_.size() > capacity_) {
    content_index_.erase(entries_.front().content);
    entries_.pop_front();
  }
  return true;
}

std::vector<Tip> TipMemory::retrieve(std::span<const double> key) const {
  if (key.size() != dim_) throw InvalidArgument("TipMemory::retrieve: key has wrong dimension");
  std::vector<const Tip*> hits;
  for (const auto& t : entries_)
    if (cosine(key, t.key) > kRetrievalThreshold) hits.push_back(&t);
  const std::size_t n = std::min(hits.size(), kMaxRetrievedTips);
  std::partial_sort(hits.begin(), hits.begin() + static_cast<long>(n), hits.end(),
                    [](const Tip* a, const Tip* b) {
                      if (a->score != b->score) return a->score > b->score;
                      return a->seq < b->seq;
                    });
  std::vector<Tip> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(*hits[i]);
  return out;
}

void TipMemory::reset() {
  entries_.clear();
  content_index_.clear();
  next_seq_ = 0;
}

void TipMemory::save(std::ostream& out) const {
  out << "empo2-tips 1\n";
  out << "dim " << dim_ << "\n";
  out << "capacity " << capacity_ << "\n";
  out << "next_seq " << next_seq_ << "\n";
  out << "count " << entries_.size() << "\n";
  for (const auto& t : entries_) {
    out << "tip " << t.seq << " " << format_double(t.score);
    for (double x : t.key) out << " " << format_double(x);
    out << " " << t.content << "\n";
  }
  out << "end\n";
}

namespace {

std::string next_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("tip snapshot truncated");
  return line;
}

std::uint64_t header_value(std::istream& in, std::string_view key) {
  Tokens t = split_ws(next_line(in));
  if (t.size() != 2 || t[0] != key) throw FormatError("tip snapshot: expected '" + std::string(key) + "'");
  try {
    return std::stoull(t[1]);
  } catch (const std::exception&) {
    throw FormatError("tip snapshot: bad value for '" + std::string(key) + "'");
  }
}

// Splits off the first whitespace-delimited field.
std::string_view take_field(std::string_view& rest) {
  std::size_t b = rest.find_first_not_of(' ');
  if (b == std::string_view::npos) throw FormatError("tip snapshot: record too short");
  rest.remove_prefix(b);
  std::size_t e = rest.find(' ');
  std::string_view f = rest.substr(0, e);
  rest.remove_prefix(e == std::string_view::npos ? rest.size() : e + 1);
  return f;
}

}  // namespace

TipMemory TipMemory::load(std::istream& in) {
  if (next_line(in) != "empo2-tips 1") throw FormatError("tip snapshot: bad header");
  const auto dim = header_value(in, "dim");
  const auto capacity = header_value(in, "capacity");
  const auto next_seq = header_value(in, "next_seq");
  const auto count = header_value(in, "count");
  if (dim == 0 || dim > 4096 || capacity == 0 || count > capacity)
    throw FormatError("tip snapshot: implausible header");
  TipMemory mem(capacity, dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string line = next_line(in);
    std::string_view rest(line);
    if (take_field(rest) != "tip") throw FormatError("tip snapshot: expected a tip record");
    Tip t;
    try {
      t.seq = std::stoull(std::string(take_field(rest)));
    } catch (const std::exception&) {
      throw FormatError("tip snapshot: bad seq");
    }
    t.score = parse_double(take_field(rest));
    t.key.resize(dim);
    for (double& x : t.key) x = parse_double(take_field(rest));
    t.content = std::string(rest);
    if (!is_unit(t.key)) throw FormatError("tip snapshot: key is not unit norm");
    if (!mem.entries_.empty() && t.seq <= mem.entries_.back().seq)
      throw FormatError("tip snapshot: seq not increasing");
    if (t.seq >= next_seq) throw FormatError("tip snapshot: seq beyond next_seq");
    if (!mem.content_index_.insert(t.content).second)
      throw FormatError("tip snapshot: duplicate content");
    mem.entries_.push_back(std::move(t));
  }
  mem.next_seq_ = next_seq;
  if (next_line(in) != "end") throw FormatError("tip snapshot: missing end marker");
  return mem;
}

void TipMemory::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  save(out);
}

TipMemory TipMemory::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open tip snapshot " + path.string());
  return load(in);
}

// ---------------------------------------------------------------------------

NoveltyStore::NoveltyStore(double threshold) : threshold_(threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw InvalidArgument("NoveltyStore: threshold must lie in (0, 1)");
}

double NoveltyStore::visit(std::span<const double> key) {
  if (!is_unit(key)) throw InvalidArgument("NoveltyStore::visit: key is not unit norm");
  std::size_t best = entries_.size();
  double best_sim = -2.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double s = cosine(key, entries_[i].key);
    if (s >= threshold_ && s > best_sim) {
      best = i;
      best_sim = s;
    }
  }
  if (best == entries_.size()) {
    entries_.push_back(Entry{std::vector<double>(key.begin(), key.end()), 1});
    return 1.0;
  }
  return 1.0 / static_cast<double>(++entries_[best].count);
}

double novelty_reward(NoveltyStore& store, std::span<const double> key) { return store.visit(key); }

void NoveltyStore::save(std::ostream& out) const {
  out << "empo2-novelty 1\n";
  out << "threshold " << format_double(threshold_) << "\n";
  out << "count " << entries_.size() << "\n";
  for (const auto& e : entries_) {
    out << "state " << e.count;
    for (double x : e.key) out << " " << format_double(x);
    out << "\n";
  }
  out << "end\n";
}

NoveltyStore NoveltyStore::load(std::istream& in) {
  if (next_line(in) != "empo2-novelty 1") throw FormatError("novelty snapshot: bad header");
  Tokens th = split_ws(next_line(in));
  if (th.size() != 2 || th[0] != "threshold") throw FormatError("novelty snapshot: expected threshold");
  NoveltyStore store(parse_double(th[1]));
  const auto count = header_value(in, "count");
  for (std::uint64_t i = 0; i < count; ++i) {
    Tokens t = split_ws(next_line(in));
    if (t.size() < 3 || t[0] != "state") throw FormatError("novelty snapshot: bad record");
    Entry e;
    e.count = std::stoull(t[1]);
    for (std::size_t k = 2; k < t.size(); ++k) e.key.push_back(parse_double(t[k]));
    if (e.count == 0) throw FormatError("novelty snapshot: zero count");
    store.entries_.push_back(std::move(e));
  }
  if (next_line(in) != "end") throw FormatError("novelty snapshot: missing end marker");
  return store;
}

}  // namespace empo2
