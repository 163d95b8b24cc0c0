#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "empo2/memory.hpp"
#include "empo2/random.hpp"
#include "oracles.hpp"

using namespace empo2;

namespace {

std::vector<double> unit(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

std::vector<double> basis(std::size_t i) {
  std::vector<double> v(kEmbedDim, 0.0);
  v[i] = 1.0;
  return v;
}

// Unit vector at a chosen cosine to basis(0).
std::vector<double> at_cosine(double c, std::size_t other = 1) {
  std::vector<double> v(kEmbedDim, 0.0);
  v[0] = c;
  v[other] = std::sqrt(1.0 - c * c);
  return v;
}

Tip tip(std::string content, std::vector<double> key, double score) {
  return Tip{std::move(content), std::move(key), score, 0};
}

std::vector<double> noisy_copy(Rng& rng, const std::vector<double>& base, double noise) {
  std::vector<double> v(base.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = base[i] + noise * rng.normal();
  return unit(v);
}

}  // namespace

TEST(Embed, BagOfTokens) {
  EXPECT_EQ(embed({"a", "b", "b", "c"}), embed({"b", "c", "b", "a"}));
  EXPECT_NE(embed({"a", "b"}), embed({"a", "b", "b"}));
  EXPECT_EQ(embed({}), basis(0));
  for (const Tokens& t : std::vector<Tokens>{{"x"}, {"hallway", "wire", "wire"}, {}})
    EXPECT_TRUE(is_unit(embed(t)));
}

TEST(Embed, DisjointBucketsAreOrthogonal) {
  // Pick token pairs whose buckets do not collide, checked independently of
  // the embedding itself.
  const Tokens left = {"wire", "battery", "hallway"};
  Tokens right;
  std::set<std::uint32_t> used;
  for (const auto& t : left) used.insert(embed_bucket(t));
  for (const char* cand : {"kitchen", "studio", "gem", "paint", "bowl", "cellar", "attic"}) {
    if (!used.count(embed_bucket(cand))) {
      right.push_back(cand);
      used.insert(embed_bucket(cand));
    }
    if (right.size() == 3) break;
  }
  ASSERT_EQ(right.size(), 3u);
  EXPECT_NEAR(cosine(embed(left), embed(right)), 0.0, 1e-15);
}

TEST(TipMemoryAdd, DeduplicatesByContent) {
  TipMemory m;
  EXPECT_TRUE(m.add(tip("a", basis(0), 1)));
  EXPECT_EQ(m.size(), 1u);
  EXPECT_FALSE(m.add(tip("a", basis(1), 50)));
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.entries().front().score, 1.0);
}

TEST(TipMemoryAdd, EvictsOldestAtCapacity) {
  TipMemory m;
  for (int i = 0; i < 1001; ++i) m.add(tip("tip " + std::to_string(i), basis(i % kEmbedDim), i));
  EXPECT_EQ(m.size(), 1000u);
  EXPECT_FALSE(m.contains("tip 0"));
  EXPECT_TRUE(m.contains("tip 1000"));
  EXPECT_EQ(m.content_index().size(), m.size());
  // The evicted content may be stored again.
  EXPECT_TRUE(m.add(tip("tip 0", basis(0), 0)));
}

TEST(TipMemoryAdd, RejectsBadKeys) {
  TipMemory m;
  EXPECT_THROW(m.add(tip("x", std::vector<double>(kEmbedDim, 1.0), 0)), InvalidArgument);
  EXPECT_THROW(m.add(tip("x", {1.0, 0.0}, 0)), InvalidArgument);
  EXPECT_EQ(m.size(), 0u);
}

TEST(TipMemoryRetrieve, OrdersByScore) {
  TipMemory m;
  m.add(tip("five", at_cosine(0.9, 1), 5));
  m.add(tip("ninety", at_cosine(0.8, 2), 90));
  m.add(tip("forty", at_cosine(0.7, 3), 40));
  const auto got = m.retrieve(basis(0));
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].score, 90);
  EXPECT_EQ(got[1].score, 40);
  EXPECT_EQ(got[2].score, 5);
}

TEST(TipMemoryRetrieve, ThresholdIsStrict) {
  TipMemory m;
  std::vector<double> half(kEmbedDim, 0.0);  // cosine exactly 0.5 with basis(0)
  half[0] = half[1] = half[2] = half[3] = 0.5;
  m.add(tip("at", half, 1));
  m.add(tip("below", at_cosine(0.3, 2), 1));
  m.add(tip("orthogonal", basis(5), 1));
  EXPECT_TRUE(m.retrieve(basis(0)).empty());
  m.add(tip("above", at_cosine(0.6, 3), 1));
  EXPECT_EQ(m.retrieve(basis(0)).size(), 1u);
}

TEST(TipMemoryRetrieve, KeepsTenBestWithSeqTieBreak) {
  TipMemory m;
  for (int i = 0; i < 25; ++i)
    m.add(tip("q" + std::to_string(i), at_cosine(0.9, 1 + i % 10), i % 5 == 0 ? 100 : i));
  const auto got = m.retrieve(basis(0));
  ASSERT_EQ(got.size(), 10u);
  // Five tips tie at 100; they come first, oldest first.
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(got[k].score, 100);
    EXPECT_EQ(got[k].seq, static_cast<std::uint64_t>(5 * k));
  }
  EXPECT_EQ(got[5].score, 24);
  EXPECT_EQ(got[9].score, 19);
}

TEST(TipMemoryRetrieve, AgreesWithOracleOnRandomBuffers) {
  Rng rng(2718);
  for (int buffer = 0; buffer < 1000; ++buffer) {
    TipMemory m(1 + rng.below(60));
    const auto query = noisy_copy(rng, basis(0), 0.3 + rng.uniform());
    const int adds = static_cast<int>(rng.below(90));
    for (int i = 0; i < adds; ++i) {
      const double noise = 0.05 + 0.4 * rng.uniform();
      // Few distinct scores so ties are common; some duplicate content.
      m.add(tip("c" + std::to_string(rng.below(70)), noisy_copy(rng, query, noise),
                static_cast<double>(static_cast<int>(rng.below(5)) * 25 - 50)));
    }
    const std::vector<Tip> all(m.entries().begin(), m.entries().end());
    ASSERT_EQ(m.retrieve(query), oracle::retrieve(all, query)) << "buffer " << buffer;
  }
}

TEST(TipMemoryRetrieve, OracleEdgeCases) {
  EXPECT_TRUE(oracle::retrieve({}, basis(0)).empty());
  const std::vector<Tip> one = {Tip{"only", at_cosine(0.9), 3, 7}};
  EXPECT_EQ(oracle::retrieve(one, basis(0)), one);
}

TEST(TipMemoryReset, ClearsAndRestartsSeq) {
  TipMemory m;
  m.add(tip("a", basis(0), 1));
  m.add(tip("b", basis(0), 1));
  m.reset();
  EXPECT_TRUE(m.retrieve(basis(0)).empty());
  m.add(tip("a", basis(0), 1));
  EXPECT_EQ(m.entries().front().seq, 0u);
}

TEST(TipMemoryFile, RoundTrip) {
  Rng rng(5);
  TipMemory m(4);
  for (int i = 0; i < 6; ++i)
    m.add(tip("missing milestones: none; last action: focus red bulb; score " + std::to_string(i),
              noisy_copy(rng, basis(2), 0.5), i * 1.5 - 3));
  std::stringstream ss;
  m.save(ss);
  const TipMemory back = TipMemory::load(ss);
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.content_index(), m.content_index());
  std::stringstream bad("empo2-tips 9\n");
  EXPECT_THROW(TipMemory::load(bad), FormatError);
}

TEST(Novelty, PseudoCountDecay) {
  NoveltyStore s;
  EXPECT_EQ(s.visit(basis(0)), 1.0);
  EXPECT_EQ(s.visit(basis(0)), 0.5);
  EXPECT_EQ(s.visit(basis(0)), 1.0 / 3.0);
  for (int n = 4; n <= 20; ++n) EXPECT_EQ(novelty_reward(s, basis(0)), 1.0 / n);
  EXPECT_EQ(s.entries().size(), 1u);
}

TEST(Novelty, DissimilarStatesCountSeparately) {
  NoveltyStore s(0.95);
  EXPECT_EQ(s.visit(basis(0)), 1.0);
  EXPECT_EQ(s.visit(at_cosine(0.9)), 1.0);
  EXPECT_EQ(s.entries().size(), 2u);
  // Within the threshold it joins the closest neighbourhood.
  EXPECT_EQ(s.visit(at_cosine(0.96, 2)), 0.5);
  EXPECT_EQ(s.entries()[0].count, 2u);
}

TEST(Novelty, TiesPickFirstEntry) {
  NoveltyStore s(0.5);
  s.visit(at_cosine(0.6, 1));
  s.visit(unit({0.6, 0.0, 0.8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}));
  ASSERT_EQ(s.entries().size(), 2u);
  EXPECT_EQ(s.visit(basis(0)), 0.5);
  EXPECT_EQ(s.entries()[0].count, 2u);
  EXPECT_EQ(s.entries()[1].count, 1u);
}

TEST(Novelty, ResetAndRoundTrip) {
  NoveltyStore s;
  s.visit(basis(0));
  s.visit(basis(0));
  s.visit(basis(3));
  std::stringstream ss;
  s.save(ss);
  EXPECT_EQ(NoveltyStore::load(ss), s);
  s.reset();
  EXPECT_EQ(s.visit(basis(0)), 1.0);
}
