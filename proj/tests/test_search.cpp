#include <gtest/gtest.h>

#include <random>

#include "eaims/search.hpp"
#include "support/oracles.hpp"

using namespace eaims;

namespace {

void add(TextIndex& index, const std::string& id, Timestamp ts, const std::string& text,
         double cred = 0.5) {
  index.add(id, ts, cred, text::tokenize(text));
}

}  // namespace

TEST(TextIndex, CorpusStatistics) {
  TextIndex index;
  add(index, "a", 1, "the bridge is down");
  EXPECT_EQ(index.document_count(), 1u);
  add(index, "b", 2, "the bridge is down");
  EXPECT_EQ(index.document_frequency("bridge"), 2u);
  EXPECT_EQ(index.document_frequency("the"), 2u);  // stopwords are indexed
  add(index, "c", 3, "help help help");
  EXPECT_EQ(index.total_length(), 11u);
  EXPECT_DOUBLE_EQ(index.average_length(), 11.0 / 3.0);
}

TEST(TextIndex, BasicQueries) {
  TextIndex index;
  EXPECT_TRUE(index.search("bridge", 10).empty());
  add(index, "a", 1, "bridge collapsed in amatrice");
  EXPECT_TRUE(index.search("norcia", 10).empty());
  EXPECT_TRUE(index.search("", 10).empty());
  EXPECT_TRUE(index.search("?!", 10).empty());
  const auto r = index.search("bridge", 10);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].post_id, "a");
  EXPECT_GT(r[0].relevance, 0.0);
}

TEST(TextIndex, KnownScore) {
  TextIndex index;
  add(index, "a", 1, "quake quake roma");
  add(index, "b", 2, "roma");
  // N=2; quake df=1; dl=3, avgdl=2.
  const double idf = std::log(1.0 + (2.0 - 1.0 + 0.5) / (1.0 + 0.5));
  const double tfw = 2.0 * 2.2 / (2.0 + 1.2 * (0.25 + 0.75 * 3.0 / 2.0));
  const auto r = index.search("quake", 5);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r[0].relevance, idf * tfw, 1e-12);
}

TEST(TextIndex, TieRuleNewerThenId) {
  TextIndex index;
  add(index, "b", 5, "flood");
  add(index, "a", 5, "flood");
  add(index, "c", 9, "flood");
  const auto r = index.search("flood", 10);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].post_id, "c");
  EXPECT_EQ(r[1].post_id, "a");
  EXPECT_EQ(r[2].post_id, "b");
}

TEST(TextIndex, CredibilityAnnotatesButDoesNotRank) {
  TextIndex plain;
  TextIndex weighted(Bm25Params{}, true);
  for (auto* index : {&plain, &weighted}) {
    add(*index, "x", 1, "shelter open at school", 0.1);
    add(*index, "y", 2, "shelter open at school", 0.9);
    add(*index, "z", 3, "shelter shelter open", 0.2);
  }
  const auto p = plain.search("shelter", 3);
  EXPECT_EQ(p[0].post_id, "z");
  EXPECT_EQ(p[1].post_id, "y");
  EXPECT_DOUBLE_EQ(p[1].credibility, 0.9);
  const auto w = weighted.search("shelter", 3);
  EXPECT_EQ(w[0].post_id, "y");
}

TEST(TextIndex, RetrievableByRarestTermImmediately) {
  std::mt19937_64 rng(4);
  TextIndex index;
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> tokens;
    for (int k = 0; k < 6; ++k) tokens.push_back("w" + std::to_string(rng() % 40));
    tokens.push_back("uniq" + std::to_string(i));
    index.add("p" + std::to_string(i), i + 1, 0.5, tokens);
    const auto r = index.search("uniq" + std::to_string(i), 1);
    ASSERT_EQ(r.size(), 1u);
    ASSERT_EQ(r[0].post_id, "p" + std::to_string(i));
  }
}

TEST(TextIndex, MatchesBruteForceOracle) {
  std::mt19937_64 rng(123);
  for (int round = 0; round < 30; ++round) {
    TextIndex index;
    std::vector<oracle::BruteDoc> docs;
    const auto n = 1 + rng() % 200;
    for (std::size_t i = 0; i < n; ++i) {
      std::string t;
      for (int k = 0, len = static_cast<int>(rng() % 12); k < len; ++k) {
        t += "t" + std::to_string(rng() % 30) + " ";
      }
      const Timestamp ts = 1 + static_cast<Timestamp>(rng() % 50);
      add(index, "d" + std::to_string(i), ts, t);
      docs.push_back(oracle::BruteDoc{"d" + std::to_string(i), ts, text::tokenize(t)});
    }
    std::string q;
    for (int k = 0, len = 1 + static_cast<int>(rng() % 4); k < len; ++k) {
      q += "t" + std::to_string(rng() % 35) + " ";
    }
    const auto got = index.search(q, 15);
    const auto want = oracle::brute_bm25(docs, q, 15);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_EQ(got[i].post_id, want[i].id);
      ASSERT_NEAR(got[i].relevance, want[i].score, 1e-9);
    }
  }
}
