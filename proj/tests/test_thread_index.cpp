#include <gtest/gtest.h>

#include <set>

#include "eaims/error.hpp"
#include "eaims/thread_index.hpp"
#include "support/oracles.hpp"

using namespace eaims;

namespace {

using Link = std::optional<std::string>;

template <typename Backend>
class ThreadIndexTest : public ::testing::Test {
 protected:
  ThreadIndex<Backend> index;
  void add(const std::string& id, Link link = std::nullopt, Timestamp ts = 1000) {
    index.observe(id, ts, link);
  }
  std::set<std::string> members(const std::string& id) {
    const auto list = index.posting_list(id);
    return {list.begin(), list.end()};
  }
};

struct SmallHybrid : HybridBackend {
  SmallHybrid() : HybridBackend(3) {}
};

using Backends = ::testing::Types<KCopiesBackend, CompactedBackend, HybridBackend, SmallHybrid>;
TYPED_TEST_SUITE(ThreadIndexTest, Backends);

std::set<std::string> S(std::initializer_list<std::string> ids) { return ids; }

}  // namespace

TYPED_TEST(ThreadIndexTest, BaseCase) {
  this->add("A");
  EXPECT_EQ(this->members("A"), S({"A"}));
  const auto t = this->index.thread_of("A");
  EXPECT_EQ(t.root_id, "A");
  EXPECT_EQ(t.size, 1u);
}

TYPED_TEST(ThreadIndexTest, Chain) {
  this->add("A");
  this->add("B", "A");
  const auto update = this->index.observe("C", 1000, std::string("B"));
  EXPECT_EQ(update.root_id, "A");
  EXPECT_EQ(update.size, 3u);
  for (const char* id : {"A", "B", "C"}) EXPECT_EQ(this->members(id), S({"A", "B", "C"}));
  const auto t = this->index.thread_of("B");
  EXPECT_EQ(t.root_id, "A");
  EXPECT_EQ(std::set<std::string>(t.member_ids.begin(), t.member_ids.end()), S({"A", "B", "C"}));
}

TYPED_TEST(ThreadIndexTest, Branching) {
  this->add("A");
  this->add("B", "A");
  this->add("C", "A");
  this->add("D", "B");
  for (const char* id : {"A", "B", "C", "D"}) {
    EXPECT_EQ(this->members(id), S({"A", "B", "C", "D"}));
  }
  EXPECT_EQ(this->index.thread_count(), 1u);
}

TYPED_TEST(ThreadIndexTest, UnknownPost) {
  this->add("X");
  try {
    this->index.thread_of("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_post);
  }
}

TYPED_TEST(ThreadIndexTest, OrphanThenTargetArrives) {
  this->add("B", "A", 2000);  // A unseen: placeholder
  EXPECT_EQ(this->members("A"), S({"A", "B"}));
  EXPECT_EQ(this->index.thread_of("B").root_id, "A");
  EXPECT_EQ(this->index.thread_of("B").last_activity, Timestamp{2000});
  this->add("A", std::nullopt, 1000);
  EXPECT_EQ(this->members("B"), S({"A", "B"}));
  EXPECT_EQ(this->index.thread_of("A").last_activity, 2000);
}

TYPED_TEST(ThreadIndexTest, OrphanTargetArrivesWithOwnLinkMerges) {
  this->add("R");
  this->add("S", "R");
  this->add("B", "A");              // placeholder A
  this->add("C", "B");
  this->add("A", std::string("S"));  // A arrives, linking into R's thread
  for (const char* id : {"R", "S", "A", "B", "C"}) {
    EXPECT_EQ(this->members(id), S({"R", "S", "A", "B", "C"}));
  }
  EXPECT_EQ(this->index.thread_count(), 1u);
  EXPECT_EQ(this->index.thread_of("C").root_id, "R");
}

TYPED_TEST(ThreadIndexTest, ReplyWinsOverRepost) {
  this->add("A");
  this->add("Z");
  Post p;
  p.id = "B";
  p.author = "u";
  p.timestamp = 5;
  p.reply_to = "A";
  p.repost_of = "Z";
  this->index.observe(p);
  EXPECT_EQ(this->members("B"), S({"A", "B"}));
  EXPECT_EQ(this->members("Z"), S({"Z"}));
}

TYPED_TEST(ThreadIndexTest, TopThreadsExamples) {
  const Timestamp now = 100'000'000;
  this->add("a1", std::nullopt, now);
  this->add("a2", "a1", now);
  this->add("a3", "a1", now);
  this->add("b1", std::nullopt, now);
  auto top = this->index.top_threads(10, now);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].root_id, "a1");
  EXPECT_DOUBLE_EQ(top[0].activity_score, 3.0);
  EXPECT_EQ(top[1].root_id, "b1");
  EXPECT_DOUBLE_EQ(top[1].activity_score, 1.0);
  EXPECT_EQ(this->index.top_threads(1, now).size(), 1u);
}

TYPED_TEST(ThreadIndexTest, TopThreadsDecay) {
  const double h = kDefaultHalfLifeMs;
  const Timestamp now = 1'000'000'000;
  const Timestamp old = now - static_cast<Timestamp>(2 * h);
  this->add("old1", std::nullopt, old);
  this->add("old2", "old1", old);
  this->add("old3", "old1", old);
  this->add("new1", std::nullopt, now);
  this->add("new2", "new1", now);
  const auto top = this->index.top_threads(5, now, h);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].root_id, "new1");
  EXPECT_DOUBLE_EQ(top[0].activity_score, 2.0);
  EXPECT_EQ(top[1].root_id, "old1");
  EXPECT_DOUBLE_EQ(top[1].activity_score, 3 * 0.25);
}

TYPED_TEST(ThreadIndexTest, TopThreadsTieBreaks) {
  const Timestamp now = 10'000;
  // Equal score, different size: placeholders count toward size only.
  this->add("m", std::nullopt, now);
  this->add("k2", "k1", now);  // k1 placeholder: score 1, size 2
  this->add("z", std::nullopt, now);
  const auto top = this->index.top_threads(3, now);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].root_id, "k1");
  EXPECT_EQ(top[1].root_id, "m");
  EXPECT_EQ(top[2].root_id, "z");
}

TYPED_TEST(ThreadIndexTest, OracleAndMonotonicityProperty) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ThreadIndex<TypeParam> index;
    oracle::ThreadOracle truth;
    std::unordered_map<std::string, std::size_t> last_size;
    const auto stream = oracle::random_reply_stream(1500, 0.6, 0.1, seed);
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const auto& p = stream[i];
      index.observe(p.id, p.ts, p.link);
      truth.observe(p.id, p.link);
      if (i % 300 == 299 || i + 1 == stream.size()) {
        const auto expected = truth.all_members();
        for (const auto& id : truth.ids()) {
          const auto list = index.posting_list(id);
          const std::set<std::string> got(list.begin(), list.end());
          ASSERT_EQ(got.size(), list.size()) << "duplicate in posting list of " << id;
          ASSERT_EQ(got, expected.at(id)) << "seed " << seed << " post " << id;
          auto& prev = last_size[id];
          ASSERT_GE(list.size(), prev);
          prev = list.size();
          const auto t = index.thread_of(id);
          ASSERT_EQ(t.size, t.member_ids.size());
          ASSERT_NE(std::find(t.member_ids.begin(), t.member_ids.end(), t.root_id),
                    t.member_ids.end());
        }
      }
    }
  }
}

TEST(ThreadIndexBackends, AgreeOnEveryPost) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    ThreadIndex<KCopiesBackend> k;
    ThreadIndex<CompactedBackend> c;
    ThreadIndex<HybridBackend> h(HybridBackend(8));
    for (const auto& p : oracle::random_reply_stream(2000, 0.6, 0.1, seed)) {
      k.observe(p.id, p.ts, p.link);
      c.observe(p.id, p.ts, p.link);
      h.observe(p.id, p.ts, p.link);
    }
    for (const auto& p : oracle::random_reply_stream(2000, 0.6, 0.1, seed)) {
      const auto a = k.thread_of(p.id, Timestamp{3'000'000});
      const auto b = c.thread_of(p.id, Timestamp{3'000'000});
      const auto d = h.thread_of(p.id, Timestamp{3'000'000});
      ASSERT_EQ(a.root_id, b.root_id);
      ASSERT_EQ(a.member_ids, b.member_ids);
      ASSERT_EQ(a.member_ids, d.member_ids);
      ASSERT_EQ(a.last_activity, b.last_activity);
      ASSERT_DOUBLE_EQ(a.activity_score, b.activity_score);
    }
    const auto ta = k.top_threads(20, 3'000'000);
    const auto tb = c.top_threads(20, 3'000'000);
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(ta[i].root_id, tb[i].root_id);
  }
}

TEST(ThreadIndexBackends, CompactedStoresOneListPerThread) {
  ThreadIndex<KCopiesBackend> k;
  ThreadIndex<CompactedBackend> c;
  k.observe("r", 1, std::nullopt);
  c.observe("r", 1, std::nullopt);
  for (int i = 0; i < 100; ++i) {
    const Link link = "r";
    k.observe("p" + std::to_string(i), 2, link);
    c.observe("p" + std::to_string(i), 2, link);
  }
  EXPECT_EQ(k.backend().stored_entries(), 101u * 101u);
  EXPECT_EQ(c.backend().stored_entries(), 101u);
}

TEST(ThreadIndexBackends, HybridSharesAboveThreshold) {
  ThreadIndex<HybridBackend> h(HybridBackend(64));
  h.observe("r", 1, std::nullopt);
  for (int i = 0; i < 63; ++i) h.observe("p" + std::to_string(i), 2, Link("r"));
  EXPECT_EQ(h.backend().stored_entries(), 64u * 64u);
  h.observe("p63", 2, Link("r"));
  EXPECT_EQ(h.backend().stored_entries(), 65u);
  EXPECT_EQ(h.thread_of("p0").size, 65u);
}

TEST(ThreadIndexCounters, SingleOperationRetrieval) {
  for (std::size_t length : {1u, 10u, 1000u}) {
    ThreadIndex<KCopiesBackend> k;
    ThreadIndex<CompactedBackend> c;
    k.observe("t0", 1, std::nullopt);
    c.observe("t0", 1, std::nullopt);
    for (std::size_t i = 1; i < length; ++i) {
      const Link link = "t" + std::to_string(i - 1);
      k.observe("t" + std::to_string(i), 1 + static_cast<Timestamp>(i), link);
      c.observe("t" + std::to_string(i), 1 + static_cast<Timestamp>(i), link);
    }
    k.reset_counters();
    c.reset_counters();
    for (std::size_t i = 0; i < length; i += std::max<std::size_t>(1, length / 10)) {
      k.thread_of("t" + std::to_string(i));
      c.thread_of("t" + std::to_string(i));
      ASSERT_EQ(k.counters().lexicon_lookups.load(), k.counters().posting_list_reads.load());
    }
    const auto calls = (length + std::max<std::size_t>(1, length / 10) - 1) /
                       std::max<std::size_t>(1, length / 10);
    EXPECT_EQ(k.counters().lexicon_lookups.load(), calls);
    EXPECT_EQ(k.counters().posting_list_reads.load(), calls);
    EXPECT_EQ(c.counters().lexicon_lookups.load(), calls);
    EXPECT_EQ(c.counters().posting_list_reads.load(), calls);
    EXPECT_EQ(k.thread_of("t0").size, length);
  }
}
