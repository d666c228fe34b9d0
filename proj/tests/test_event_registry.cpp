#include <gtest/gtest.h>

#include <random>
#include <set>
#include <thread>

#include "eaims/error.hpp"
#include "eaims/event_registry.hpp"

using namespace eaims;

namespace {

std::shared_ptr<const SensorResources> resources() {
  auto r = std::make_shared<SensorResources>();
  r->enricher.gazetteer.add("amatrice", "Amatrice", EntityKind::place);
  r->enricher.lexicon.add("help", 0.4);
  r->enricher.lexicon.add("disaster", -0.9);
  return r;
}

Post make(std::string id, Timestamp ts, std::string text,
          std::optional<std::string> reply_to = std::nullopt, std::string author = "u") {
  Post p;
  p.id = std::move(id);
  p.author = std::move(author);
  p.timestamp = ts;
  p.text = std::move(text);
  p.reply_to = std::move(reply_to);
  return p;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::invalid_argument;
}

using Terms = std::vector<std::string>;

}  // namespace

TEST(Registry, CreateEvent) {
  EventRegistry reg(resources());
  const auto e = reg.create_event("Central Italy Earthquake",
                                  Terms{"terremoto", "Earthquake", "amatrice", "terremoto"}, 1000);
  EXPECT_EQ(e.status, EventStatus::active);
  EXPECT_EQ(e.tracking_terms, (Terms{"terremoto", "earthquake", "amatrice"}));
  EXPECT_EQ(e.created_at, 1000);
  EXPECT_EQ(reg.get(e.id)->sensors.post_count(), 0u);

  EXPECT_EQ(code_of([&] { reg.create_event("x", Terms{}, 1); }), ErrorCode::empty_terms);
  EXPECT_EQ(code_of([&] { reg.create_event("x", Terms{" ", ""}, 1); }), ErrorCode::empty_terms);

  const auto f = reg.create_event("Other", Terms{"flood"}, 2);
  EXPECT_NE(e.id, f.id);
  EXPECT_EQ(reg.size(), 2u);
}

TEST(Registry, RouteExamples) {
  EventRegistry reg(resources());
  EXPECT_TRUE(reg.route(make("p0", 1, "terremoto ad Amatrice")).empty());
  const auto e = reg.create_event("Central Italy Earthquake",
                                  Terms{"terremoto", "earthquake", "amatrice"}, 1);
  EXPECT_EQ(reg.route(make("p1", 2, "terremoto ad Amatrice")), std::vector<std::string>{e.id});
  // Both terms match: delivered once.
  EXPECT_EQ(reg.get(e.id)->sensors.post_count(), 1u);
  EXPECT_TRUE(reg.route(make("p2", 3, "sunny day")).empty());
}

TEST(Registry, RouteMatchesBruteForceProperty) {
  std::mt19937_64 rng(6);
  const Terms vocab = {"quake", "flood", "fire", "roma", "norcia", "help", "x", "y"};
  EventRegistry reg(resources());
  std::vector<EventConfig> events;
  for (int i = 0; i < 3; ++i) {
    Terms terms;
    for (int k = 0, n = 1 + static_cast<int>(rng() % 3); k < n; ++k) terms.push_back(vocab[rng() % vocab.size()]);
    events.push_back(reg.create_event("e" + std::to_string(i), terms, 1));
  }
  std::map<std::string, std::vector<std::string>> delivered;
  for (int i = 0; i < 2000; ++i) {
    std::string t;
    for (int k = 0, n = static_cast<int>(rng() % 5); k < n; ++k) t += vocab[rng() % vocab.size()] + ", ";
    const auto post = make("p" + std::to_string(i), i + 1, t);
    std::vector<std::string> expected;
    const auto tokens = text::tokenize(t);
    for (const auto& e : events) {
      bool hit = false;
      for (const auto& term : e.tracking_terms) {
        hit = hit || std::find(tokens.begin(), tokens.end(), term) != tokens.end();
      }
      if (hit) {
        expected.push_back(e.id);
        delivered[e.id].push_back(post.id);
      }
    }
    ASSERT_EQ(reg.route(post), expected);
  }
  // Per-event order equals acceptance order restricted to the event.
  for (const auto& e : events) {
    std::vector<std::string> ids;
    for (const auto& p : reg.get(e.id)->sensors.posts()) ids.push_back(p.id);
    EXPECT_EQ(ids, delivered[e.id]);
  }
}

TEST(Registry, ArchiveStopsRoutingAndFreezesQueries) {
  EventRegistry reg(resources());
  const auto e = reg.create_event("Quake", Terms{"quake"}, 1);
  reg.route(make("a", 10, "quake help in amatrice", std::nullopt, "u1"));
  reg.route(make("b", 20, "quake disaster amatrice", "a", "u2"));
  auto& s = reg.get(e.id)->sensors;
  const auto search_before = s.search("quake amatrice", 10);
  const auto threads_before = s.top_threads(10, 100);
  const auto infl_before = s.influencers(10);

  const auto archived = reg.archive_event(e.id, 50);
  EXPECT_EQ(archived.status, EventStatus::archived);
  EXPECT_EQ(archived.archived_at, 50);
  EXPECT_TRUE(reg.route(make("c", 30, "quake again", "a")).empty());
  EXPECT_EQ(s.post_count(), 2u);

  const auto search_after = s.search("quake amatrice", 10);
  ASSERT_EQ(search_after.size(), search_before.size());
  for (std::size_t i = 0; i < search_after.size(); ++i) {
    EXPECT_EQ(search_after[i].result.post_id, search_before[i].result.post_id);
    EXPECT_EQ(search_after[i].result.relevance, search_before[i].result.relevance);
  }
  EXPECT_EQ(s.top_threads(10, 100)[0].member_ids, threads_before[0].member_ids);
  EXPECT_EQ(s.influencers(10)[0].author_id, infl_before[0].author_id);

  EXPECT_EQ(code_of([&] { reg.archive_event(e.id); }), ErrorCode::already_archived);
  EXPECT_EQ(code_of([&] { reg.archive_event("evt-999"); }), ErrorCode::unknown_event);
  EXPECT_EQ(code_of([&] { reg.get("evt-999"); }), ErrorCode::unknown_event);
}

TEST(Registry, NewEventsSeeOnlyLaterPosts) {
  EventRegistry reg(resources());
  const auto a = reg.create_event("A", Terms{"quake"}, 1);
  reg.route(make("p1", 1, "quake one"));
  const auto b = reg.create_event("B", Terms{"quake"}, 2);
  reg.route(make("p2", 2, "quake two"));
  EXPECT_EQ(reg.get(a.id)->sensors.post_count(), 2u);
  EXPECT_EQ(reg.get(b.id)->sensors.post_count(), 1u);
}

TEST(Sensors, ThreadStatsRows) {
  EventRegistry reg(resources());
  const auto e = reg.create_event("Quake", Terms{"quake"}, 1);
  reg.route(make("C", 30, "quake c", "B"));
  reg.route(make("A", 10, "quake a"));
  reg.route(make("B", 20, "quake b", "A"));
  reg.route(make("L", 40, "quake lone"));
  auto& s = reg.get(e.id)->sensors;
  const auto rows = s.thread_stats("A");
  ASSERT_EQ(rows.size(), s.thread_of("A").size);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].post_id, "A");
  EXPECT_EQ(rows[1].post_id, "B");
  EXPECT_EQ(rows[2].post_id, "C");
  EXPECT_EQ(rows[2].link, "B");
  ASSERT_TRUE(rows[0].credibility);
  EXPECT_GT(*rows[0].credibility, 0.0);
  EXPECT_EQ(s.thread_stats("L").size(), 1u);
  EXPECT_EQ(code_of([&] { s.thread_stats("nope"); }), ErrorCode::unknown_post);
}

TEST(Sensors, PlaceholderRowsComeFirst) {
  EventRegistry reg(resources());
  const auto e = reg.create_event("Quake", Terms{"quake"}, 1);
  reg.route(make("B", 20, "quake b", "GONE"));
  const auto rows = reg.get(e.id)->sensors.thread_stats("B");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].post_id, "GONE");
  EXPECT_FALSE(rows[0].author);
  EXPECT_FALSE(rows[0].timestamp);
}

TEST(Sensors, SentimentSeriesUsesEnrichment) {
  EventRegistry reg(resources());
  const auto e = reg.create_event("Quake", Terms{"quake"}, 1);
  const Timestamp hour = 3'600'000;
  reg.route(make("a", 10, "quake help amatrice"));
  reg.route(make("b", 20, "quake disaster amatrice"));
  reg.route(make("c", 30, "quake amatrice"));
  reg.route(make("d", hour + 5, "quake elsewhere"));
  const auto series = reg.get(e.id)->sensors.sentiment_series("Amatrice", hour);
  ASSERT_EQ(series.size(), 1u);
  EXPECT_EQ(series[0].mention_count, 3u);
  EXPECT_EQ(series[0].signal_count, 2u);
  EXPECT_NEAR(series[0].mean_polarity, (0.4 - 0.9) / 2, 1e-12);
}

TEST(Sensors, ConcurrentReadsSeeWholeUpdates) {
  EventRegistry reg(resources());
  const auto e = reg.create_event("Quake", Terms{"quake"}, 1);
  auto event = reg.get(e.id);
  std::atomic<bool> done{false};
  std::atomic<std::size_t> checks{0};
  std::thread reader([&] {
    while (!done) {
      const auto n = event->sensors.post_count();
      const auto top = event->sensors.top_threads(1, 1'000'000);
      if (!top.empty()) {
        // One growing chain: its size can never be far behind or ahead.
        EXPECT_GE(top[0].size, n);
        EXPECT_EQ(top[0].size, top[0].member_ids.size());
      }
      const auto hits = event->sensors.search("quake", 5);
      for (const auto& h : hits) EXPECT_EQ(h.post.id, h.result.post_id);
      ++checks;
    }
  });
  reg.route(make("p0", 1, "quake 0"));
  for (int i = 1; i < 3000; ++i) {
    reg.route(make("p" + std::to_string(i), i + 1, "quake " + std::to_string(i),
                   "p" + std::to_string(i - 1)));
  }
  done = true;
  reader.join();
  EXPECT_GT(checks.load(), 0u);
  EXPECT_EQ(event->sensors.thread_of("p0").size, 3000u);
}
