#include <gtest/gtest.h>

#include <random>

#include "lactr/social.hpp"

using namespace lactr;

TEST(FollowerGraph, RejectsSelfLoopsAndUnknownUsers) {
  FollowerGraph g(3);
  EXPECT_THROW(g.add_edge(1, 1), InputError);
  EXPECT_THROW(g.add_edge(0, 3), InputError);
  g.add_edge(0, 2);
  g.add_edge(0, 2);
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_TRUE(g.follows(0, 2));
  EXPECT_FALSE(g.follows(2, 0));
}

TEST(FollowerGraph, InducedSubgraphRenumbers) {
  FollowerGraph g(4);
  g.add_edge(0, 3);
  g.add_edge(3, 1);
  g.add_edge(2, 0);
  const std::vector<UserId> kept = {0, 3};
  const auto sub = g.induced(kept);
  EXPECT_EQ(sub.size(), 2u);
  EXPECT_TRUE(sub.follows(0, 1));
  EXPECT_EQ(sub.num_edges(), 1u);
}

TEST(AttentionEdges, NoSamplingGivesFolloweesAndSelf) {
  FollowerGraph g(6);
  g.add_edge(0, 2);
  g.add_edge(0, 5);
  const auto edges = build_attention_edges(g, 0, 1);
  const auto t = edges.targets(0);
  EXPECT_EQ(std::vector<UserId>(t.begin(), t.end()), (std::vector<UserId>{0, 2, 5}));
  for (EdgeId e = edges.begin(0); e < edges.end(0); ++e) EXPECT_EQ(edges.confidence(e), 1.0);
  EXPECT_EQ(edges.targets(3).size(), 1u);
  EXPECT_EQ(edges.target(edges.self_edge(3)), 3u);
}

TEST(AttentionEdges, ConfidencePerEdgeClass) {
  FollowerGraph g(10);
  g.add_edge(0, 1);
  const auto edges = build_attention_edges(g, 3, 7, {1.0, 0.01});
  EXPECT_EQ(edges.targets(0).size(), 5u);
  for (EdgeId e = edges.begin(0); e < edges.end(0); ++e) {
    const UserId l = edges.target(e);
    const bool followed = l == 0 || l == 1;
    EXPECT_EQ(edges.is_followed(e), followed);
    EXPECT_EQ(edges.confidence(e), followed ? 1.0 : 0.01);
  }
}

TEST(AttentionEdges, DeterministicUnderSeed) {
  FollowerGraph g(40);
  std::mt19937 rng(3);
  for (int n = 0; n < 80; ++n) {
    const UserId a = rng() % 40, b = rng() % 40;
    if (a != b) g.add_edge(a, b);
  }
  const auto x = build_attention_edges(g, 5, 11);
  const auto y = build_attention_edges(g, 5, 11);
  ASSERT_EQ(x.num_edges(), y.num_edges());
  for (EdgeId e = 0; e < x.num_edges(); ++e) {
    EXPECT_EQ(x.source(e), y.source(e));
    EXPECT_EQ(x.target(e), y.target(e));
  }
}

TEST(AttentionEdges, SamplingSaturatesWhenFewCandidates) {
  FollowerGraph g(3);
  const auto edges = build_attention_edges(g, 10, 1);
  EXPECT_EQ(edges.num_edges(), 9u);
}

TEST(AttentionEdges, RejectsBadConfidence) {
  FollowerGraph g(2);
  EXPECT_THROW(build_attention_edges(g, 0, 1, {0.01, 1.0}), InputError);
  EXPECT_THROW(build_attention_edges(g, 0, 1, {1.0, 0.0}), InputError);
}

namespace {

VoteLog make_log(std::size_t n_users, std::size_t n_items,
                 std::vector<std::tuple<UserId, ItemId, Timestamp>> votes) {
  VoteLog log{n_users, n_items, {}};
  for (auto [i, j, t] : votes) log.votes.push_back({i, j, t});
  return log;
}

}  // namespace

TEST(AttributeSources, EarlierFriendIsCandidate) {
  FollowerGraph g(2);
  g.add_edge(0, 1);
  const auto edges = build_attention_edges(g, 0, 1);
  const auto a = attribute_sources(make_log(2, 1, {{1, 0, 5}, {0, 0, 9}}), edges);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].user, 0u);
  EXPECT_EQ(a[0].sources, (std::vector<UserId>{1}));
  EXPECT_EQ(a[1].sources, (std::vector<UserId>{1}));  // user 1 falls back to itself
}

TEST(AttributeSources, NoEarlierFriendFallsBackToSelf) {
  FollowerGraph g(2);
  g.add_edge(0, 1);
  const auto edges = build_attention_edges(g, 0, 1);
  const auto a = attribute_sources(make_log(2, 1, {{1, 0, 9}, {0, 0, 9}}), edges);
  EXPECT_EQ(a[0].sources, (std::vector<UserId>{0}));
}

TEST(AttributeSources, MissingTimestampIsAnError) {
  FollowerGraph g(1);
  const auto edges = build_attention_edges(g, 0, 1);
  VoteLog log{1, 1, {{0, 0, std::nullopt}}};
  EXPECT_THROW(attribute_sources(log, edges), InputError);
}

TEST(AttributeSources, MatchesBruteForceScan) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    FollowerGraph g(4);
    for (UserId a = 0; a < 4; ++a)
      for (UserId b = 0; b < 4; ++b)
        if (a != b && rng() % 2) g.add_edge(a, b);
    const auto edges = build_attention_edges(g, 1, trial);
    std::vector<std::tuple<UserId, ItemId, Timestamp>> raw;
    for (UserId i = 0; i < 4; ++i)
      for (ItemId j = 0; j < 3; ++j)
        if (rng() % 3) raw.emplace_back(i, j, static_cast<Timestamp>(rng() % 5));
    const auto log = make_log(4, 3, raw);
    for (auto rule : {AttributionRule::kAllEarlier, AttributionRule::kEarliest}) {
      const auto got = attribute_sources(log, edges, rule);
      ASSERT_EQ(got.size(), raw.size());
      for (const auto& [i, j, t] : raw) {
        // every (friend, time) pair in the log
        std::vector<std::pair<Timestamp, UserId>> earlier;
        for (const auto& [l, jj, tl] : raw)
          if (jj == j && l != i && edges.find(i, l) && tl < t) earlier.emplace_back(tl, l);
        std::vector<UserId> expect;
        if (rule == AttributionRule::kAllEarlier) {
          for (auto [tl, l] : earlier) expect.push_back(l);
        } else if (!earlier.empty()) {
          const auto first = std::min_element(earlier.begin(), earlier.end())->first;
          for (auto [tl, l] : earlier)
            if (tl == first) expect.push_back(l);
        }
        if (expect.empty()) expect.push_back(i);
        std::sort(expect.begin(), expect.end());
        auto it = std::find_if(got.begin(), got.end(),
                               [&](const Attribution& a) { return a.user == i && a.item == j; });
        ASSERT_NE(it, got.end());
        EXPECT_EQ(it->sources, expect);
      }
    }
  }
}

TEST(AttributeSources, DuplicateVotesKeepEarliest) {
  FollowerGraph g(2);
  g.add_edge(0, 1);
  const auto edges = build_attention_edges(g, 0, 1);
  const auto a = attribute_sources(make_log(2, 1, {{0, 0, 9}, {0, 0, 1}, {1, 0, 5}}), edges);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].sources, (std::vector<UserId>{0}));
}
