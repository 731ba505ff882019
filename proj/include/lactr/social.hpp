#pragma once

#include <algorithm>
#include <iterator>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "lactr/common.hpp"
#include "lactr/corpus.hpp"

namespace lactr {

// Directed follower graph: followees(i) is the set of users i follows.
class FollowerGraph {
 public:
  FollowerGraph() = default;

  explicit FollowerGraph(std::size_t n_users) : followees_(n_users) {}

  void add_edge(UserId follower, UserId followee) {
    if (follower >= size() || followee >= size())
      throw InputError("follower edge " + std::to_string(follower) + "->" +
                       std::to_string(followee) + " references an unknown user");
    if (follower == followee)
      throw InputError("self-follow edge for user " + std::to_string(follower));
    auto& f = followees_[follower];
    auto it = std::lower_bound(f.begin(), f.end(), followee);
    if (it == f.end() || *it != followee) f.insert(it, followee);
  }

  std::size_t size() const { return followees_.size(); }
  std::span<const UserId> followees(UserId i) const { return followees_.at(i); }

  std::size_t num_edges() const {
    std::size_t n = 0;
    for (const auto& f : followees_) n += f.size();
    return n;
  }

  bool follows(UserId i, UserId l) const {
    const auto& f = followees_.at(i);
    return std::binary_search(f.begin(), f.end(), l);
  }

  // Subgraph on `kept` (new id -> old id), dropping edges to removed users.
  FollowerGraph induced(std::span<const UserId> kept) const {
    std::vector<std::int64_t> remap(size(), -1);
    for (std::size_t n = 0; n < kept.size(); ++n) remap.at(kept[n]) = static_cast<std::int64_t>(n);
    FollowerGraph g(kept.size());
    for (std::size_t n = 0; n < kept.size(); ++n)
      for (UserId l : followees_[kept[n]])
        if (remap[l] >= 0) g.add_edge(static_cast<UserId>(n), static_cast<UserId>(remap[l]));
    return g;
  }

 private:
  std::vector<std::vector<UserId>> followees_;
};

struct Confidence {
  double a = 1.0;
  double b = 0.01;
};

// Materialized attention edges in CSR layout. Each user's targets are sorted
// and always include the user itself.
class AttentionEdgeSet {
 public:
  AttentionEdgeSet() = default;

  std::size_t num_users() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return targets_.size(); }

  EdgeId begin(UserId i) const { return offsets_.at(i); }
  EdgeId end(UserId i) const { return offsets_.at(i + 1); }

  UserId source(EdgeId e) const { return sources_.at(e); }
  UserId target(EdgeId e) const { return targets_.at(e); }
  double confidence(EdgeId e) const { return confidence_.at(e); }
  bool is_followed(EdgeId e) const { return followed_.at(e) != 0; }

  std::span<const UserId> targets(UserId i) const {
    return std::span<const UserId>(targets_).subspan(begin(i), end(i) - begin(i));
  }

  std::optional<EdgeId> find(UserId i, UserId l) const {
    if (i >= num_users()) return std::nullopt;
    auto first = targets_.begin() + begin(i);
    auto last = targets_.begin() + end(i);
    auto it = std::lower_bound(first, last, l);
    if (it == last || *it != l) return std::nullopt;
    return static_cast<EdgeId>(it - targets_.begin());
  }

  EdgeId self_edge(UserId i) const { return *find(i, i); }

  // Builds from explicit per-user target lists. The self edge and all
  // followees get confidence `conf.a`; anything else gets `conf.b`.
  struct EdgeRecord {
    UserId source;
    UserId target;
    double confidence;
    bool followed;
  };

  // Rebuilds a set from explicit records, e.g. a model dump.
  static AttentionEdgeSet from_records(std::size_t n_users, std::vector<EdgeRecord> records) {
    std::sort(records.begin(), records.end(), [](const EdgeRecord& a, const EdgeRecord& b) {
      return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    AttentionEdgeSet set;
    set.offsets_.assign(n_users + 1, 0);
    for (std::size_t n = 0; n < records.size(); ++n) {
      const auto& r = records[n];
      if (r.source >= n_users || r.target >= n_users)
        throw InputError("attention edge references unknown user");
      if (n > 0 && records[n - 1].source == r.source && records[n - 1].target == r.target)
        throw InputError("duplicate attention edge");
      if (!(r.confidence > 0)) throw InputError("attention confidence must be positive");
      set.sources_.push_back(r.source);
      set.targets_.push_back(r.target);
      set.confidence_.push_back(r.confidence);
      set.followed_.push_back(r.followed ? 1 : 0);
      ++set.offsets_[r.source + 1];
    }
    for (std::size_t i = 0; i < n_users; ++i) set.offsets_[i + 1] += set.offsets_[i];
    for (UserId i = 0; i < n_users; ++i)
      if (!set.find(i, i)) throw InputError("user " + std::to_string(i) + " has no self edge");
    return set;
  }

  static AttentionEdgeSet from_lists(const FollowerGraph& graph,
                                     const std::vector<std::vector<UserId>>& extra,
                                     Confidence conf) {
    if (!(conf.a > conf.b && conf.b > 0))
      throw InputError("attention confidences must satisfy a > b > 0");
    AttentionEdgeSet set;
    const std::size_t n = graph.size();
    set.offsets_.assign(n + 1, 0);
    for (UserId i = 0; i < n; ++i) {
      std::vector<UserId> targets(graph.followees(i).begin(), graph.followees(i).end());
      targets.push_back(i);
      if (i < extra.size()) targets.insert(targets.end(), extra[i].begin(), extra[i].end());
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
      for (UserId l : targets) {
        if (l >= n) throw InputError("attention edge references unknown user");
        const bool followed = l == i || graph.follows(i, l);
        set.sources_.push_back(i);
        set.targets_.push_back(l);
        set.followed_.push_back(followed ? 1 : 0);
        set.confidence_.push_back(followed ? conf.a : conf.b);
      }
      set.offsets_[i + 1] = static_cast<EdgeId>(set.targets_.size());
    }
    return set;
  }

 private:
  std::vector<EdgeId> offsets_;
  std::vector<UserId> sources_;
  std::vector<UserId> targets_;
  std::vector<double> confidence_;
  std::vector<std::uint8_t> followed_;
};

// A(i) = followees(i) + {i} + up to `neg_samples` uniformly drawn non-followees.
inline AttentionEdgeSet build_attention_edges(const FollowerGraph& graph, std::size_t neg_samples,
                                              std::uint64_t seed, Confidence conf = {}) {
  const std::size_t n = graph.size();
  std::vector<std::vector<UserId>> extra(n);
  if (neg_samples > 0) {
    std::mt19937_64 rng(seed);
    for (UserId i = 0; i < n; ++i) {
      const std::size_t excluded = graph.followees(i).size() + 1;
      const std::size_t available = n - excluded;
      const std::size_t want = std::min(neg_samples, available);
      if (want == 0) continue;
      auto& picks = extra[i];
      if (want * 4 < available) {
        std::unordered_set<UserId> chosen;
        std::uniform_int_distribution<UserId> pick(0, static_cast<UserId>(n - 1));
        while (picks.size() < want) {
          const UserId l = pick(rng);
          if (l == i || graph.follows(i, l) || !chosen.insert(l).second) continue;
          picks.push_back(l);
        }
      } else {
        std::vector<UserId> pool;
        pool.reserve(available);
        for (UserId l = 0; l < n; ++l)
          if (l != i && !graph.follows(i, l)) pool.push_back(l);
        std::sample(pool.begin(), pool.end(), std::back_inserter(picks), want, rng);
      }
    }
  }
  return AttentionEdgeSet::from_lists(graph, extra, conf);
}

enum class AttributionRule {
  kAllEarlier,  // every attention neighbour who voted strictly earlier
  kEarliest,    // only the earliest such neighbour(s)
};

struct Attribution {
  UserId user;
  ItemId item;
  std::vector<UserId> sources;  // sorted, non-empty, subset of A(user)
};

// One entry per distinct (user, item) vote, sorted by (user, item).
using SourceAttribution = std::vector<Attribution>;

// Candidate sources for each vote: the attention neighbours of the voter who
// voted for the same item strictly earlier. Votes without such a neighbour are
// attributed to the voter's self edge. Duplicate votes keep the earliest time.
inline SourceAttribution attribute_sources(const VoteLog& votes, const AttentionEdgeSet& edges,
                                           AttributionRule rule = AttributionRule::kAllEarlier) {
  if (votes.n_users != edges.num_users())
    throw InputError("vote log and attention edges disagree on the number of users");

  struct Entry {
    ItemId item;
    UserId user;
    Timestamp time;
  };
  std::vector<Entry> entries;
  entries.reserve(votes.votes.size());
  for (std::size_t n = 0; n < votes.votes.size(); ++n) {
    const auto& v = votes.votes[n];
    if (!v.time)
      throw InputError("vote " + std::to_string(n) + " (user " + std::to_string(v.user) +
                       ") has no timestamp");
    if (v.user >= votes.n_users || v.item >= votes.n_items)
      throw InputError("vote " + std::to_string(n) + " references an unknown user or item");
    entries.push_back({v.item, v.user, *v.time});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.item != b.item) return a.item < b.item;
    if (a.user != b.user) return a.user < b.user;
    return a.time < b.time;
  });
  entries.erase(std::unique(entries.begin(), entries.end(),
                            [](const Entry& a, const Entry& b) {
                              return a.item == b.item && a.user == b.user;
                            }),
                entries.end());

  SourceAttribution out;
  out.reserve(entries.size());
  std::size_t first = 0;
  while (first < entries.size()) {
    std::size_t last = first;
    while (last < entries.size() && entries[last].item == entries[first].item) ++last;
    // entries[first, last) are the voters of one item, one per user, sorted by user.
    for (std::size_t a = first; a < last; ++a) {
      const Entry& voter = entries[a];
      Attribution attr{voter.user, voter.item, {}};
      Timestamp best = 0;
      for (UserId l : edges.targets(voter.user)) {
        if (l == voter.user) continue;
        auto it = std::lower_bound(entries.begin() + first, entries.begin() + last, l,
                                   [](const Entry& e, UserId u) { return e.user < u; });
        if (it == entries.begin() + last || it->user != l || it->time >= voter.time) continue;
        if (rule == AttributionRule::kEarliest && !attr.sources.empty()) {
          if (it->time > best) continue;
          if (it->time < best) attr.sources.clear();
        }
        best = it->time;
        attr.sources.push_back(l);
      }
      if (attr.sources.empty()) attr.sources.push_back(voter.user);
      out.push_back(std::move(attr));
    }
    first = last;
  }
  std::sort(out.begin(), out.end(), [](const Attribution& a, const Attribution& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  return out;
}

}  // namespace lactr
