#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "lactr/common.hpp"
#include "lactr/social.hpp"

namespace lactr {

struct EdgeItem {
  EdgeId edge;
  ItemId item;

  auto operator<=>(const EdgeItem&) const = default;
};

// Positive entries r_ijl = 1 of the user-item-source tensor, indexed both by
// attention edge (i, l) and by item j. All other entries are zero.
class RatingView {
 public:
  RatingView() = default;

  RatingView(std::size_t n_edges, std::size_t n_items, std::vector<EdgeItem> positives)
      : n_items_(n_items) {
    std::sort(positives.begin(), positives.end());
    positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
    edge_offsets_.assign(n_edges + 1, 0);
    item_offsets_.assign(n_items + 1, 0);
    for (const auto& p : positives) {
      if (p.edge >= n_edges || p.item >= n_items)
        throw InputError("rating references an unknown edge or item");
      ++edge_offsets_[p.edge + 1];
      ++item_offsets_[p.item + 1];
    }
    for (std::size_t e = 0; e < n_edges; ++e) edge_offsets_[e + 1] += edge_offsets_[e];
    for (std::size_t j = 0; j < n_items; ++j) item_offsets_[j + 1] += item_offsets_[j];

    by_edge_.resize(positives.size());
    by_item_.resize(positives.size());
    auto edge_fill = edge_offsets_;
    auto item_fill = item_offsets_;
    for (const auto& p : positives) {
      by_edge_[edge_fill[p.edge]++] = p.item;
      by_item_[item_fill[p.item]++] = p.edge;
    }
  }

  // r_ijl = 1 for each (i, j) vote and each candidate source l.
  static RatingView from_attribution(const AttentionEdgeSet& edges,
                                     const SourceAttribution& attribution, std::size_t n_items) {
    std::vector<EdgeItem> positives;
    for (const auto& a : attribution) {
      for (UserId l : a.sources) {
        auto e = edges.find(a.user, l);
        if (!e) throw InputError("attributed source is not an attention edge");
        positives.push_back({*e, a.item});
      }
    }
    return RatingView(edges.num_edges(), n_items, std::move(positives));
  }

  std::size_t num_edges() const { return edge_offsets_.empty() ? 0 : edge_offsets_.size() - 1; }
  std::size_t num_items() const { return n_items_; }
  std::size_t num_positives() const { return by_edge_.size(); }

  std::span<const ItemId> items_of(EdgeId e) const {
    return std::span<const ItemId>(by_edge_).subspan(edge_offsets_.at(e),
                                                     edge_offsets_.at(e + 1) - edge_offsets_.at(e));
  }

  std::span<const EdgeId> edges_of(ItemId j) const {
    return std::span<const EdgeId>(by_item_).subspan(item_offsets_.at(j),
                                                     item_offsets_.at(j + 1) - item_offsets_.at(j));
  }

  bool is_positive(EdgeId e, ItemId j) const {
    auto items = items_of(e);
    return std::binary_search(items.begin(), items.end(), j);
  }

 private:
  std::size_t n_items_ = 0;
  std::vector<std::size_t> edge_offsets_;
  std::vector<std::size_t> item_offsets_;
  std::vector<ItemId> by_edge_;
  std::vector<EdgeId> by_item_;
};

}  // namespace lactr
