#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lactr/common.hpp"

namespace lactr {

class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.empty()) throw InputError("vocabulary must not be empty");
    index_.reserve(words_.size());
    for (std::size_t w = 0; w < words_.size(); ++w) {
      auto [it, inserted] = index_.emplace(words_[w], static_cast<WordId>(w));
      if (!inserted) throw InputError("duplicate vocabulary token '" + words_[w] + "'");
    }
  }

  std::size_t size() const { return words_.size(); }
  const std::string& word(WordId w) const { return words_.at(w); }
  const std::vector<std::string>& words() const { return words_; }

  std::optional<WordId> find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

struct WordCount {
  WordId word;
  std::uint32_t count;

  bool operator==(const WordCount&) const = default;
};

// Bag of words for one item. `counts` is sorted by word id.
struct Document {
  std::string item_id;
  std::vector<WordCount> counts;

  std::size_t length() const {
    std::size_t n = 0;
    for (const auto& wc : counts) n += wc.count;
    return n;
  }
};

struct Corpus {
  Vocabulary vocabulary;
  std::vector<Document> documents;

  std::size_t num_docs() const { return documents.size(); }
  std::size_t vocab_size() const { return vocabulary.size(); }

  // Throws InputError on duplicate item ids or out-of-range word ids.
  void validate() const {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t j = 0; j < documents.size(); ++j) {
      const auto& doc = documents[j];
      if (!seen.emplace(doc.item_id, j).second)
        throw InputError("duplicate item id '" + doc.item_id + "'");
      for (const auto& wc : doc.counts) {
        if (wc.word >= vocabulary.size())
          throw InputError("item '" + doc.item_id + "' references word id " +
                           std::to_string(wc.word) + " outside vocabulary");
        if (wc.count == 0) throw InputError("item '" + doc.item_id + "' has a zero word count");
      }
    }
  }
};

struct RawDocument {
  std::string item_id;
  std::vector<std::string> tokens;
};

// Ranks distinct tokens by tf * log(D / df), where tf is the corpus-wide
// count and df the number of documents containing the token. Ties go to the
// lexicographically smaller token.
inline Vocabulary build_vocabulary(std::span<const RawDocument> raw_docs, std::size_t top_m) {
  if (raw_docs.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
  if (top_m == 0) throw InputError("vocabulary size must be positive");

  struct Stats {
    double tf = 0;
    double df = 0;
  };
  std::map<std::string, Stats> stats;
  for (const auto& doc : raw_docs) {
    std::map<std::string, std::size_t> local;
    for (const auto& tok : doc.tokens) ++local[tok];
    for (const auto& [tok, n] : local) {
      auto& s = stats[tok];
      s.tf += static_cast<double>(n);
      s.df += 1.0;
    }
  }
  if (stats.empty()) throw InputError("corpus contains no tokens");

  const double num_docs = static_cast<double>(raw_docs.size());
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(stats.size());
  for (const auto& [tok, s] : stats) scored.emplace_back(s.tf * std::log(num_docs / s.df), tok);

  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > top_m) scored.resize(top_m);

  std::vector<std::string> words;
  words.reserve(scored.size());
  for (auto& [score, tok] : scored) words.push_back(std::move(tok));
  return Vocabulary(std::move(words));
}

// Maps tokens onto `vocabulary`, dropping out-of-vocabulary tokens.
inline Corpus to_corpus(std::span<const RawDocument> raw_docs, Vocabulary vocabulary) {
  Corpus corpus{std::move(vocabulary), {}};
  corpus.documents.reserve(raw_docs.size());
  for (const auto& raw : raw_docs) {
    std::map<WordId, std::uint32_t> counts;
    for (const auto& tok : raw.tokens)
      if (auto w = corpus.vocabulary.find(tok)) ++counts[*w];
    Document doc{raw.item_id, {}};
    doc.counts.reserve(counts.size());
    for (const auto& [w, n] : counts) doc.counts.push_back({w, n});
    corpus.documents.push_back(std::move(doc));
  }
  corpus.validate();
  return corpus;
}

// Dense-id vote. Item ids index Corpus::documents.
struct Vote {
  UserId user;
  ItemId item;
  std::optional<Timestamp> time;

  bool operator==(const Vote&) const = default;
};

struct VoteLog {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<Vote> votes;

  std::vector<std::size_t> votes_per_user() const {
    std::vector<std::size_t> n(n_users, 0);
    for (const auto& v : votes) ++n.at(v.user);
    return n;
  }
};

struct ActivityFilterResult {
  Corpus corpus;
  VoteLog votes;
  std::vector<UserId> kept_users;  // new id -> old id
  std::vector<ItemId> kept_items;  // new id -> old id
};

// Drops users with fewer than `min_votes` votes and items whose document has
// at most `min_words` tokens, then restricts the log to the survivors. Both
// thresholds are evaluated once against the input; the result is not iterated
// to a fixpoint. Zero thresholds keep everything.
inline ActivityFilterResult filter_activity(const Corpus& corpus, const VoteLog& votes,
                                            std::size_t min_votes, std::size_t min_words) {
  if (votes.n_items != corpus.num_docs())
    throw InputError("vote log item count does not match corpus size");

  const auto per_user = votes.votes_per_user();
  ActivityFilterResult out;
  out.corpus.vocabulary = corpus.vocabulary;

  constexpr auto kDropped = static_cast<std::uint32_t>(-1);
  std::vector<UserId> user_map(votes.n_users, kDropped);
  for (UserId i = 0; i < votes.n_users; ++i) {
    if (per_user[i] >= min_votes) {
      user_map[i] = static_cast<UserId>(out.kept_users.size());
      out.kept_users.push_back(i);
    }
  }
  std::vector<ItemId> item_map(corpus.num_docs(), kDropped);
  for (ItemId j = 0; j < corpus.num_docs(); ++j) {
    const bool keep = min_words == 0 || corpus.documents[j].length() > min_words;
    if (keep) {
      item_map[j] = static_cast<ItemId>(out.kept_items.size());
      out.kept_items.push_back(j);
      out.corpus.documents.push_back(corpus.documents[j]);
    }
  }

  out.votes.n_users = out.kept_users.size();
  out.votes.n_items = out.kept_items.size();
  for (const auto& v : votes.votes) {
    if (user_map[v.user] == kDropped || item_map[v.item] == kDropped) continue;
    out.votes.votes.push_back({user_map[v.user], item_map[v.item], v.time});
  }
  return out;
}

}  // namespace lactr
