#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lactr/ctr.hpp"
#include "lactr/model.hpp"
#include "lactr/social.hpp"
#include "lactr/topics.hpp"

namespace lactr {

enum class PredictMode { kInMatrix, kOutOfMatrix };
enum class Latent { kInterest, kAttention };
enum class Aggregation { kMax, kSum };

inline std::string to_string(PredictMode m) {
  return m == PredictMode::kInMatrix ? "in_matrix" : "out_of_matrix";
}
inline std::string to_string(Latent l) { return l == Latent::kInterest ? "interest" : "attention"; }
inline std::string to_string(Aggregation a) { return a == Aggregation::kMax ? "max" : "sum"; }

inline PredictMode parse_predict_mode(const std::string& s) {
  if (s == "in_matrix") return PredictMode::kInMatrix;
  if (s == "out_of_matrix") return PredictMode::kOutOfMatrix;
  throw InputError("mode must be 'in_matrix' or 'out_of_matrix', got '" + s + "'");
}
inline Latent parse_latent(const std::string& s) {
  if (s == "interest") return Latent::kInterest;
  if (s == "attention") return Latent::kAttention;
  throw InputError("latent must be 'interest' or 'attention', got '" + s + "'");
}
inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "max") return Aggregation::kMax;
  if (s == "sum") return Aggregation::kSum;
  throw InputError("aggregation must be 'max' or 'sum', got '" + s + "'");
}

struct ScoredItem {
  ItemId item;
  double score;
  std::optional<UserId> source;  // arg-max attention target, attention latent only
};

using Ranking = std::vector<ScoredItem>;

// Descending score, ties to the smaller item id.
inline void sort_ranking(Ranking& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const ScoredItem& a, const ScoredItem& b) {
    return a.score != b.score ? a.score > b.score : a.item < b.item;
  });
}

namespace detail {

inline void check_items(std::span<const ItemId> items, std::size_t n_items) {
  for (ItemId j : items)
    if (j >= n_items) throw InputError("unknown item " + std::to_string(j));
}

template <typename Items>
auto item_profile(const Items& v, const Matrix& theta, PredictMode mode, ItemId j) {
  return mode == PredictMode::kInMatrix ? v.row(j) : theta.row(j);
}

}  // namespace detail

// interest:  u_i . v_j (in-matrix) or u_i . theta_j (out-of-matrix)
// attention: max over l in A(i) of phi_il . v_j (or . theta_j); the
//            maximizing l is reported as the predicted source. Sum
//            aggregation adds the edge scores instead.
inline Ranking predict_scores(const ModelState& st, UserId i, std::span<const ItemId> items,
                              PredictMode mode, Latent latent,
                              Aggregation aggregation = Aggregation::kMax) {
  if (i >= st.num_users()) throw InputError("unknown user " + std::to_string(i));
  detail::check_items(items, st.num_items());
  Ranking out;
  out.reserve(items.size());
  for (ItemId j : items) {
    const auto x = detail::item_profile(st.v, st.theta, mode, j);
    if (latent == Latent::kInterest) {
      out.push_back({j, st.u.row(i).dot(x), std::nullopt});
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    double sum = 0;
    UserId source = i;
    for (EdgeId e = st.edges.begin(i); e < st.edges.end(i); ++e) {
      const double score = st.phi.row(e).dot(x);
      sum += score;
      if (score > best) {
        best = score;
        source = st.edges.target(e);
      }
    }
    out.push_back({j, aggregation == Aggregation::kMax ? best : sum, source});
  }
  sort_ranking(out);
  return out;
}

inline Ranking predict_scores(const CtrState& st, UserId i, std::span<const ItemId> items,
                              PredictMode mode, Latent latent = Latent::kInterest) {
  if (latent != Latent::kInterest) throw InputError("CTR has no attention latent");
  if (i >= st.num_users()) throw InputError("unknown user " + std::to_string(i));
  detail::check_items(items, st.num_items());
  Ranking out;
  out.reserve(items.size());
  for (ItemId j : items)
    out.push_back({j, st.u.row(i).dot(detail::item_profile(st.v, st.theta, mode, j)), std::nullopt});
  sort_ranking(out);
  return out;
}

inline Ranking predict_scores(const PopularityModel& m, std::span<const ItemId> items) {
  detail::check_items(items, static_cast<std::size_t>(m.counts.size()));
  Ranking out;
  out.reserve(items.size());
  for (ItemId j : items) out.push_back({j, m.counts(j), std::nullopt});
  sort_ranking(out);
  return out;
}

// |top-x ∩ positives| / |positives|. nullopt when there are no positives,
// so the user drops out of averages. The ranking is the candidate pool and
// must already exclude the user's training positives.
inline std::optional<double> recall_at_x(const Ranking& ranking,
                                         const std::set<ItemId>& test_positives, std::size_t x) {
  if (ranking.empty()) throw InputError("recall@X needs a non-empty candidate pool");
  if (x == 0) throw InputError("recall@X needs X >= 1");
  if (test_positives.empty()) return std::nullopt;
  const std::size_t top = std::min(x, ranking.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < top; ++r) hits += test_positives.count(ranking[r].item);
  return static_cast<double>(hits) / static_cast<double>(test_positives.size());
}

// Cutoffs from "start:stop:step", inclusive, e.g. 20:200:20.
inline std::vector<std::size_t> parse_x_grid(const std::string& spec) {
  std::vector<std::size_t> parts;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto next = spec.find(':', pos);
    const auto piece = spec.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used = 0;
      const long long value = std::stoll(piece, &used);
      if (used != piece.size() || value <= 0) throw std::invalid_argument(piece);
      parts.push_back(static_cast<std::size_t>(value));
    } catch (const std::exception&) {
      throw InputError("x grid '" + spec + "' must look like start:stop:step with positive integers");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.size() != 3 || parts[0] > parts[1])
    throw InputError("x grid '" + spec + "' must look like start:stop:step");
  std::vector<std::size_t> xs;
  for (std::size_t x = parts[0]; x <= parts[1]; x += parts[2]) xs.push_back(x);
  return xs;
}

struct FoldPlan {
  std::size_t n_folds = 5;
  PredictMode mode = PredictMode::kInMatrix;
  std::uint64_t seed = 1;
  std::vector<std::uint32_t> vote_fold;  // per vote in the log
  std::vector<std::uint32_t> item_fold;  // per item, out-of-matrix only
};

// in_matrix partitions the votes; out_of_matrix partitions the items and a
// vote follows its item. Assignment is a seeded shuffle dealt round-robin.
inline FoldPlan make_folds(const VoteLog& votes, std::size_t n_folds, PredictMode mode,
                           std::uint64_t seed) {
  if (n_folds < 2) throw InputError("cross validation needs at least 2 folds");
  FoldPlan plan{n_folds, mode, seed, {}, {}};
  std::mt19937_64 rng(seed);
  auto deal = [&](std::size_t count) {
    std::vector<std::uint32_t> order(count);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::uint32_t> fold(count);
    for (std::size_t r = 0; r < count; ++r) fold[order[r]] = static_cast<std::uint32_t>(r % n_folds);
    return fold;
  };
  if (mode == PredictMode::kInMatrix) {
    if (votes.votes.size() < n_folds) throw InputError("fewer votes than folds");
    plan.vote_fold = deal(votes.votes.size());
  } else {
    if (votes.n_items < n_folds) throw InputError("fewer items than folds");
    plan.item_fold = deal(votes.n_items);
    plan.vote_fold.reserve(votes.votes.size());
    for (const auto& v : votes.votes) plan.vote_fold.push_back(plan.item_fold.at(v.item));
  }
  return plan;
}

enum class ModelKind { kLaCtr, kCtr, kPopularity, kRandom };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kLaCtr: return "lactr";
    case ModelKind::kCtr: return "ctr";
    case ModelKind::kPopularity: return "popularity";
    case ModelKind::kRandom: return "random";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "lactr") return ModelKind::kLaCtr;
  if (s == "ctr") return ModelKind::kCtr;
  if (s == "popularity") return ModelKind::kPopularity;
  if (s == "random") return ModelKind::kRandom;
  throw InputError("unknown model '" + s + "' (expected lactr, ctr, popularity or random)");
}

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::kLaCtr;
  Hyperparams hp;
  std::vector<Latent> latents = {Latent::kInterest};
  Aggregation aggregation = Aggregation::kMax;
};

struct ExperimentData {
  const Corpus* corpus = nullptr;
  const FollowerGraph* graph = nullptr;
  const VoteLog* votes = nullptr;
  const TopicModel* init = nullptr;
  std::size_t neg_samples = 5;
  AttributionRule attribution = AttributionRule::kAllEarlier;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

inline constexpr int kAllFolds = -1;

struct RecallRow {
  std::string model;
  std::string latent;
  PredictMode mode;
  int fold;  // kAllFolds for the mean over folds
  std::size_t x;
  double mean_recall;
  std::size_t n_users;
};

struct UserRecallRow {
  std::string model;
  std::string latent;
  int fold;
  UserId user;
  std::size_t x;
  double recall;
};

struct RecallCurve {
  std::vector<std::size_t> xs;
  std::vector<double> mean_recall;  // averaged over users, then folds
};

struct ExperimentResult {
  std::vector<RecallRow> rows;
  std::vector<UserRecallRow> per_user;

  RecallCurve curve(const std::string& model, const std::string& latent) const {
    RecallCurve c;
    for (const auto& r : rows) {
      if (r.model == model && r.latent == latent && r.fold == kAllFolds) {
        c.xs.push_back(r.x);
        c.mean_recall.push_back(r.mean_recall);
      }
    }
    return c;
  }
};

// One train/test split of the log.
struct FoldSplit {
  VoteLog train;
  std::vector<std::set<ItemId>> train_items;  // per user
  std::vector<std::set<ItemId>> test_items;   // per user
  std::vector<ItemId> pool_items;             // candidate items before removing training positives
};

inline FoldSplit split_fold(const VoteLog& votes, const FoldPlan& plan, std::uint32_t fold) {
  FoldSplit split;
  split.train.n_users = votes.n_users;
  split.train.n_items = votes.n_items;
  split.train_items.resize(votes.n_users);
  split.test_items.resize(votes.n_users);
  for (std::size_t n = 0; n < votes.votes.size(); ++n) {
    const auto& v = votes.votes[n];
    if (plan.vote_fold.at(n) == fold) {
      split.test_items[v.user].insert(v.item);
    } else {
      split.train.votes.push_back(v);
      split.train_items[v.user].insert(v.item);
    }
  }
  // A vote duplicated across folds counts as training.
  for (UserId i = 0; i < votes.n_users; ++i)
    for (ItemId j : split.train_items[i]) split.test_items[i].erase(j);

  for (ItemId j = 0; j < votes.n_items; ++j)
    if (plan.mode == PredictMode::kInMatrix || plan.item_fold.at(j) == fold)
      split.pool_items.push_back(j);
  return split;
}

inline std::vector<std::pair<UserId, ItemId>> vote_pairs(const VoteLog& votes) {
  std::vector<std::pair<UserId, ItemId>> pairs;
  pairs.reserve(votes.votes.size());
  for (const auto& v : votes.votes) pairs.emplace_back(v.user, v.item);
  return pairs;
}

// Trains every model on every fold's training split and scores each user's
// held-out positives against the candidate pool. Per-fold rows average over
// users with at least one test positive; kAllFolds rows average the folds.
inline ExperimentResult run_experiment(const ExperimentData& data,
                                       const std::vector<ModelSpec>& models, const FoldPlan& plan,
                                       const std::vector<std::size_t>& x_grid) {
  if (!data.corpus || !data.graph || !data.votes || !data.init)
    throw InputError("experiment data is incomplete");
  const VoteLog& votes = *data.votes;
  if (votes.n_items != data.corpus->num_docs() || votes.n_users != data.graph->size())
    throw InputError("corpus, graph and votes disagree on dimensions");
  if (plan.vote_fold.size() != votes.votes.size()) throw InputError("fold plan does not match votes");
  if (x_grid.empty()) throw InputError("x grid is empty");

  ExperimentResult result;
  // (model, latent) -> x -> per-fold means
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, std::vector<double>>> fold_means;
  std::vector<std::pair<std::string, std::string>> order;

  for (std::uint32_t fold = 0; fold < plan.n_folds; ++fold) {
    const FoldSplit split = split_fold(votes, plan, fold);
    const auto train_pairs = vote_pairs(split.train);

    for (const auto& spec : models) {
      // scorer(user, pool) -> ranking for one latent
      std::vector<std::pair<std::string, std::function<Ranking(UserId, std::span<const ItemId>)>>>
          scorers;
      std::shared_ptr<void> keep_alive;
      try {
        switch (spec.kind) {
          case ModelKind::kLaCtr: {
            const Confidence conf{spec.hp.a_phi, spec.hp.b_phi};
            auto edges = build_attention_edges(*data.graph, data.neg_samples, data.seed, conf);
            const auto attribution = attribute_sources(split.train, edges, data.attribution);
            const auto ratings = RatingView::from_attribution(edges, attribution, votes.n_items);
            TrainOptions opt;
            opt.seed = data.seed;
            opt.threads = data.threads;
            auto trained = std::make_shared<ModelState>(
                train(*data.init, edges, ratings, *data.corpus, spec.hp, opt).state);
            keep_alive = trained;
            for (Latent latent : spec.latents) {
              scorers.emplace_back(to_string(latent), [trained, latent, &plan, &spec](
                                                          UserId i, std::span<const ItemId> pool) {
                return predict_scores(*trained, i, pool, plan.mode, latent, spec.aggregation);
              });
            }
            break;
          }
          case ModelKind::kCtr: {
            const auto ratings = user_item_ratings(votes.n_users, votes.n_items, train_pairs);
            TrainOptions opt;
            opt.seed = data.seed;
            opt.threads = data.threads;
            auto trained = std::make_shared<CtrState>(
                train_ctr(*data.init, ratings, *data.corpus, spec.hp, opt).state);
            keep_alive = trained;
            scorers.emplace_back("interest", [trained, &plan](UserId i, std::span<const ItemId> pool) {
              return predict_scores(*trained, i, pool, plan.mode);
            });
            break;
          }
          case ModelKind::kPopularity: {
            auto pop = std::make_shared<PopularityModel>(
                PopularityModel::fit(votes.n_items, train_pairs));
            keep_alive = pop;
            scorers.emplace_back("none", [pop](UserId, std::span<const ItemId> pool) {
              return predict_scores(*pop, pool);
            });
            break;
          }
          case ModelKind::kRandom: {
            const std::uint64_t seed = data.seed * 1000003ULL + fold;
            scorers.emplace_back("none", [seed](UserId i, std::span<const ItemId> pool) {
              std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
              std::uniform_real_distribution<double> unif(0.0, 1.0);
              Ranking r;
              for (ItemId j : pool) r.push_back({j, unif(rng), std::nullopt});
              sort_ranking(r);
              return r;
            });
            break;
          }
        }
      } catch (const InputError& err) {
        throw InputError("fold " + std::to_string(fold) + ", model " + spec.name + ": " + err.what());
      } catch (const NumericError& err) {
        throw NumericError("fold " + std::to_string(fold) + ", model " + spec.name + ": " +
                           err.what());
      }

      for (auto& [latent, scorer] : scorers) {
        const auto key = std::make_pair(spec.name, latent);
        if (!fold_means.count(key)) order.push_back(key);
        std::map<std::size_t, std::pair<double, std::size_t>> sums;
        for (UserId i = 0; i < votes.n_users; ++i) {
          if (split.test_items[i].empty()) continue;
          std::vector<ItemId> pool;
          pool.reserve(split.pool_items.size());
          for (ItemId j : split.pool_items)
            if (!split.train_items[i].count(j)) pool.push_back(j);
          if (pool.empty()) continue;
          const Ranking ranking = scorer(i, pool);
          for (std::size_t x : x_grid) {
            const auto r = recall_at_x(ranking, split.test_items[i], x);
            if (!r) continue;
            auto& [sum, n] = sums[x];
            sum += *r;
            ++n;
            result.per_user.push_back({spec.name, latent, static_cast<int>(fold), i, x, *r});
          }
        }
        for (std::size_t x : x_grid) {
          const auto [sum, n] = sums[x];
          const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
          result.rows.push_back({spec.name, latent, plan.mode, static_cast<int>(fold), x, mean, n});
          if (n > 0) fold_means[key][x].push_back(mean);
        }
      }
    }
  }

  for (const auto& key : order) {
    for (std::size_t x : x_grid) {
      const auto& means = fold_means[key][x];
      const double mean = means.empty() ? 0.0
                                        : std::accumulate(means.begin(), means.end(), 0.0) /
                                              static_cast<double>(means.size());
      result.rows.push_back({key.first, key.second, plan.mode, kAllFolds, x, mean, means.size()});
    }
  }
  return result;
}

// model,latent,mode,fold,x,mean_recall,n_users. The fold column reads "all"
// on the rows averaged over folds, whose n_users counts contributing folds.
inline void write_results_csv(std::ostream& os, const std::vector<RecallRow>& rows,
                              bool header = true) {
  if (header) os << "model,latent,mode,fold,x,mean_recall,n_users\n";
  const auto old = os.precision(10);
  for (const auto& r : rows) {
    os << r.model << ',' << r.latent << ',' << to_string(r.mode) << ',';
    if (r.fold == kAllFolds)
      os << "all";
    else
      os << r.fold;
    os << ',' << r.x << ',' << r.mean_recall << ',' << r.n_users << '\n';
  }
  os.precision(old);
}

struct ProfileOptions {
  std::size_t interest_topics = 5;
  std::size_t influencers = 3;
  std::size_t attention_topics = 3;
  std::size_t words = 10;
};

// Human-readable explanation of one user: the strongest interest topics,
// the most influential attention targets by s_il with their top attention
// topics, and the words of every topic mentioned.
inline void write_user_profile(std::ostream& os, const ModelState& st, UserId i,
                               const Vocabulary& vocab, const std::vector<std::string>& user_names,
                               const ProfileOptions& opt = {}) {
  if (i >= st.num_users()) throw InputError("unknown user " + std::to_string(i));
  auto name = [&](UserId id) {
    return id < user_names.size() ? user_names[id] : std::to_string(id);
  };
  std::set<std::size_t> mentioned;
  const auto old = os.precision(4);
  os << "user " << name(i) << '\n';
  os << "interest topics:";
  const auto u = st.u.row(i);
  for (auto k : top_indices(u, opt.interest_topics)) {
    os << ' ' << k << ':' << u(static_cast<Eigen::Index>(k));
    mentioned.insert(k);
  }
  os << '\n';

  Vector influence(st.edges.end(i) - st.edges.begin(i));
  for (EdgeId e = st.edges.begin(i); e < st.edges.end(i); ++e)
    influence(e - st.edges.begin(i)) = st.s(e);
  for (auto offset : top_indices(influence, opt.influencers)) {
    const EdgeId e = st.edges.begin(i) + static_cast<EdgeId>(offset);
    os << "influencer " << name(st.edges.target(e)) << " s=" << st.s(e) << " attention topics:";
    const auto phi = st.phi.row(e);
    for (auto k : top_indices(phi, opt.attention_topics)) {
      os << ' ' << k << ':' << phi(static_cast<Eigen::Index>(k));
      mentioned.insert(k);
    }
    os << '\n';
  }
  for (auto k : mentioned) {
    os << "topic " << k << ':';
    const auto row = st.beta.row(static_cast<Eigen::Index>(k));
    for (auto w : top_indices(row, opt.words)) os << ' ' << vocab.word(static_cast<WordId>(w));
    os << '\n';
  }
  os.precision(old);
}

}  // namespace lactr
