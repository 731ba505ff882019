#pragma once

#include <random>
#include <utility>
#include <vector>

#include "lactr/model.hpp"

namespace lactr {

// Plain collaborative topic regression: one interest vector per user, no
// attention or influence.
struct CtrState {
  Matrix u;      // N x K
  Matrix v;      // D x K
  Matrix theta;  // D x K
  Matrix beta;   // K x M

  std::size_t num_users() const { return static_cast<std::size_t>(u.rows()); }
  std::size_t num_items() const { return static_cast<std::size_t>(v.rows()); }
};

// User-item ratings stored as a RatingView whose "edges" are users.
inline RatingView user_item_ratings(std::size_t n_users, std::size_t n_items,
                                    const std::vector<std::pair<UserId, ItemId>>& positives) {
  std::vector<EdgeItem> entries;
  entries.reserve(positives.size());
  for (const auto& [i, j] : positives) entries.push_back({i, j});
  return RatingView(n_users, n_items, std::move(entries));
}

inline double ctr_log_likelihood(const CtrState& st, const RatingView& ratings,
                                 const Corpus& corpus, const Hyperparams& hp) {
  if (ratings.num_edges() != st.num_users() || ratings.num_items() != st.num_items() ||
      corpus.num_docs() != st.num_items())
    throw InputError("CTR state, ratings and corpus disagree on dimensions");
  const double ll = -0.5 * hp.lambda_u * st.u.squaredNorm() -
                    0.5 * hp.lambda_v * (st.v - st.theta).squaredNorm() +
                    word_log_likelihood(st.theta, st.beta, corpus) +
                    rating_log_likelihood(st.u, st.v, ratings, hp.a_r, hp.b_r);
  if (!std::isfinite(ll)) throw NumericError("CTR log likelihood is not finite");
  return ll;
}

// u_i from (lambda_u I + b V^T V + (a - b) sum_P v v^T) u = a sum_P v.
inline Vector ctr_update_user(UserId i, const CtrState& st, const RatingView& ratings,
                              const Hyperparams& hp, const Matrix& gram_v) {
  Matrix a = gram_v;
  a.diagonal().array() += hp.lambda_u;
  Vector b = Vector::Zero(st.u.cols());
  for (ItemId j : ratings.items_of(i)) {
    const auto vj = st.v.row(j);
    a.noalias() += (hp.a_r - hp.b_r) * vj.transpose() * vj;
    b += hp.a_r * vj.transpose();
  }
  return detail::solve_spd(a, b, "CTR user");
}

// v_j from (lambda_v I + b U^T U + (a - b) sum_P u u^T) v = a sum_P u + lambda_v theta_j.
inline Vector ctr_update_item(ItemId j, const CtrState& st, const RatingView& ratings,
                              const Hyperparams& hp, const Matrix& gram_u) {
  Matrix a = gram_u;
  a.diagonal().array() += hp.lambda_v;
  Vector b = hp.lambda_v * st.theta.row(j).transpose();
  for (EdgeId i : ratings.edges_of(j)) {
    const auto ui = st.u.row(i);
    a.noalias() += (hp.a_r - hp.b_r) * ui.transpose() * ui;
    b += hp.a_r * ui.transpose();
  }
  return detail::solve_spd(a, b, "CTR item");
}

struct CtrResult {
  CtrState state;
  std::vector<TraceRow> trace;
  bool converged = false;
};

// Coordinate ascent u -> v -> theta -> beta. Uses k, lambda_u, lambda_v,
// a_r/b_r as the rating confidences, theta_mode, max_sweeps and tol from hp.
inline CtrResult train_ctr(const TopicModel& init, const RatingView& ratings, const Corpus& corpus,
                           const Hyperparams& hp, const TrainOptions& opt = {}) {
  hp.validate();
  const auto k = static_cast<Eigen::Index>(hp.k);
  if (init.theta.cols() != k || init.beta.rows() != k)
    throw InputError("topic model does not have k topics");
  if (static_cast<std::size_t>(init.theta.rows()) != corpus.num_docs() ||
      ratings.num_items() != corpus.num_docs())
    throw InputError("CTR inputs disagree on the number of items");

  CtrResult result;
  CtrState& st = result.state;
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, opt.init_stddev);
  st.u.resize(static_cast<Eigen::Index>(ratings.num_edges()), k);
  for (Eigen::Index r = 0; r < st.u.rows(); ++r)
    for (Eigen::Index c = 0; c < k; ++c) st.u(r, c) = noise(rng);
  st.theta = init.theta;
  st.beta = init.beta;
  st.v = init.theta;

  double ll = ctr_log_likelihood(st, ratings, corpus, hp);
  result.trace.push_back({0, ll, 0.0});
  for (std::size_t sweep = 1; sweep <= hp.max_sweeps; ++sweep) {
    const Matrix gram_v = weighted_gram(st.v, hp.b_r);
    parallel_for(st.num_users(), opt.threads, [&](std::size_t i) {
      st.u.row(static_cast<Eigen::Index>(i)) =
          ctr_update_user(static_cast<UserId>(i), st, ratings, hp, gram_v).transpose();
    });
    const Matrix gram_u = weighted_gram(st.u, hp.b_r);
    parallel_for(st.num_items(), opt.threads, [&](std::size_t j) {
      st.v.row(static_cast<Eigen::Index>(j)) =
          ctr_update_item(static_cast<ItemId>(j), st, ratings, hp, gram_u).transpose();
    });
    if (hp.theta_mode == ThetaMode::kOptimize) {
      parallel_for(st.num_items(), opt.threads, [&](std::size_t j) {
        st.theta.row(static_cast<Eigen::Index>(j)) =
            update_theta(static_cast<ItemId>(j), st.v, st.theta, st.beta, corpus, hp.lambda_v)
                .transpose();
      });
      st.beta = update_beta(responsibilities(st.theta, st.beta, corpus), corpus, hp.k);
    }
    const double next = ctr_log_likelihood(st, ratings, corpus, hp);
    const double delta = next - ll;
    result.trace.push_back({sweep, next, delta});
    const double scale = ll != 0 ? std::abs(ll) : 1.0;
    ll = next;
    if (std::abs(delta) / scale < hp.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

// Ranks items by training vote count; the sanity floor for recall.
struct PopularityModel {
  Vector counts;  // D

  static PopularityModel fit(std::size_t n_items,
                             const std::vector<std::pair<UserId, ItemId>>& positives) {
    PopularityModel m{Vector::Zero(static_cast<Eigen::Index>(n_items))};
    for (const auto& [i, j] : positives) m.counts(j) += 1.0;
    return m;
  }
};

}  // namespace lactr
