#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lactr/common.hpp"
#include "lactr/corpus.hpp"
#include "lactr/hyperparams.hpp"
#include "lactr/parallel.hpp"
#include "lactr/ratings.hpp"
#include "lactr/simplex.hpp"
#include "lactr/social.hpp"
#include "lactr/topics.hpp"

namespace lactr {

// MAP point estimate of every latent. Influence s and attention phi are
// indexed by attention edge; the item offset epsilon is v - theta.
struct ModelState {
  AttentionEdgeSet edges;
  Matrix u;      // N x K
  Vector s;      // E
  Matrix phi;    // E x K
  Matrix v;      // D x K
  Matrix theta;  // D x K
  Matrix beta;   // K x M

  std::size_t num_users() const { return static_cast<std::size_t>(u.rows()); }
  std::size_t num_items() const { return static_cast<std::size_t>(v.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(u.cols()); }

  void validate() const {
    const auto kk = u.cols();
    const auto e = static_cast<Eigen::Index>(edges.num_edges());
    if (static_cast<std::size_t>(u.rows()) != edges.num_users())
      throw InputError("user matrix does not match the attention edge set");
    if (s.size() != e || phi.rows() != e || phi.cols() != kk)
      throw InputError("influence/attention blocks do not match the attention edge set");
    if (v.cols() != kk || theta.rows() != v.rows() || theta.cols() != kk || beta.rows() != kk)
      throw InputError("item/topic blocks have inconsistent dimensions");
    auto finite = [](const auto& m) { return m.allFinite(); };
    if (!finite(u) || !finite(s) || !finite(phi) || !finite(v) || !finite(theta) || !finite(beta))
      throw NumericError("model state contains non-finite values");
  }
};

// The six additive pieces of the complete log likelihood.
struct LikelihoodTerms {
  double interest = 0;   // -lambda_u/2 sum |u_i|^2
  double item = 0;       // -lambda_v/2 sum |v_j - theta_j|^2
  double words = 0;      // sum_j sum_m log(theta_j . beta_{w_jm})
  double influence = 0;  // -lambda_s/2 sum s_il^2
  double rating = 0;     // -sum c^r/2 (r - phi^T v)^2 over edges x items
  double attention = 0;  // -lambda_phi/2 sum c^phi |phi - s u|^2

  double total() const { return interest + item + words + influence + rating + attention; }
};

// b * X^T X, the zero-rating share of a confidence-weighted Gram matrix.
inline Matrix weighted_gram(const Matrix& x, double b) {
  Matrix g = b * (x.transpose() * x);
  return g;
}

inline double word_log_likelihood(const Matrix& theta, const Matrix& beta, const Corpus& corpus) {
  double total = 0;
  for (std::size_t j = 0; j < corpus.num_docs(); ++j) {
    for (const auto& wc : corpus.documents[j].counts) {
      const double mix = theta.row(static_cast<Eigen::Index>(j)).dot(beta.col(wc.word));
      total += static_cast<double>(wc.count) * std::log(mix);
    }
  }
  return total;
}

// Rating term over all materialized edges and all items. Zero entries are
// summed in closed form through V^T V; positives are corrected individually.
inline double rating_log_likelihood(const Matrix& phi, const Matrix& v, const RatingView& ratings,
                                    double a_r, double b_r) {
  const Matrix gram = v.transpose() * v;
  double sum = b_r * (phi * gram).cwiseProduct(phi).sum();
  for (EdgeId e = 0; e < ratings.num_edges(); ++e) {
    for (ItemId j : ratings.items_of(e)) {
      const double x = phi.row(e).dot(v.row(j));
      sum += a_r * (1.0 - x) * (1.0 - x) - b_r * x * x;
    }
  }
  return -0.5 * sum;
}

inline LikelihoodTerms likelihood_terms(const ModelState& st, const RatingView& ratings,
                                        const Corpus& corpus, const Hyperparams& hp) {
  if (corpus.num_docs() != st.num_items() || ratings.num_items() != st.num_items() ||
      ratings.num_edges() != st.edges.num_edges())
    throw InputError("model, ratings and corpus disagree on dimensions");
  LikelihoodTerms t;
  t.interest = -0.5 * hp.lambda_u * st.u.squaredNorm();
  t.item = -0.5 * hp.lambda_v * (st.v - st.theta).squaredNorm();
  t.words = word_log_likelihood(st.theta, st.beta, corpus);
  t.influence = -0.5 * hp.lambda_s * st.s.squaredNorm();
  t.rating = rating_log_likelihood(st.phi, st.v, ratings, hp.a_r, hp.b_r);
  double attention = 0;
  for (EdgeId e = 0; e < st.edges.num_edges(); ++e) {
    const UserId i = st.edges.source(e);
    attention += st.edges.confidence(e) * (st.phi.row(e) - st.s(e) * st.u.row(i)).squaredNorm();
  }
  t.attention = -0.5 * hp.lambda_phi * attention;

  auto check = [](double x, const char* block) {
    if (!std::isfinite(x))
      throw NumericError(std::string("log likelihood: non-finite value in the ") + block +
                         " term");
  };
  check(t.interest, "user interest");
  check(t.item, "item offset");
  check(t.words, "word");
  check(t.influence, "influence");
  check(t.rating, "rating");
  check(t.attention, "attention");
  return t;
}

inline double log_likelihood(const ModelState& st, const RatingView& ratings, const Corpus& corpus,
                             const Hyperparams& hp) {
  return likelihood_terms(st, ratings, corpus, hp).total();
}

namespace detail {

inline Vector solve_spd(const Matrix& a, const Vector& b, const char* block) {
  if (!a.allFinite() || !b.allFinite())
    throw NumericError(std::string(block) + " update: non-finite normal equations");
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericError(std::string(block) + " update: normal equations are not positive definite");
  Vector x = llt.solve(b);
  if (!x.allFinite()) throw NumericError(std::string(block) + " update: non-finite solution");
  return x;
}

}  // namespace detail

// u_i = (lambda_u + lambda_phi sum_l c_il s_il^2)^-1 lambda_phi sum_l c_il s_il phi_il
inline Vector update_user_interest(UserId i, const ModelState& st, const Hyperparams& hp) {
  double denom = hp.lambda_u;
  Vector num = Vector::Zero(static_cast<Eigen::Index>(st.k()));
  for (EdgeId e = st.edges.begin(i); e < st.edges.end(i); ++e) {
    const double cs = hp.lambda_phi * st.edges.confidence(e) * st.s(e);
    denom += cs * st.s(e);
    num += cs * st.phi.row(e).transpose();
  }
  return num / denom;
}

// s_il = lambda_phi c_il phi_il^T u_i / (lambda_s + lambda_phi c_il |u_i|^2)
inline double update_influence(EdgeId e, const ModelState& st, const Hyperparams& hp) {
  const auto u = st.u.row(st.edges.source(e));
  const double c = hp.lambda_phi * st.edges.confidence(e);
  return c * st.phi.row(e).dot(u) / (hp.lambda_s + c * u.squaredNorm());
}

// Solves (lambda_phi c I + b_r V^T V + (a_r - b_r) sum_P v v^T) phi
//        = a_r sum_P v + lambda_phi c s u_i
// over the positive items P of the edge. `gram_r` is b_r V^T V.
inline Vector update_attention(EdgeId e, const ModelState& st, const RatingView& ratings,
                               const Hyperparams& hp, const Matrix& gram_r) {
  const double c = hp.lambda_phi * st.edges.confidence(e);
  Matrix a = gram_r;
  a.diagonal().array() += c;
  Vector b = c * st.s(e) * st.u.row(st.edges.source(e)).transpose();
  const double extra = hp.a_r - hp.b_r;
  for (ItemId j : ratings.items_of(e)) {
    const auto vj = st.v.row(j);
    a.noalias() += extra * vj.transpose() * vj;
    b += hp.a_r * vj.transpose();
  }
  return detail::solve_spd(a, b, "attention");
}

// Solves (lambda_v I + b_r sum_all phi phi^T + (a_r - b_r) sum_P phi phi^T) v
//        = a_r sum_P phi + lambda_v theta_j
// over the positive edges P of the item. `gram_phi` is b_r Phi^T Phi.
inline Vector update_item(ItemId j, const ModelState& st, const RatingView& ratings,
                          const Hyperparams& hp, const Matrix& gram_phi) {
  Matrix a = gram_phi;
  a.diagonal().array() += hp.lambda_v;
  Vector b = hp.lambda_v * st.theta.row(j).transpose();
  const double extra = hp.a_r - hp.b_r;
  for (EdgeId e : ratings.edges_of(j)) {
    const auto p = st.phi.row(e);
    a.noalias() += extra * p.transpose() * p;
    b += hp.a_r * p.transpose();
  }
  return detail::solve_spd(a, b, "item");
}

inline Vector update_theta(ItemId j, const Matrix& v, const Matrix& theta, const Matrix& beta,
                           const Corpus& corpus, double lambda_v) {
  const Vector vj = v.row(j).transpose();
  const Vector start = theta.row(j).transpose();
  ThetaObjective objective(corpus.documents.at(j), beta, vj, lambda_v);
  return maximize_on_simplex(objective, start);
}

inline Vector update_theta(ItemId j, const ModelState& st, const Corpus& corpus,
                           const Hyperparams& hp) {
  return update_theta(j, st.v, st.theta, st.beta, corpus, hp.lambda_v);
}

enum class Block { kAttention, kInfluence, kInterest, kItem, kTheta, kBeta };

inline const char* block_name(Block b) {
  switch (b) {
    case Block::kAttention: return "attention";
    case Block::kInfluence: return "influence";
    case Block::kInterest: return "interest";
    case Block::kItem: return "item";
    case Block::kTheta: return "theta";
    case Block::kBeta: return "beta";
  }
  return "?";
}

struct BlockEvent {
  std::size_t sweep;
  Block block;
  std::size_t index;
};

// Called after every single block update. Setting one forces sequential
// execution so the observer sees each intermediate state.
using BlockObserver = std::function<void(const BlockEvent&, const ModelState&)>;

struct TrainOptions {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  double init_stddev = 1e-3;
  BlockObserver observer;
};

struct TraceRow {
  std::size_t sweep;
  double log_likelihood;
  double delta;
};

struct TrainResult {
  ModelState state;
  std::vector<TraceRow> trace;
  bool converged = false;
};

class Trainer {
 public:
  Trainer(const TopicModel& init, AttentionEdgeSet edges, const RatingView& ratings,
          const Corpus& corpus, Hyperparams hp, TrainOptions opt = {})
      : ratings_(ratings), corpus_(corpus), hp_(std::move(hp)), opt_(std::move(opt)) {
    hp_.validate();
    const auto k = static_cast<Eigen::Index>(hp_.k);
    if (init.theta.cols() != k || init.beta.rows() != k)
      throw InputError("topic model has " + std::to_string(init.theta.cols()) +
                       " topics but k = " + std::to_string(hp_.k));
    if (static_cast<std::size_t>(init.theta.rows()) != corpus.num_docs() ||
        static_cast<std::size_t>(init.beta.cols()) != corpus.vocab_size())
      throw InputError("topic model does not match the corpus");
    if (ratings.num_items() != corpus.num_docs() || ratings.num_edges() != edges.num_edges())
      throw InputError("ratings do not match the corpus or attention edges");

    std::mt19937_64 rng(opt_.seed);
    std::normal_distribution<double> noise(0.0, opt_.init_stddev);
    auto draw = [&](auto& m) {
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = noise(rng);
    };
    const auto n = static_cast<Eigen::Index>(edges.num_users());
    const auto e = static_cast<Eigen::Index>(edges.num_edges());
    state_.edges = std::move(edges);
    state_.u.resize(n, k);
    state_.s.resize(e);
    state_.phi.resize(e, k);
    draw(state_.u);
    draw(state_.s);
    draw(state_.phi);
    state_.theta = init.theta;
    state_.beta = init.beta;
    state_.v = init.theta;
    ll_ = log_likelihood(state_, ratings_, corpus_, hp_);
  }

  const ModelState& state() const { return state_; }
  ModelState& mutable_state() { return state_; }
  const Hyperparams& hyperparams() const { return hp_; }
  double current_log_likelihood() const { return ll_; }
  std::size_t sweeps_done() const { return sweeps_; }
  void set_observer(BlockObserver observer) { opt_.observer = std::move(observer); }

  // One pass phi -> s -> u -> v -> theta -> beta. Returns the new likelihood.
  double sweep() {
    const std::size_t sweep_no = sweeps_ + 1;
    const std::size_t threads = opt_.observer ? 1 : opt_.threads;
    auto phase = [&](Block block, std::size_t count, auto&& update) {
      try {
        if (opt_.observer) {
          for (std::size_t n = 0; n < count; ++n) {
            update(n);
            opt_.observer({sweep_no, block, n}, state_);
          }
        } else {
          parallel_for(count, threads, update);
        }
      } catch (const NumericError& err) {
        throw NumericError("sweep " + std::to_string(sweep_no) + ", " + block_name(block) +
                           " block: " + err.what());
      }
    };

    const Matrix gram_r = weighted_gram(state_.v, hp_.b_r);
    phase(Block::kAttention, state_.edges.num_edges(), [&](std::size_t e) {
      state_.phi.row(static_cast<Eigen::Index>(e)) =
          update_attention(static_cast<EdgeId>(e), state_, ratings_, hp_, gram_r).transpose();
    });
    phase(Block::kInfluence, state_.edges.num_edges(), [&](std::size_t e) {
      state_.s(static_cast<Eigen::Index>(e)) = update_influence(static_cast<EdgeId>(e), state_, hp_);
    });
    phase(Block::kInterest, state_.num_users(), [&](std::size_t i) {
      state_.u.row(static_cast<Eigen::Index>(i)) =
          update_user_interest(static_cast<UserId>(i), state_, hp_).transpose();
    });
    const Matrix gram_phi = weighted_gram(state_.phi, hp_.b_r);
    phase(Block::kItem, state_.num_items(), [&](std::size_t j) {
      state_.v.row(static_cast<Eigen::Index>(j)) =
          update_item(static_cast<ItemId>(j), state_, ratings_, hp_, gram_phi).transpose();
    });
    if (hp_.theta_mode == ThetaMode::kOptimize) {
      phase(Block::kTheta, state_.num_items(), [&](std::size_t j) {
        state_.theta.row(static_cast<Eigen::Index>(j)) =
            update_theta(static_cast<ItemId>(j), state_, corpus_, hp_).transpose();
      });
      phase(Block::kBeta, 1, [&](std::size_t) {
        state_.beta = update_beta(responsibilities(state_.theta, state_.beta, corpus_), corpus_,
                                  hp_.k);
      });
    }

    try {
      ll_ = log_likelihood(state_, ratings_, corpus_, hp_);
    } catch (const NumericError& err) {
      throw NumericError("sweep " + std::to_string(sweep_no) + ": " + err.what());
    }
    sweeps_ = sweep_no;
    return ll_;
  }

  // Sweeps until the relative improvement drops below tol or max_sweeps.
  TrainResult run() {
    TrainResult result;
    result.trace.push_back({sweeps_, ll_, 0.0});
    while (sweeps_ < hp_.max_sweeps) {
      const double before = ll_;
      const double after = sweep();
      const double delta = after - before;
      result.trace.push_back({sweeps_, after, delta});
      const double scale = before != 0 ? std::abs(before) : 1.0;
      if (std::abs(delta) / scale < hp_.tol) {
        result.converged = true;
        break;
      }
    }
    result.state = state_;
    return result;
  }

 private:
  const RatingView& ratings_;
  const Corpus& corpus_;
  Hyperparams hp_;
  TrainOptions opt_;
  ModelState state_;
  double ll_ = 0;
  std::size_t sweeps_ = 0;
};

inline TrainResult train(const TopicModel& init, const AttentionEdgeSet& edges,
                         const RatingView& ratings, const Corpus& corpus, const Hyperparams& hp,
                         TrainOptions opt = {}) {
  Trainer trainer(init, edges, ratings, corpus, hp, std::move(opt));
  return trainer.run();
}

}  // namespace lactr
