#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "lactr/corpus.hpp"
#include "lactr/hyperparams.hpp"
#include "lactr/model.hpp"
#include "lactr/social.hpp"

namespace lactr {

struct ErdosRenyi {
  double p = 0.1;  // each ordered pair (i follows l) independently
};

struct Preferential {
  std::size_t m = 3;  // followees per arriving user, proportional to in-degree + 1
};

struct ThresholdRule {
  double tau = 0.5;  // r_ijl > tau is a positive
};

struct TopKRule {
  std::size_t kappa = 5;  // the kappa largest r_ijl per edge are positives
};

using GraphModel = std::variant<ErdosRenyi, Preferential>;
using AdoptionRule = std::variant<ThresholdRule, TopKRule>;

struct SynthConfig {
  std::size_t n_users = 30;
  std::size_t n_items = 50;
  std::size_t k = 5;
  std::size_t vocab_size = 200;
  std::size_t doc_length = 50;
  GraphModel graph = ErdosRenyi{0.1};
  Hyperparams hp;  // precisions and confidences of the generative process
  AdoptionRule adoption = ThresholdRule{0.5};
  double alpha = 1.0;  // Dirichlet prior of theta_j
  double eta = 0.1;    // Dirichlet prior of beta_k
  std::size_t neg_samples = 0;
  // Precision of the real-valued rating noise; <= 0 means hp.a_r.
  double rating_precision = 0.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_users == 0 || n_items == 0 || k == 0 || vocab_size == 0 || doc_length == 0)
      throw InputError("synthetic config counts must all be positive");
    if (!(alpha > 0) || !(eta > 0)) throw InputError("Dirichlet priors must be positive");
    Hyperparams check = hp;
    check.k = k;
    check.validate();
    if (const auto* er = std::get_if<ErdosRenyi>(&graph); er && !(er->p >= 0 && er->p <= 1))
      throw InputError("Erdos-Renyi edge probability must lie in [0, 1]");
    if (const auto* pa = std::get_if<Preferential>(&graph); pa && pa->m == 0)
      throw InputError("preferential attachment needs m >= 1");
    if (const auto* t = std::get_if<ThresholdRule>(&adoption); t && std::isnan(t->tau))
      throw InputError("adoption threshold must be a number");
    if (const auto* top = std::get_if<TopKRule>(&adoption); top && top->kappa == 0)
      throw InputError("top-k adoption needs kappa >= 1");
  }
};

struct SynthDataset {
  std::vector<RawDocument> documents;
  Corpus corpus;  // vocabulary w0..w{M-1} in id order
  std::vector<std::string> user_names;
  FollowerGraph graph;
  VoteLog votes;
  SourceAttribution true_sources;  // exactly one source per vote
  ModelState truth;
  double positive_rate = 0;  // votes / (users * items)
};

namespace detail {

inline Vector sample_dirichlet(std::mt19937_64& rng, std::size_t dim, double concentration) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Vector x(static_cast<Eigen::Index>(dim));
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (Eigen::Index d = 0; d < x.size(); ++d) x(d) = gamma(rng);
    const double total = x.sum();
    if (total > 0 && std::isfinite(total)) return x / total;
  }
  x.setConstant(1.0 / static_cast<double>(dim));
  return x;
}

inline FollowerGraph sample_graph(std::mt19937_64& rng, std::size_t n, const GraphModel& model) {
  FollowerGraph g(n);
  if (const auto* er = std::get_if<ErdosRenyi>(&model)) {
    std::bernoulli_distribution coin(er->p);
    for (UserId i = 0; i < n; ++i)
      for (UserId l = 0; l < n; ++l)
        if (i != l && coin(rng)) g.add_edge(i, l);
    return g;
  }
  const std::size_t m = std::get<Preferential>(model).m;
  std::vector<double> weight;
  for (UserId i = 0; i < n; ++i) {
    const std::size_t want = std::min<std::size_t>(m, i);
    std::vector<UserId> picks;
    while (picks.size() < want) {
      std::discrete_distribution<UserId> pick(weight.begin(), weight.end());
      const UserId l = pick(rng);
      if (std::find(picks.begin(), picks.end(), l) != picks.end()) continue;
      picks.push_back(l);
    }
    for (UserId l : picks) {
      g.add_edge(i, l);
      weight[l] += 1.0;
    }
    weight.push_back(1.0);
  }
  return g;
}

}  // namespace detail

// Samples topics, documents, a follower graph and all latents from the
// generative process, draws real-valued ratings r_ijl ~ N(phi_il . v_j, 1/c)
// on every attention edge and binarizes them with the adoption rule. A
// positive on edge (i, l) only becomes a vote once l has voted; votes through
// the self edge happen at time 0, and a vote through l at t(l) + 1.
inline SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const auto k = static_cast<Eigen::Index>(cfg.k);
  const auto m = static_cast<Eigen::Index>(cfg.vocab_size);
  const auto n_items = static_cast<Eigen::Index>(cfg.n_items);
  const Hyperparams& hp = cfg.hp;

  SynthDataset out;
  ModelState& truth = out.truth;

  truth.beta.resize(k, m);
  for (Eigen::Index t = 0; t < k; ++t)
    truth.beta.row(t) = detail::sample_dirichlet(rng, cfg.vocab_size, cfg.eta).transpose();

  truth.theta.resize(n_items, k);
  truth.v.resize(n_items, k);
  std::vector<std::string> vocab_words;
  for (Eigen::Index w = 0; w < m; ++w) vocab_words.push_back("w" + std::to_string(w));
  std::vector<std::discrete_distribution<Eigen::Index>> word_dist;
  for (Eigen::Index t = 0; t < k; ++t)
    word_dist.emplace_back(truth.beta.row(t).data(), truth.beta.row(t).data() + m);

  const double item_sd = 1.0 / std::sqrt(hp.lambda_v);
  for (Eigen::Index j = 0; j < n_items; ++j) {
    truth.theta.row(j) = detail::sample_dirichlet(rng, cfg.k, cfg.alpha).transpose();
    for (Eigen::Index t = 0; t < k; ++t) truth.v(j, t) = truth.theta(j, t) + item_sd * std_normal(rng);
    std::discrete_distribution<Eigen::Index> topic(truth.theta.row(j).data(),
                                                   truth.theta.row(j).data() + k);
    RawDocument doc{"d" + std::to_string(j), {}};
    for (std::size_t n = 0; n < cfg.doc_length; ++n)
      doc.tokens.push_back(vocab_words[static_cast<std::size_t>(word_dist[topic(rng)](rng))]);
    out.documents.push_back(std::move(doc));
  }
  out.corpus = to_corpus(out.documents, Vocabulary(vocab_words));

  for (UserId i = 0; i < cfg.n_users; ++i) out.user_names.push_back("u" + std::to_string(i));
  out.graph = detail::sample_graph(rng, cfg.n_users, cfg.graph);
  truth.edges = build_attention_edges(out.graph, cfg.neg_samples, rng(), {hp.a_phi, hp.b_phi});

  const auto n_users = static_cast<Eigen::Index>(cfg.n_users);
  const auto n_edges = static_cast<Eigen::Index>(truth.edges.num_edges());
  truth.u.resize(n_users, k);
  const double u_sd = 1.0 / std::sqrt(hp.lambda_u);
  for (Eigen::Index i = 0; i < n_users; ++i)
    for (Eigen::Index t = 0; t < k; ++t) truth.u(i, t) = u_sd * std_normal(rng);
  truth.s.resize(n_edges);
  truth.phi.resize(n_edges, k);
  const double s_sd = 1.0 / std::sqrt(hp.lambda_s);
  for (EdgeId e = 0; e < n_edges; ++e) {
    truth.s(e) = s_sd * std_normal(rng);
    const double phi_sd = 1.0 / std::sqrt(truth.edges.confidence(e) * hp.lambda_phi);
    const auto i = truth.edges.source(e);
    for (Eigen::Index t = 0; t < k; ++t)
      truth.phi(e, t) = truth.s(e) * truth.u(i, t) + phi_sd * std_normal(rng);
  }

  const double precision = cfg.rating_precision > 0 ? cfg.rating_precision : hp.a_r;
  const double r_sd = 1.0 / std::sqrt(precision);
  const Matrix mean = truth.phi * truth.v.transpose();  // E x D
  Matrix r(n_edges, n_items);
  for (Eigen::Index e = 0; e < n_edges; ++e)
    for (Eigen::Index j = 0; j < n_items; ++j) r(e, j) = mean(e, j) + r_sd * std_normal(rng);

  // positive[e] = items with r_ijl above the adoption cut on edge e
  std::vector<std::vector<ItemId>> positive(static_cast<std::size_t>(n_edges));
  if (const auto* rule = std::get_if<ThresholdRule>(&cfg.adoption)) {
    for (Eigen::Index e = 0; e < n_edges; ++e)
      for (Eigen::Index j = 0; j < n_items; ++j)
        if (r(e, j) > rule->tau) positive[static_cast<std::size_t>(e)].push_back(static_cast<ItemId>(j));
  } else {
    const std::size_t kappa = std::min<std::size_t>(std::get<TopKRule>(cfg.adoption).kappa, cfg.n_items);
    for (Eigen::Index e = 0; e < n_edges; ++e) {
      for (auto j : top_indices(r.row(e), kappa))
        positive[static_cast<std::size_t>(e)].push_back(static_cast<ItemId>(j));
      std::sort(positive[static_cast<std::size_t>(e)].begin(), positive[static_cast<std::size_t>(e)].end());
    }
  }

  // Per item, breadth-first adoption cascade over positive edges.
  out.votes.n_users = cfg.n_users;
  out.votes.n_items = cfg.n_items;
  std::vector<std::vector<EdgeId>> edges_by_item(cfg.n_items);
  for (EdgeId e = 0; e < n_edges; ++e)
    for (ItemId j : positive[e]) edges_by_item[j].push_back(e);
  constexpr auto kNever = std::numeric_limits<Timestamp>::max();
  for (ItemId j = 0; j < cfg.n_items; ++j) {
    std::vector<Timestamp> when(cfg.n_users, kNever);
    std::vector<UserId> source(cfg.n_users, 0);
    for (EdgeId e : edges_by_item[j]) {
      const UserId i = truth.edges.source(e);
      if (truth.edges.target(e) == i) {
        when[i] = 0;
        source[i] = i;
      }
    }
    for (Timestamp t = 0;; ++t) {
      bool grew = false;
      for (EdgeId e : edges_by_item[j]) {
        const UserId i = truth.edges.source(e);
        const UserId l = truth.edges.target(e);
        if (when[i] == kNever && when[l] == t) {
          when[i] = t + 1;
          source[i] = l;
          grew = true;
        }
      }
      if (!grew) break;
    }
    for (UserId i = 0; i < cfg.n_users; ++i) {
      if (when[i] == kNever) continue;
      out.votes.votes.push_back({i, j, when[i]});
      out.true_sources.push_back({i, j, {source[i]}});
    }
  }
  std::sort(out.true_sources.begin(), out.true_sources.end(),
            [](const Attribution& a, const Attribution& b) {
              return a.user != b.user ? a.user < b.user : a.item < b.item;
            });
  out.positive_rate = static_cast<double>(out.votes.votes.size()) /
                      static_cast<double>(cfg.n_users * cfg.n_items);
  return out;
}

// Bisection on the adoption threshold until the vote density is within
// `tolerance` of `target_rate`. Latent draws do not depend on tau, so every
// probe shares the same ground truth.
inline double tune_threshold(SynthConfig cfg, double target_rate, double tolerance = 1e-3,
                             std::size_t max_probes = 60) {
  if (!(target_rate > 0 && target_rate < 1)) throw InputError("target rate must lie in (0, 1)");
  double lo = -1.0;
  double hi = 1.0;
  auto rate_at = [&](double tau) {
    cfg.adoption = ThresholdRule{tau};
    return generate(cfg).positive_rate;
  };
  while (rate_at(lo) < target_rate && lo > -1e6) lo *= 2;
  while (rate_at(hi) > target_rate && hi < 1e6) hi *= 2;
  double tau = 0.5 * (lo + hi);
  for (std::size_t probe = 0; probe < max_probes; ++probe) {
    tau = 0.5 * (lo + hi);
    const double rate = rate_at(tau);
    if (std::abs(rate - target_rate) <= tolerance) break;
    if (rate > target_rate)
      lo = tau;
    else
      hi = tau;
  }
  return tau;
}

}  // namespace lactr
