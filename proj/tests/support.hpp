#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "lactr/model.hpp"
#include "lactr/synth.hpp"
#include "lactr/topics.hpp"

namespace lactr::testing {

// A synthetic dataset plus everything training needs.
struct Instance {
  SynthDataset data;
  TopicModel init;
  AttentionEdgeSet edges;
  SourceAttribution attribution;
  RatingView ratings;
};

inline SynthConfig small_synth(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_users = 30;
  cfg.n_items = 50;
  cfg.k = 5;
  cfg.hp.k = 5;
  cfg.hp.lambda_u = 1;
  cfg.hp.lambda_s = 1;
  cfg.vocab_size = 200;
  cfg.doc_length = 50;
  cfg.graph = ErdosRenyi{0.1};
  cfg.adoption = ThresholdRule{1.0};
  cfg.seed = seed;
  return cfg;
}

inline Instance make_instance(const SynthConfig& cfg, const Hyperparams& hp, std::size_t neg_samples,
                              std::size_t lda_iters = 50) {
  SynthDataset data = generate(cfg);
  LdaOptions lda;
  lda.k = hp.k;
  lda.iters = lda_iters;
  lda.seed = cfg.seed;
  TopicModel init = fit_lda(data.corpus, lda);
  auto edges = build_attention_edges(data.graph, neg_samples, cfg.seed, {hp.a_phi, hp.b_phi});
  auto attribution = attribute_sources(data.votes, edges, AttributionRule::kAllEarlier);
  auto ratings = RatingView::from_attribution(edges, attribution, data.corpus.num_docs());
  return Instance{std::move(data), std::move(init), std::move(edges), std::move(attribution),
                  std::move(ratings)};
}

// Largest |d ell / d x| over every component of u, s, phi and v by central
// differences with step h.
inline double max_fd_gradient(ModelState st, const RatingView& ratings, const Corpus& corpus,
                              const Hyperparams& hp, double h = 1e-5) {
  double worst = 0;
  auto probe = [&](double& x) {
    const double keep = x;
    x = keep + h;
    const double up = log_likelihood(st, ratings, corpus, hp);
    x = keep - h;
    const double down = log_likelihood(st, ratings, corpus, hp);
    x = keep;
    worst = std::max(worst, std::abs(up - down) / (2 * h));
  };
  for (Eigen::Index n = 0; n < st.u.size(); ++n) probe(st.u.data()[n]);
  for (Eigen::Index n = 0; n < st.s.size(); ++n) probe(st.s.data()[n]);
  for (Eigen::Index n = 0; n < st.phi.size(); ++n) probe(st.phi.data()[n]);
  for (Eigen::Index n = 0; n < st.v.size(); ++n) probe(st.v.data()[n]);
  return worst;
}

}  // namespace lactr::testing
