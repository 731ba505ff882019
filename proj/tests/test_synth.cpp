#include <gtest/gtest.h>

#include <cmath>

#include "lactr/synth.hpp"
#include "support.hpp"

using namespace lactr;
namespace lt = lactr::testing;

namespace {

// Sample mean and variance of a set of draws.
std::pair<double, double> moments(const std::vector<double>& x) {
  double mean = 0;
  for (double a : x) mean += a;
  mean /= static_cast<double>(x.size());
  double var = 0;
  for (double a : x) var += (a - mean) * (a - mean);
  return {mean, var / static_cast<double>(x.size() - 1)};
}

}  // namespace

TEST(Synth, Reproducible) {
  const auto cfg = lt::small_synth(3);
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  EXPECT_EQ(a.votes.votes, b.votes.votes);
  EXPECT_EQ(a.truth.phi, b.truth.phi);
  auto other = cfg;
  other.seed = 4;
  EXPECT_NE(generate(other).truth.u, a.truth.u);
}

TEST(Synth, LatentMoments) {
  SynthConfig cfg;
  cfg.n_users = 2000;
  cfg.n_items = 2000;
  cfg.k = 5;
  cfg.hp.k = 5;
  cfg.hp.lambda_u = 4;
  cfg.hp.lambda_v = 25;
  cfg.vocab_size = 20;
  cfg.doc_length = 1;
  cfg.graph = ErdosRenyi{0.0};
  cfg.adoption = ThresholdRule{1e9};
  const auto d = generate(cfg);
  std::vector<double> u(d.truth.u.data(), d.truth.u.data() + d.truth.u.size());
  const Matrix eps = d.truth.v - d.truth.theta;
  std::vector<double> offset(eps.data(), eps.data() + eps.size());
  for (const auto& [x, var] : {std::pair{u, 0.25}, std::pair{offset, 0.04}}) {
    const auto [m, v] = moments(x);
    const double n = static_cast<double>(x.size());
    ASSERT_GE(n, 1e4);
    EXPECT_LT(std::abs(m), 3 * std::sqrt(var / n));
    EXPECT_LT(std::abs(v - var), 3 * var * std::sqrt(2 / n));
  }
  for (Eigen::Index j = 0; j < d.truth.theta.rows(); ++j)
    EXPECT_NEAR(d.truth.theta.row(j).sum(), 1.0, 1e-12);
}

TEST(Synth, SharpAttentionPriorTracksInfluenceTimesInterest) {
  auto cfg = lt::small_synth(2);
  cfg.hp.lambda_phi = 1e6;
  const auto d = generate(cfg);
  double worst = 0, scale = 0;
  for (EdgeId e = 0; e < d.truth.edges.num_edges(); ++e) {
    const Vector mean = d.truth.s(e) * d.truth.u.row(d.truth.edges.source(e)).transpose();
    worst = std::max(worst, (d.truth.phi.row(e).transpose() - mean).cwiseAbs().maxCoeff());
    scale = std::max(scale, mean.cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 0.01 * scale);
}

TEST(Synth, ThresholdExtremes) {
  auto cfg = lt::small_synth(1);
  cfg.adoption = ThresholdRule{1e9};
  const auto none = generate(cfg);
  EXPECT_TRUE(none.votes.votes.empty());
  EXPECT_EQ(none.positive_rate, 0.0);
  cfg.adoption = ThresholdRule{-1e9};
  const auto all = generate(cfg);
  EXPECT_EQ(all.votes.votes.size(), cfg.n_users * cfg.n_items);
  EXPECT_EQ(all.positive_rate, 1.0);
  for (const auto& v : all.votes.votes) EXPECT_EQ(v.time, 0);
}

TEST(Synth, TrueSourcesAreAttributionCandidates) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto cfg = lt::small_synth(seed);
    cfg.adoption = ThresholdRule{0.3};
    const auto d = generate(cfg);
    ASSERT_FALSE(d.votes.votes.empty());
    const auto attribution = attribute_sources(d.votes, d.truth.edges, AttributionRule::kAllEarlier);
    ASSERT_EQ(attribution.size(), d.true_sources.size());
    for (std::size_t n = 0; n < attribution.size(); ++n) {
      const auto& truth = d.true_sources[n];
      ASSERT_EQ(truth.sources.size(), 1u);
      ASSERT_EQ(attribution[n].user, truth.user);
      ASSERT_EQ(attribution[n].item, truth.item);
      const auto& cand = attribution[n].sources;
      EXPECT_TRUE(std::find(cand.begin(), cand.end(), truth.sources[0]) != cand.end());
      EXPECT_TRUE(d.truth.edges.find(truth.user, truth.sources[0]).has_value());
    }
  }
}

TEST(Synth, TopKGivesEverySelfEdgeKappaVotes) {
  auto cfg = lt::small_synth(5);
  cfg.adoption = TopKRule{4};
  const auto d = generate(cfg);
  for (auto n : d.votes.votes_per_user()) EXPECT_GE(n, 4u);
}

TEST(Synth, PreferentialAttachmentDegrees) {
  auto cfg = lt::small_synth(6);
  cfg.graph = Preferential{3};
  const auto d = generate(cfg);
  for (UserId i = 0; i < cfg.n_users; ++i) {
    EXPECT_EQ(d.graph.followees(i).size(), std::min<std::size_t>(3, i));
    for (UserId l : d.graph.followees(i)) EXPECT_LT(l, i);
  }
}

TEST(Synth, TuneThresholdHitsTarget) {
  auto cfg = lt::small_synth(7);
  const double tau = tune_threshold(cfg, 0.05, 2e-3);
  cfg.adoption = ThresholdRule{tau};
  EXPECT_NEAR(generate(cfg).positive_rate, 0.05, 2e-3);
  EXPECT_THROW(tune_threshold(cfg, 0.0), InputError);
}

TEST(Synth, RejectsBadConfig) {
  auto cfg = lt::small_synth(1);
  cfg.n_users = 0;
  EXPECT_THROW(generate(cfg), InputError);
  cfg = lt::small_synth(1);
  cfg.graph = ErdosRenyi{1.5};
  EXPECT_THROW(generate(cfg), InputError);
  cfg = lt::small_synth(1);
  cfg.adoption = TopKRule{0};
  EXPECT_THROW(generate(cfg), InputError);
  cfg = lt::small_synth(1);
  cfg.hp.b_phi = 2;
  EXPECT_THROW(generate(cfg), InputError);
}
