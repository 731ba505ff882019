#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lactr/simplex.hpp"
#include "lactr/topics.hpp"

using namespace lactr;

namespace {

Corpus make_corpus(const std::vector<std::vector<std::string>>& bodies, const std::vector<std::string>& vocab) {
  std::vector<RawDocument> raw;
  for (std::size_t j = 0; j < bodies.size(); ++j) raw.push_back({"d" + std::to_string(j), bodies[j]});
  return to_corpus(raw, Vocabulary(vocab));
}

}  // namespace

TEST(Lda, SingleTopicIsSmoothedFrequency) {
  const auto corpus = make_corpus({{"a", "a", "b"}, {"c", "a"}}, {"a", "b", "c"});
  LdaOptions opt;
  opt.k = 1;
  opt.iters = 5;
  opt.eta = 0.5;
  const auto tm = fit_lda(corpus, opt);
  EXPECT_TRUE((tm.theta.array() == 1.0).all());
  const double total = 5 + 3 * 0.5;
  EXPECT_NEAR(tm.beta(0, 0), (3 + 0.5) / total, 1e-15);
  EXPECT_NEAR(tm.beta(0, 1), (1 + 0.5) / total, 1e-15);
  EXPECT_NEAR(tm.beta(0, 2), (1 + 0.5) / total, 1e-15);
}

TEST(Lda, DefaultPriorIsOne) { EXPECT_EQ(LdaOptions{}.alpha, 1.0); }

TEST(Lda, SeparatesDisjointVocabularies) {
  std::vector<std::string> vocab;
  for (int w = 0; w < 20; ++w) vocab.push_back("w" + std::to_string(w));
  std::mt19937 rng(4);
  std::vector<std::vector<std::string>> bodies;
  std::vector<int> half;
  for (int j = 0; j < 60; ++j) {
    const int h = j % 2;
    half.push_back(h);
    std::vector<std::string> body;
    for (int n = 0; n < 30; ++n) body.push_back(vocab[h * 10 + rng() % 10]);
    bodies.push_back(body);
  }
  const auto corpus = make_corpus(bodies, vocab);
  LdaOptions opt;
  opt.k = 2;
  opt.iters = 200;
  const auto tm = fit_lda(corpus, opt);
  // Label each topic by the vocab half holding most of its mass.
  int topic_half[2];
  for (int k = 0; k < 2; ++k) topic_half[k] = tm.beta.row(k).head(10).sum() > 0.5 ? 0 : 1;
  ASSERT_NE(topic_half[0], topic_half[1]);
  int right = 0;
  for (int j = 0; j < 60; ++j) {
    Eigen::Index dominant;
    tm.theta.row(j).maxCoeff(&dominant);
    right += topic_half[dominant] == half[j];
  }
  EXPECT_GE(right, 57);
}

TEST(Lda, DeterministicUnderSeed) {
  const auto corpus = make_corpus({{"a", "b", "c", "a"}, {"c", "c", "b"}}, {"a", "b", "c"});
  LdaOptions opt;
  opt.k = 2;
  opt.iters = 20;
  const auto x = fit_lda(corpus, opt);
  const auto y = fit_lda(corpus, opt);
  EXPECT_EQ(x.theta, y.theta);
  EXPECT_EQ(x.beta, y.beta);
}

TEST(UpdateBeta, ConcentratedResponsibilities) {
  const auto corpus = make_corpus({{"a", "a", "b"}, {"c"}}, {"a", "b", "c"});
  std::vector<DocResponsibilities> psi;
  for (const auto& doc : corpus.documents) {
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(doc.counts.size()), 3);
    p.col(0).setOnes();
    psi.push_back(p);
  }
  const Matrix beta = update_beta(psi, corpus, 3);
  EXPECT_NEAR(beta(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(beta(0, 1), 0.25, 1e-15);
  EXPECT_NEAR(beta(0, 2), 0.25, 1e-15);
  for (int k = 1; k < 3; ++k)
    for (int w = 0; w < 3; ++w) EXPECT_NEAR(beta(k, w), 1.0 / 3, 1e-15);
}

TEST(UpdateBeta, UniformResponsibilitiesGiveCorpusDistribution) {
  const auto corpus = make_corpus({{"a", "a", "b"}, {"c", "a"}}, {"a", "b", "c"});
  std::vector<DocResponsibilities> psi;
  for (const auto& doc : corpus.documents)
    psi.push_back(Matrix::Constant(static_cast<Eigen::Index>(doc.counts.size()), 2, 0.5));
  const Matrix beta = update_beta(psi, corpus, 2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(beta(k, 0), 0.6, 1e-15);
    EXPECT_NEAR(beta(k, 1), 0.2, 1e-15);
    EXPECT_NEAR(beta(k, 2), 0.2, 1e-15);
  }
}

TEST(UpdateBeta, MatchesDirectSummation) {
  const auto corpus = make_corpus({{"a", "b", "b"}, {"a", "a", "b"}}, {"a", "b"});
  Matrix theta(2, 2);
  theta << 0.3, 0.7, 0.9, 0.1;
  Matrix beta0(2, 2);
  beta0 << 0.6, 0.4, 0.2, 0.8;
  const Matrix beta = update_beta(responsibilities(theta, beta0, corpus), corpus, 2);
  // Token by token: psi_k = theta_k beta_kw / sum.
  Matrix acc = Matrix::Zero(2, 2);
  const std::vector<std::vector<int>> tokens = {{0, 1, 1}, {0, 0, 1}};
  for (int j = 0; j < 2; ++j) {
    for (int w : tokens[j]) {
      const double z = theta(j, 0) * beta0(0, w) + theta(j, 1) * beta0(1, w);
      for (int k = 0; k < 2; ++k) acc(k, w) += theta(j, k) * beta0(k, w) / z;
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double row = acc.row(k).sum();
    for (int w = 0; w < 2; ++w) EXPECT_NEAR(beta(k, w), acc(k, w) / row, 1e-12);
  }
}

TEST(TopicDump, ListsTopWords) {
  Matrix beta(2, 3);
  beta << 0.1, 0.7, 0.2, 0.5, 0.25, 0.25;
  std::ostringstream os;
  write_topic_dump(os, beta, Vocabulary({"x", "y", "z"}), 2);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "topic 0: y:0.7 z:0.2");
}

TEST(Simplex, ProjectionLandsOnSimplex) {
  std::mt19937 rng(2);
  std::normal_distribution<double> g(0, 3);
  for (int n = 0; n < 100; ++n) {
    Vector x(5);
    for (int k = 0; k < 5; ++k) x(k) = g(rng);
    const Vector p = project_to_simplex(x);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    // Projection is idempotent.
    EXPECT_LT((project_to_simplex(p) - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Simplex, FixedPointWithoutOffsetPrior) {
  // One document with a single word: with lambda_v = 0 any theta putting all
  // mass on the word's best topic is optimal.
  const auto corpus = make_corpus({{"a", "a"}}, {"a", "b"});
  Matrix beta(2, 2);
  beta << 0.9, 0.1, 0.2, 0.8;
  Vector start(2);
  start << 1.0, 0.0;
  ThetaObjective obj(corpus.documents[0], beta, start, 0.0);
  EXPECT_EQ(maximize_on_simplex(obj, start), start);
}

TEST(Simplex, MovesTowardDominantTopic) {
  const auto corpus = make_corpus({{"a"}}, {"a", "b"});
  Matrix beta(2, 2);
  beta << 0.9, 0.1, 0.2, 0.8;
  Vector theta(2);
  theta << 0.4, 0.6;
  ThetaObjective obj(corpus.documents[0], beta, theta, 100.0);
  const Vector next = maximize_on_simplex(obj, theta);
  EXPECT_GT(next(0), theta(0));
  EXPECT_GE(obj.value(next), obj.value(theta));
  EXPECT_NEAR(next.sum(), 1.0, 1e-12);
}

TEST(Simplex, MatchesGridOracle) {
  const auto corpus = make_corpus({{"a", "b", "b", "c"}}, {"a", "b", "c"});
  Matrix beta(2, 3);
  beta << 0.6, 0.1, 0.3, 0.1, 0.7, 0.2;
  Vector v(2);
  v << 0.8, -0.1;
  ThetaObjective obj(corpus.documents[0], beta, v, 3.0);
  Vector start(2);
  start << 0.5, 0.5;
  const Vector got = maximize_on_simplex(obj, start);
  double best = -1e300;
  for (int a = 0; a <= 1000; ++a) {
    Vector t(2);
    t << a * 1e-3, 1 - a * 1e-3;
    best = std::max(best, obj.value(t));
  }
  EXPECT_GE(obj.value(got), best - 5e-3);
}

TEST(Simplex, GradientMatchesFiniteDifferences) {
  const auto corpus = make_corpus({{"a", "b", "b", "c"}}, {"a", "b", "c"});
  Matrix beta(3, 3);
  beta << 0.6, 0.1, 0.3, 0.1, 0.7, 0.2, 0.3, 0.3, 0.4;
  Vector v(3);
  v << 0.2, 0.5, 0.1;
  ThetaObjective obj(corpus.documents[0], beta, v, 2.0);
  Vector t(3);
  t << 0.2, 0.5, 0.3;
  const Vector g = obj.gradient(t);
  for (int k = 0; k < 3; ++k) {
    Vector up = t, down = t;
    up(k) += 1e-6;
    down(k) -= 1e-6;
    EXPECT_NEAR(g(k), (obj.value(up) - obj.value(down)) / 2e-6, 1e-6);
  }
}
