#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <vector>

#include "lactr/common.hpp"
#include "lactr/corpus.hpp"

namespace lactr {

struct TopicModel {
  Matrix theta;  // D x K, rows on the simplex
  Matrix beta;   // K x M, rows on the simplex
  std::size_t k = 0;
};

struct LdaOptions {
  std::size_t k = 200;
  double alpha = 1.0;
  double eta = 0.01;
  std::size_t iters = 200;
  std::uint64_t seed = 1;
};

// Collapsed Gibbs sampler. Point estimates are read from the final state:
//   theta_jk = (n_jk + alpha) / (W(j) + K alpha)
//   beta_kw  = (n_kw + eta) / (n_k + M eta)
inline TopicModel fit_lda(const Corpus& corpus, const LdaOptions& opt) {
  if (corpus.num_docs() == 0) throw InputError("cannot fit LDA on an empty corpus");
  if (opt.k == 0 || opt.iters == 0) throw InputError("LDA needs k >= 1 and iters >= 1");
  if (!(opt.alpha > 0) || !(opt.eta > 0)) throw InputError("LDA priors must be positive");

  const std::size_t n_docs = corpus.num_docs();
  const std::size_t k = opt.k;
  const std::size_t m = corpus.vocab_size();

  std::vector<std::vector<WordId>> tokens(n_docs);
  for (std::size_t j = 0; j < n_docs; ++j)
    for (const auto& wc : corpus.documents[j].counts)
      tokens[j].insert(tokens[j].end(), wc.count, wc.word);

  std::mt19937_64 rng(opt.seed);
  std::vector<std::vector<std::uint32_t>> z(n_docs);
  std::vector<std::uint32_t> n_dk(n_docs * k, 0);
  std::vector<std::uint32_t> n_kw(k * m, 0);
  std::vector<std::uint32_t> n_k(k, 0);

  std::uniform_int_distribution<std::uint32_t> init(0, static_cast<std::uint32_t>(k - 1));
  for (std::size_t j = 0; j < n_docs; ++j) {
    z[j].resize(tokens[j].size());
    for (std::size_t t = 0; t < tokens[j].size(); ++t) {
      const auto topic = init(rng);
      z[j][t] = topic;
      ++n_dk[j * k + topic];
      ++n_kw[topic * m + tokens[j][t]];
      ++n_k[topic];
    }
  }

  const double m_eta = static_cast<double>(m) * opt.eta;
  std::vector<double> p(k);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t sweep = 0; sweep < opt.iters; ++sweep) {
    for (std::size_t j = 0; j < n_docs; ++j) {
      for (std::size_t t = 0; t < tokens[j].size(); ++t) {
        const WordId w = tokens[j][t];
        const auto old = z[j][t];
        --n_dk[j * k + old];
        --n_kw[old * m + w];
        --n_k[old];

        double total = 0;
        for (std::size_t topic = 0; topic < k; ++topic) {
          total += (n_dk[j * k + topic] + opt.alpha) * (n_kw[topic * m + w] + opt.eta) /
                   (n_k[topic] + m_eta);
          p[topic] = total;
        }
        const double u = unif(rng) * total;
        const auto picked = static_cast<std::uint32_t>(
            std::min<std::size_t>(std::upper_bound(p.begin(), p.end(), u) - p.begin(), k - 1));

        z[j][t] = picked;
        ++n_dk[j * k + picked];
        ++n_kw[picked * m + w];
        ++n_k[picked];
      }
    }
  }

  TopicModel model{Matrix(n_docs, k), Matrix(k, m), k};
  const double k_alpha = static_cast<double>(k) * opt.alpha;
  for (std::size_t j = 0; j < n_docs; ++j) {
    const double len = static_cast<double>(tokens[j].size());
    for (std::size_t topic = 0; topic < k; ++topic)
      model.theta(j, topic) = (n_dk[j * k + topic] + opt.alpha) / (len + k_alpha);
  }
  for (std::size_t topic = 0; topic < k; ++topic)
    for (std::size_t w = 0; w < m; ++w)
      model.beta(topic, w) = (n_kw[topic * m + w] + opt.eta) / (n_k[topic] + m_eta);
  return model;
}

// Word-topic responsibilities for one document: one K-vector per distinct
// word entry (row n pairs with doc.counts[n]). Identical tokens share a row.
using DocResponsibilities = Matrix;

// Optimal responsibilities psi_jmk ∝ theta_jk * beta_k,w_jm for every document.
inline std::vector<DocResponsibilities> responsibilities(const Matrix& theta, const Matrix& beta,
                                                         const Corpus& corpus) {
  std::vector<DocResponsibilities> psi(corpus.num_docs());
  const auto k = beta.rows();
  for (std::size_t j = 0; j < corpus.num_docs(); ++j) {
    const auto& doc = corpus.documents[j];
    psi[j].resize(static_cast<Eigen::Index>(doc.counts.size()), k);
    for (std::size_t n = 0; n < doc.counts.size(); ++n) {
      auto row = psi[j].row(static_cast<Eigen::Index>(n));
      row = theta.row(static_cast<Eigen::Index>(j)).cwiseProduct(
          beta.col(doc.counts[n].word).transpose());
      const double total = row.sum();
      if (total > 0)
        row /= total;
      else
        row.setConstant(1.0 / static_cast<double>(k));
    }
  }
  return psi;
}

// beta_kw ∝ sum_j sum_m psi_jmk [w_jm = w]. Zero-mass rows become uniform.
inline Matrix update_beta(const std::vector<DocResponsibilities>& psi, const Corpus& corpus,
                          std::size_t k) {
  if (psi.size() != corpus.num_docs())
    throw InputError("responsibilities do not match the corpus");
  const auto m = static_cast<Eigen::Index>(corpus.vocab_size());
  Matrix beta = Matrix::Zero(static_cast<Eigen::Index>(k), m);
  for (std::size_t j = 0; j < corpus.num_docs(); ++j) {
    const auto& doc = corpus.documents[j];
    for (std::size_t n = 0; n < doc.counts.size(); ++n)
      beta.col(doc.counts[n].word) +=
          static_cast<double>(doc.counts[n].count) *
          psi[j].row(static_cast<Eigen::Index>(n)).transpose();
  }
  for (Eigen::Index topic = 0; topic < beta.rows(); ++topic) {
    const double total = beta.row(topic).sum();
    if (total > 0)
      beta.row(topic) /= total;
    else
      beta.row(topic).setConstant(1.0 / static_cast<double>(m));
  }
  return beta;
}

// Indices of the `n` largest entries, largest first; ties to the smaller index.
template <typename Row>
std::vector<std::size_t> top_indices(const Row& row, std::size_t n) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(row.size()));
  std::iota(idx.begin(), idx.end(), 0);
  n = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double va = row(static_cast<Eigen::Index>(a));
                      const double vb = row(static_cast<Eigen::Index>(b));
                      return va != vb ? va > vb : a < b;
                    });
  idx.resize(n);
  return idx;
}

// `topic <k>: word:prob ...` with the top `n` words of every topic.
inline void write_topic_dump(std::ostream& os, const Matrix& beta, const Vocabulary& vocab,
                             std::size_t n) {
  const auto old_precision = os.precision(6);
  for (Eigen::Index topic = 0; topic < beta.rows(); ++topic) {
    os << "topic " << topic << ":";
    const auto row = beta.row(topic);
    for (auto w : top_indices(row, n))
      os << ' ' << vocab.word(static_cast<WordId>(w)) << ':' << row(static_cast<Eigen::Index>(w));
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace lactr
