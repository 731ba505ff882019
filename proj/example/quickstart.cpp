// Generates a small synthetic dataset, fits both models and compares recall.
#include <iostream>

#include "lactr/eval.hpp"
#include "lactr/synth.hpp"

int main() {
  using namespace lactr;
  SynthConfig cfg;
  cfg.n_users = 30;
  cfg.n_items = 60;
  cfg.k = 5;
  cfg.hp.k = 5;
  cfg.seed = 7;
  const SynthDataset ds = generate(cfg);
  std::cout << ds.votes.votes.size() << " votes, positive rate " << ds.positive_rate << '\n';

  const TopicModel init = fit_lda(ds.corpus, {.k = 5, .alpha = 1, .eta = 0.01, .iters = 100, .seed = 7});
  Hyperparams hp;
  hp.k = 5;
  hp.max_sweeps = 20;

  std::vector<ModelSpec> models = {
      {"lactr", ModelKind::kLaCtr, hp, {Latent::kInterest, Latent::kAttention}, Aggregation::kMax},
      {"ctr", ModelKind::kCtr, hp, {}, Aggregation::kMax},
  };
  ExperimentData data;
  data.corpus = &ds.corpus;
  data.graph = &ds.graph;
  data.votes = &ds.votes;
  data.init = &init;
  data.neg_samples = 0;
  const auto plan = make_folds(ds.votes, 3, PredictMode::kInMatrix, 7);
  const auto result = run_experiment(data, models, plan, {10});
  for (const auto& row : result.rows)
    if (row.fold == kAllFolds)
      std::cout << row.model << ' ' << row.latent << " recall@" << row.x << " = " << row.mean_recall << '\n';
}
