#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lactr/config.hpp"
#include "lactr/corpus.hpp"
#include "lactr/ctr.hpp"
#include "lactr/eval.hpp"
#include "lactr/io.hpp"
#include "lactr/model.hpp"
#include "lactr/social.hpp"
#include "lactr/synth.hpp"
#include "lactr/topics.hpp"

namespace lactr::cmd {

namespace fs = std::filesystem;
using io::json;

// Layout of a prepared dataset directory.
struct DatasetFiles {
  static constexpr const char* kVocab = "vocab.txt";
  static constexpr const char* kBow = "bow.txt";
  static constexpr const char* kUsers = "users.txt";
  static constexpr const char* kVotes = "votes.tsv";
  static constexpr const char* kEdges = "edges.tsv";
  static constexpr const char* kAttribution = "attribution.tsv";
  static constexpr const char* kStats = "stats.txt";
};

struct PreparedData {
  Corpus corpus;
  std::vector<std::string> users;
  FollowerGraph graph;
  VoteLog votes;

  std::vector<std::string> item_names() const {
    std::vector<std::string> names;
    for (const auto& doc : corpus.documents) names.push_back(doc.item_id);
    return names;
  }
};

inline fs::path require_path(const RunConfig& cfg, const std::string& key) {
  const auto& value = cfg.get(key);
  if (value.empty()) throw InputError("missing required setting '" + key + "'");
  return fs::path(value);
}

inline fs::path require_file(const RunConfig& cfg, const std::string& key) {
  auto path = require_path(cfg, key);
  if (!fs::is_regular_file(path))
    throw InputError(key + " file '" + path.string() + "' does not exist");
  return path;
}

inline fs::path require_dir(const RunConfig& cfg, const std::string& key) {
  auto path = require_path(cfg, key);
  if (!fs::is_directory(path))
    throw InputError(key + " directory '" + path.string() + "' does not exist");
  return path;
}

inline fs::path sibling(const fs::path& file, const std::string& suffix) {
  fs::path p = file;
  p.replace_extension();
  return fs::path(p.string() + suffix);
}

// manifest.json: command, version, config hash and the full configuration.
// Carries no wall-clock fields so identical runs give identical bytes.
inline void write_manifest(const fs::path& path, const std::string& command, const RunConfig& cfg) {
  json values = json::object();
  for (const auto& [key, value] : cfg.values()) values[key] = value;
  io::save_json(path, json{{"command", command},
                           {"version", kVersion},
                           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                         std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                         std::to_string(EIGEN_MINOR_VERSION)},
                           {"config_hash", cfg.hash()},
                           {"seed", cfg.get("seed")},
                           {"config", std::move(values)}});
}

template <typename T>
void write_file(const fs::path& path, T&& writer) {
  auto out = io::open_out(path);
  writer(out);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

struct PrepStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t votes = 0;
  std::size_t vocab_size = 0;
  std::size_t follow_edges = 0;
  std::size_t attention_edges = 0;
  std::size_t exogenous_votes = 0;
  std::size_t dropped_votes = 0;
  std::size_t dropped_edges = 0;
  double positive_rate = 0;
};

inline void write_stats(std::ostream& os, const PrepStats& s) {
  os << "users=" << s.users << '\n'
     << "items=" << s.items << '\n'
     << "votes=" << s.votes << '\n'
     << "vocab_size=" << s.vocab_size << '\n'
     << "follow_edges=" << s.follow_edges << '\n'
     << "attention_edges=" << s.attention_edges << '\n'
     << "exogenous_votes=" << s.exogenous_votes << '\n'
     << "dropped_votes=" << s.dropped_votes << '\n'
     << "dropped_edges=" << s.dropped_edges << '\n';
  const auto old = os.precision(6);
  os << "positive_rate=" << s.positive_rate << '\n';
  os.precision(old);
}

// Builds the vocabulary, applies the activity filters, attributes votes to
// sources and writes the prepared dataset directory.
inline PrepStats cmd_prep(const RunConfig& cfg, std::ostream& log) {
  const auto items_path = require_file(cfg, "items");
  const auto votes_path = require_file(cfg, "votes");
  const auto edges_path = require_file(cfg, "edges");
  const auto out = require_path(cfg, "out");
  const auto top_m = cfg.get_count("top_m");
  const auto min_votes = cfg.get_count("min_votes");
  const auto min_words = cfg.get_count("min_words");
  const auto neg_samples = cfg.get_count("neg_samples");
  const auto seed = cfg.get_count("seed");
  const auto rule = cfg.attribution_rule();
  const Hyperparams hp = cfg.hyperparams();

  const auto raw_items = io::read_items(items_path);
  const auto raw_votes = io::read_votes(votes_path);
  const auto raw_edges = io::read_edges(edges_path);
  if (raw_votes.empty()) throw InputError("no votes in '" + votes_path.string() + "'");
  if (raw_items.empty()) throw InputError("no items in '" + items_path.string() + "'");

  Corpus full = to_corpus(raw_items, build_vocabulary(raw_items, top_m));

  std::set<std::string> user_set;
  for (const auto& v : raw_votes) user_set.insert(v.user);
  const std::vector<std::string> all_users(user_set.begin(), user_set.end());
  std::map<std::string, UserId> user_index;
  for (UserId i = 0; i < all_users.size(); ++i) user_index[all_users[i]] = i;
  std::map<std::string, ItemId> item_index;
  for (ItemId j = 0; j < full.num_docs(); ++j) item_index[full.documents[j].item_id] = j;

  PrepStats stats;
  VoteLog log_all{all_users.size(), full.num_docs(), {}};
  for (const auto& v : raw_votes) {
    auto it = item_index.find(v.item);
    if (it == item_index.end()) {
      ++stats.dropped_votes;
      continue;
    }
    log_all.votes.push_back({user_index.at(v.user), it->second, v.time});
  }

  FollowerGraph graph_all(all_users.size());
  for (const auto& e : raw_edges) {
    auto a = user_index.find(e.follower);
    auto b = user_index.find(e.followee);
    if (a == user_index.end() || b == user_index.end() || a->second == b->second) {
      ++stats.dropped_edges;
      continue;
    }
    graph_all.add_edge(a->second, b->second);
  }

  auto filtered = filter_activity(full, log_all, min_votes, min_words);
  FollowerGraph graph = graph_all.induced(filtered.kept_users);
  std::vector<std::string> users;
  for (UserId old : filtered.kept_users) users.push_back(all_users[old]);

  const auto edges = build_attention_edges(graph, neg_samples, seed, {hp.a_phi, hp.b_phi});
  const auto attribution = attribute_sources(filtered.votes, edges, rule);

  stats.users = users.size();
  stats.items = filtered.corpus.num_docs();
  stats.votes = filtered.votes.votes.size();
  stats.vocab_size = filtered.corpus.vocab_size();
  stats.follow_edges = graph.num_edges();
  stats.attention_edges = edges.num_edges();
  for (const auto& a : attribution)
    if (a.sources.size() == 1 && a.sources[0] == a.user) ++stats.exogenous_votes;
  stats.positive_rate = stats.users && stats.items
                            ? static_cast<double>(stats.votes) /
                                  (static_cast<double>(stats.users) * static_cast<double>(stats.items))
                            : 0.0;

  PreparedData data{std::move(filtered.corpus), users, graph, filtered.votes};
  const auto items = data.item_names();
  fs::create_directories(out);
  write_file(out / DatasetFiles::kVocab, [&](auto& os) { io::write_vocabulary(os, data.corpus.vocabulary); });
  write_file(out / DatasetFiles::kBow, [&](auto& os) { io::write_bow(os, data.corpus); });
  write_file(out / DatasetFiles::kUsers, [&](auto& os) { io::write_names(os, users); });
  write_file(out / DatasetFiles::kVotes, [&](auto& os) {
    std::vector<io::NamedVote> named;
    for (const auto& v : data.votes.votes) named.push_back({users[v.user], items[v.item], *v.time});
    io::write_votes(os, named);
  });
  write_file(out / DatasetFiles::kEdges, [&](auto& os) {
    std::vector<io::NamedEdge> named;
    for (UserId i = 0; i < graph.size(); ++i)
      for (UserId l : graph.followees(i)) named.push_back({users[i], users[l]});
    io::write_edges(os, named);
  });
  write_file(out / DatasetFiles::kAttribution,
             [&](auto& os) { io::write_attribution(os, attribution, users, items); });
  write_file(out / DatasetFiles::kStats, [&](auto& os) { write_stats(os, stats); });
  write_manifest(out / "manifest.json", "prep", cfg);

  write_stats(log, stats);
  return stats;
}

inline PreparedData load_prepared(const fs::path& dir) {
  PreparedData data;
  data.corpus = io::read_bow(dir / DatasetFiles::kBow, io::read_vocabulary(dir / DatasetFiles::kVocab));
  data.users = io::read_names(dir / DatasetFiles::kUsers);
  std::map<std::string, UserId> user_index;
  for (UserId i = 0; i < data.users.size(); ++i)
    if (!user_index.emplace(data.users[i], i).second)
      throw InputError("duplicate user '" + data.users[i] + "' in " + DatasetFiles::kUsers);
  std::map<std::string, ItemId> item_index;
  for (ItemId j = 0; j < data.corpus.num_docs(); ++j) item_index[data.corpus.documents[j].item_id] = j;

  auto lookup = [](const auto& index, const std::string& key, const char* what) {
    auto it = index.find(key);
    if (it == index.end()) throw InputError(std::string("unknown ") + what + " '" + key + "'");
    return it->second;
  };
  data.votes = VoteLog{data.users.size(), data.corpus.num_docs(), {}};
  for (const auto& v : io::read_votes(dir / DatasetFiles::kVotes))
    data.votes.votes.push_back(
        {lookup(user_index, v.user, "user"), lookup(item_index, v.item, "item"), v.time});
  data.graph = FollowerGraph(data.users.size());
  for (const auto& e : io::read_edges(dir / DatasetFiles::kEdges))
    data.graph.add_edge(lookup(user_index, e.follower, "user"), lookup(user_index, e.followee, "user"));
  return data;
}

inline TopicModel topics_for(const RunConfig& cfg, const PreparedData& data) {
  const auto& lda_path = cfg.get("lda");
  TopicModel tm = lda_path.empty() ? fit_lda(data.corpus, cfg.lda_options())
                                   : io::topic_model_from_json(io::load_json(lda_path));
  if (tm.k != cfg.get_count("k"))
    throw InputError("topic model has " + std::to_string(tm.k) + " topics but k = " + cfg.get("k"));
  if (static_cast<std::size_t>(tm.theta.rows()) != data.corpus.num_docs() ||
      static_cast<std::size_t>(tm.beta.cols()) != data.corpus.vocab_size())
    throw InputError("topic model does not match the dataset");
  return tm;
}

inline void cmd_lda_init(const RunConfig& cfg, std::ostream& log) {
  const auto data = load_prepared(require_dir(cfg, "data"));
  const auto out = require_path(cfg, "out");
  const TopicModel tm = fit_lda(data.corpus, cfg.lda_options());
  io::save_json(out, io::topic_model_to_json(tm));
  write_file(sibling(out, ".topics.txt"), [&](auto& os) {
    write_topic_dump(os, tm.beta, data.corpus.vocabulary, cfg.get_count("top_n"));
  });
  write_manifest(sibling(out, ".manifest.json"), "lda-init", cfg);
  log << "fitted " << tm.k << " topics on " << data.corpus.num_docs() << " items\n";
}

inline void cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto data_dir = require_dir(cfg, "data");
  const auto out = require_path(cfg, "out");
  if (!cfg.get("lda").empty()) require_file(cfg, "lda");
  const Hyperparams hp = cfg.hyperparams();
  const auto kind = parse_model_kind(cfg.get("model_kind"));
  if (kind != ModelKind::kLaCtr && kind != ModelKind::kCtr)
    throw InputError("train supports model_kind lactr or ctr");

  const auto data = load_prepared(data_dir);
  const TopicModel tm = topics_for(cfg, data);
  TrainOptions opt;
  opt.seed = cfg.get_count("seed");
  opt.threads = cfg.get_count("threads");

  std::vector<TraceRow> trace;
  if (kind == ModelKind::kLaCtr) {
    const auto edges =
        build_attention_edges(data.graph, cfg.get_count("neg_samples"), opt.seed, {hp.a_phi, hp.b_phi});
    const auto attribution = attribute_sources(data.votes, edges, cfg.attribution_rule());
    const auto ratings = RatingView::from_attribution(edges, attribution, data.corpus.num_docs());
    auto result = train(tm, edges, ratings, data.corpus, hp, opt);
    trace = std::move(result.trace);
    io::save_json(out, io::model_to_json(result.state, hp));
  } else {
    const auto ratings =
        user_item_ratings(data.votes.n_users, data.votes.n_items, vote_pairs(data.votes));
    auto result = train_ctr(tm, ratings, data.corpus, hp, opt);
    trace = std::move(result.trace);
    io::save_json(out, io::model_to_json(result.state, hp));
  }
  write_file(sibling(out, ".trace.csv"), [&](auto& os) { io::write_trace(os, trace); });
  write_manifest(sibling(out, ".manifest.json"), "train", cfg);
  log << "trained " << cfg.get("model_kind") << " for " << (trace.empty() ? 0 : trace.back().sweep)
      << " sweeps, log likelihood " << (trace.empty() ? 0.0 : trace.back().log_likelihood) << '\n';
}

inline std::vector<ModelSpec> model_specs(const RunConfig& cfg, const std::string& suffix = "") {
  std::vector<ModelSpec> specs;
  const Hyperparams hp = cfg.hyperparams();
  const auto aggregation = parse_aggregation(cfg.get("aggregation"));
  for (const auto& name : cfg.list("models")) {
    ModelSpec spec;
    spec.kind = parse_model_kind(name);
    spec.name = name + suffix;
    spec.hp = hp;
    spec.aggregation = aggregation;
    if (spec.kind == ModelKind::kLaCtr) spec.latents = {Latent::kInterest, Latent::kAttention};
    specs.push_back(std::move(spec));
  }
  if (specs.empty()) throw InputError("no models selected");
  return specs;
}

// Parses `key=v1,v2,...` into the swept key and its values.
inline std::pair<std::string, std::vector<std::string>> parse_sweep(const std::string& sweep) {
  const auto eq = sweep.find('=');
  if (eq == std::string::npos || eq == 0) throw InputError("sweep must look like key=v1,v2,...");
  std::pair<std::string, std::vector<std::string>> out{sweep.substr(0, eq), {}};
  if (!RunConfig::known(out.first)) throw InputError("cannot sweep unknown key '" + out.first + "'");
  std::stringstream ss(sweep.substr(eq + 1));
  std::string value;
  while (std::getline(ss, value, ','))
    if (!value.empty()) out.second.push_back(value);
  if (out.second.empty()) throw InputError("sweep has no values");
  return out;
}

inline ExperimentResult cmd_eval(const RunConfig& cfg, std::ostream& log) {
  const auto data_dir = require_dir(cfg, "data");
  const auto out = require_path(cfg, "out");
  if (!cfg.get("lda").empty()) require_file(cfg, "lda");
  const auto x_grid = parse_x_grid(cfg.get("x_grid"));
  const auto mode = parse_predict_mode(cfg.get("mode"));

  // Resolve every model configuration before any training starts.
  std::vector<std::pair<RunConfig, std::string>> runs;
  if (cfg.get("sweep").empty()) {
    runs.emplace_back(cfg, "");
  } else {
    const auto [key, values] = parse_sweep(cfg.get("sweep"));
    for (const auto& value : values) {
      RunConfig variant = cfg;
      variant.set(key, value);
      runs.emplace_back(variant, "@" + key + "=" + value);
    }
  }
  std::vector<std::vector<ModelSpec>> specs;
  for (const auto& [variant, suffix] : runs) specs.push_back(model_specs(variant, suffix));

  const auto data = load_prepared(data_dir);
  const auto folds = make_folds(data.votes, cfg.get_count("folds"), mode, cfg.get_count("seed"));

  ExperimentResult all;
  std::map<std::size_t, TopicModel> topics;  // by k
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& variant = runs[r].first;
    const auto k = variant.get_count("k");
    if (!topics.count(k)) topics.emplace(k, topics_for(variant, data));
    ExperimentData exp;
    exp.corpus = &data.corpus;
    exp.graph = &data.graph;
    exp.votes = &data.votes;
    exp.init = &topics.at(k);
    exp.neg_samples = variant.get_count("neg_samples");
    exp.attribution = variant.attribution_rule();
    exp.seed = variant.get_count("seed");
    exp.threads = variant.get_count("threads");
    auto result = run_experiment(exp, specs[r], folds, x_grid);
    all.rows.insert(all.rows.end(), result.rows.begin(), result.rows.end());
    all.per_user.insert(all.per_user.end(), result.per_user.begin(), result.per_user.end());
  }

  write_file(out, [&](auto& os) { write_results_csv(os, all.rows); });
  write_file(sibling(out, ".users.csv"), [&](auto& os) {
    os << "model,latent,fold,user,x,recall\n";
    for (const auto& row : all.per_user)
      os << row.model << ',' << row.latent << ',' << row.fold << ',' << data.users.at(row.user)
         << ',' << row.x << ',' << row.recall << '\n';
  });
  write_manifest(sibling(out, ".manifest.json"), "eval", cfg);
  for (const auto& row : all.rows)
    if (row.fold == kAllFolds)
      log << row.model << ' ' << row.latent << " recall@" << row.x << " = " << row.mean_recall << '\n';
  return all;
}

inline UserId resolve_user(const PreparedData& data, const std::string& name) {
  if (name.empty()) throw InputError("missing required setting 'user'");
  auto it = std::find(data.users.begin(), data.users.end(), name);
  if (it == data.users.end()) throw InputError("unknown user '" + name + "'");
  return static_cast<UserId>(it - data.users.begin());
}

inline void check_dump_matches(const io::ModelDump& dump, const PreparedData& data) {
  const std::size_t n = dump.lactr ? dump.lactr->num_users() : dump.ctr->num_users();
  const std::size_t d = dump.lactr ? dump.lactr->num_items() : dump.ctr->num_items();
  if (n != data.users.size() || d != data.corpus.num_docs())
    throw InputError("model dump does not match the dataset dimensions");
}

// Ranks every item the user has not voted for and writes the top_n with the
// predicted source (attention latent only).
inline void cmd_predict(const RunConfig& cfg, std::ostream& log) {
  const auto data = load_prepared(require_dir(cfg, "data"));
  const auto dump = io::model_from_json(io::load_json(require_file(cfg, "model")));
  check_dump_matches(dump, data);
  const UserId user = resolve_user(data, cfg.get("user"));
  const auto mode = parse_predict_mode(cfg.get("mode"));
  const auto latent = parse_latent(cfg.get("latent"));
  const auto aggregation = parse_aggregation(cfg.get("aggregation"));

  std::set<ItemId> seen;
  for (const auto& v : data.votes.votes)
    if (v.user == user) seen.insert(v.item);
  std::vector<ItemId> pool;
  for (ItemId j = 0; j < data.corpus.num_docs(); ++j)
    if (!seen.count(j)) pool.push_back(j);
  if (pool.empty()) throw InputError("user has voted for every item");

  const Ranking ranking = dump.lactr ? predict_scores(*dump.lactr, user, pool, mode, latent, aggregation)
                                     : predict_scores(*dump.ctr, user, pool, mode, latent);
  const auto items = data.item_names();
  std::ostringstream text;
  text.precision(10);
  text << "rank\titem\tscore\tsource\n";
  const std::size_t top = std::min<std::size_t>(cfg.get_count("top_n"), ranking.size());
  for (std::size_t r = 0; r < top; ++r) {
    text << r + 1 << '\t' << items[ranking[r].item] << '\t' << ranking[r].score << '\t'
         << (ranking[r].source ? data.users[*ranking[r].source] : "-") << '\n';
  }
  if (cfg.get("out").empty()) {
    log << text.str();
  } else {
    const fs::path out = cfg.get("out");
    write_file(out, [&](auto& os) { os << text.str(); });
    write_manifest(sibling(out, ".manifest.json"), "predict", cfg);
  }
}

inline SynthDataset cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const auto out = require_path(cfg, "out");
  SynthConfig sc = cfg.synth_config();
  const double target = cfg.get_double("target_positive_rate");
  if (target > 0) sc.adoption = ThresholdRule{tune_threshold(sc, target)};
  const SynthDataset ds = generate(sc);

  fs::create_directories(out);
  write_file(out / "items.txt", [&](auto& os) { io::write_items(os, ds.documents); });
  write_file(out / "votes.tsv", [&](auto& os) {
    std::vector<io::NamedVote> named;
    for (const auto& v : ds.votes.votes)
      named.push_back({ds.user_names[v.user], ds.documents[v.item].item_id, *v.time});
    io::write_votes(os, named);
  });
  write_file(out / "edges.tsv", [&](auto& os) {
    std::vector<io::NamedEdge> named;
    for (UserId i = 0; i < ds.graph.size(); ++i)
      for (UserId l : ds.graph.followees(i)) named.push_back({ds.user_names[i], ds.user_names[l]});
    io::write_edges(os, named);
  });
  io::save_json(out / "truth.json", io::model_to_json(ds.truth, sc.hp));
  std::vector<std::string> items;
  for (const auto& d : ds.documents) items.push_back(d.item_id);
  write_file(out / "sources.tsv",
             [&](auto& os) { io::write_attribution(os, ds.true_sources, ds.user_names, items); });

  json rule;
  if (const auto* t = std::get_if<ThresholdRule>(&sc.adoption))
    rule = json{{"kind", "threshold"}, {"tau", t->tau}};
  else
    rule = json{{"kind", "topk"}, {"kappa", std::get<TopKRule>(sc.adoption).kappa}};
  io::save_json(out / "metadata.json", json{{"binarization", rule},
                                            {"positive_rate", ds.positive_rate},
                                            {"votes", ds.votes.votes.size()},
                                            {"follow_edges", ds.graph.num_edges()},
                                            {"timestamps", "source at t, adopter at t+1"}});
  write_manifest(out / "manifest.json", "simulate", cfg);
  log << "generated " << ds.votes.votes.size() << " votes (positive rate " << ds.positive_rate
      << ")\n";
  return ds;
}

inline void cmd_inspect(const RunConfig& cfg, std::ostream& log) {
  const auto data = load_prepared(require_dir(cfg, "data"));
  const auto dump = io::model_from_json(io::load_json(require_file(cfg, "model")));
  check_dump_matches(dump, data);
  std::ostringstream text;
  const auto n_words = cfg.get_count("top_n");
  if (cfg.get("user").empty()) {
    const Matrix& beta = dump.lactr ? dump.lactr->beta : dump.ctr->beta;
    write_topic_dump(text, beta, data.corpus.vocabulary, n_words);
  } else {
    if (!dump.lactr) throw InputError("user profiles need an {LA}-CTR model dump");
    ProfileOptions opt;
    opt.words = n_words;
    write_user_profile(text, *dump.lactr, resolve_user(data, cfg.get("user")), data.corpus.vocabulary,
                       data.users, opt);
  }
  if (cfg.get("out").empty()) {
    log << text.str();
  } else {
    write_file(fs::path(cfg.get("out")), [&](auto& os) { os << text.str(); });
  }
}

}  // namespace lactr::cmd
