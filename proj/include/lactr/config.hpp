#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lactr/common.hpp"
#include "lactr/eval.hpp"
#include "lactr/hyperparams.hpp"
#include "lactr/io.hpp"
#include "lactr/social.hpp"
#include "lactr/synth.hpp"

namespace lactr {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

// Every recognised key with its default. Order is the serialization order.
inline const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = {
      // model
      {"k", "200", "number of topics"},
      {"lambda_u", "0.01", "precision of user interest"},
      {"lambda_v", "100", "precision of item offset"},
      {"lambda_s", "0.01", "precision of influence"},
      {"lambda_phi", "1", "precision of attention around s*u"},
      {"a_r", "1", "confidence of observed ratings"},
      {"b_r", "0.01", "confidence of unobserved ratings"},
      {"a_phi", "1", "attention confidence for followees and self"},
      {"b_phi", "0.01", "attention confidence for other users"},
      {"theta_mode", "optimize", "optimize or frozen"},
      {"max_sweeps", "100", "maximum coordinate-ascent sweeps"},
      {"tol", "1e-6", "relative log-likelihood tolerance"},
      {"model_kind", "lactr", "lactr or ctr (train)"},
      // topic initialization
      {"lda_alpha", "1", "Dirichlet prior on item topics"},
      {"lda_eta", "0.01", "Dirichlet prior on topic words"},
      {"lda_iters", "200", "Gibbs sweeps"},
      // preparation
      {"top_m", "3000", "vocabulary size chosen by tf-idf"},
      {"min_votes", "10", "drop users with fewer votes"},
      {"min_words", "10", "drop items with at most this many words"},
      {"neg_samples", "5", "sampled non-followee attention edges per user"},
      {"attribution", "all", "all or earliest"},
      // run control
      {"seed", "1", "random seed"},
      {"threads", "1", "worker threads"},
      // evaluation
      {"folds", "5", "cross-validation folds"},
      {"mode", "in_matrix", "in_matrix or out_of_matrix"},
      {"x_grid", "20:200:20", "recall cutoffs start:stop:step"},
      {"aggregation", "max", "max or sum over attention edges"},
      {"models", "lactr,ctr", "comma-separated lactr, ctr, popularity, random"},
      {"sweep", "", "parameter sweep, e.g. lambda_phi=0.001,0.01,1"},
      {"top_n", "10", "items to print (predict) or words per topic (inspect)"},
      {"user", "", "user id (predict, inspect)"},
      {"latent", "attention", "interest or attention (predict)"},
      // paths
      {"items", "", "items file"},
      {"votes", "", "votes file"},
      {"edges", "", "edges file"},
      {"data", "", "prepared dataset directory"},
      {"lda", "", "topic model file from lda-init"},
      {"model", "", "model dump"},
      {"out", "", "output path"},
      // simulation
      {"n_users", "30", "synthetic users"},
      {"n_items", "50", "synthetic items"},
      {"vocab_size", "200", "synthetic vocabulary size"},
      {"doc_length", "50", "words per synthetic item"},
      {"graph", "er:0.1", "er:<p> or pa:<m>"},
      {"adoption", "threshold:0.5", "threshold:<tau> or topk:<kappa>"},
      {"synth_alpha", "1", "Dirichlet prior of synthetic topics"},
      {"synth_eta", "0.1", "Dirichlet prior of synthetic topic words"},
      {"rating_precision", "0", "precision of synthetic rating noise (0 = a_r)"},
      {"target_positive_rate", "0", "tune the threshold to this vote density (0 = off)"},
  };
  return keys;
}

// Line-oriented `key = value` configuration. Unknown keys are rejected.
class RunConfig {
 public:
  RunConfig() {
    for (const auto& key : config_schema()) values_[key.name] = key.default_value;
  }

  static bool known(const std::string& key) {
    const auto& schema = config_schema();
    return std::any_of(schema.begin(), schema.end(), [&](const ConfigKey& k) { return key == k.name; });
  }

  static RunConfig parse(std::istream& in, const std::string& origin = "config") {
    RunConfig cfg;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto text = trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos)
        throw InputError(origin + ":" + std::to_string(number) + ": expected key=value");
      try {
        cfg.set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
      } catch (const InputError& err) {
        throw InputError(origin + ":" + std::to_string(number) + ": " + err.what());
      }
    }
    return cfg;
  }

  static RunConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static RunConfig load(const io::fs::path& path) {
    auto in = io::open_in(path);
    return parse(in, path.string());
  }

  void set(const std::string& key, const std::string& value) {
    if (!known(key)) throw InputError("unknown configuration key '" + key + "'");
    if (value.find('\n') != std::string::npos) throw InputError("value of '" + key + "' spans lines");
    values_[key] = value;
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InputError("unknown configuration key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key) const {
    const auto& s = get(key);
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
    throw InputError("'" + key + "' must be a number, got '" + s + "'");
  }

  std::uint64_t get_count(const std::string& key) const {
    const auto& s = get(key);
    std::uint64_t x = 0;
    if (!io::parse_number(std::string_view(s), x))
      throw InputError("'" + key + "' must be a non-negative integer, got '" + s + "'");
    return x;
  }

  // Canonical form: every key in schema order.
  std::string serialize() const {
    std::ostringstream os;
    for (const auto& key : config_schema()) os << key.name << " = " << values_.at(key.name) << '\n';
    return os.str();
  }

  // FNV-1a over the canonical form, as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
  }

  bool operator==(const RunConfig& other) const { return values_ == other.values_; }

  Hyperparams hyperparams() const {
    Hyperparams hp;
    hp.k = get_count("k");
    hp.lambda_u = get_double("lambda_u");
    hp.lambda_v = get_double("lambda_v");
    hp.lambda_s = get_double("lambda_s");
    hp.lambda_phi = get_double("lambda_phi");
    hp.a_r = get_double("a_r");
    hp.b_r = get_double("b_r");
    hp.a_phi = get_double("a_phi");
    hp.b_phi = get_double("b_phi");
    hp.theta_mode = parse_theta_mode(get("theta_mode"));
    hp.max_sweeps = get_count("max_sweeps");
    hp.tol = get_double("tol");
    hp.validate();
    return hp;
  }

  LdaOptions lda_options() const {
    LdaOptions opt;
    opt.k = get_count("k");
    opt.alpha = get_double("lda_alpha");
    opt.eta = get_double("lda_eta");
    opt.iters = get_count("lda_iters");
    opt.seed = get_count("seed");
    return opt;
  }

  AttributionRule attribution_rule() const {
    const auto& s = get("attribution");
    if (s == "all") return AttributionRule::kAllEarlier;
    if (s == "earliest") return AttributionRule::kEarliest;
    throw InputError("attribution must be 'all' or 'earliest', got '" + s + "'");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  SynthConfig synth_config() const {
    SynthConfig cfg;
    cfg.n_users = get_count("n_users");
    cfg.n_items = get_count("n_items");
    cfg.k = get_count("k");
    cfg.vocab_size = get_count("vocab_size");
    cfg.doc_length = get_count("doc_length");
    cfg.hp = hyperparams();
    cfg.alpha = get_double("synth_alpha");
    cfg.eta = get_double("synth_eta");
    cfg.neg_samples = get_count("neg_samples");
    cfg.rating_precision = get_double("rating_precision");
    cfg.seed = get_count("seed");

    auto [graph_kind, graph_arg] = split_tagged("graph");
    if (graph_kind == "er")
      cfg.graph = ErdosRenyi{parse_double("graph", graph_arg)};
    else if (graph_kind == "pa")
      cfg.graph = Preferential{static_cast<std::size_t>(parse_double("graph", graph_arg))};
    else
      throw InputError("graph must be er:<p> or pa:<m>");

    auto [rule_kind, rule_arg] = split_tagged("adoption");
    if (rule_kind == "threshold")
      cfg.adoption = ThresholdRule{parse_double("adoption", rule_arg)};
    else if (rule_kind == "topk")
      cfg.adoption = TopKRule{static_cast<std::size_t>(parse_double("adoption", rule_arg))};
    else
      throw InputError("adoption must be threshold:<tau> or topk:<kappa>");
    cfg.validate();
    return cfg;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  }

  std::pair<std::string, std::string> split_tagged(const std::string& key) const {
    const auto& s = get(key);
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw InputError("'" + key + "' must look like kind:value");
    return {s.substr(0, colon), s.substr(colon + 1)};
  }

  static double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
    throw InputError("'" + key + "' has a malformed number '" + s + "'");
  }

  std::map<std::string, std::string> values_;
};

}  // namespace lactr
