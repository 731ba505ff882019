#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lactr/corpus.hpp"
#include "lactr/ctr.hpp"
#include "lactr/hyperparams.hpp"
#include "lactr/model.hpp"
#include "lactr/social.hpp"
#include "lactr/topics.hpp"

namespace lactr::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    std::size_t end = pos;
    while (end < s.size() && s[end] != ' ' && s[end] != '\t') ++end;
    if (end > pos) out.push_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

inline std::vector<std::string_view> split_tabs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = s.find('\t', pos);
    out.push_back(s.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

// Calls fn(line_number, line) for every non-empty line; strips a trailing '\r'.
template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(number, std::string_view(line));
  }
}

// Items file: `<item_id>\t<token> <token> ...`
inline std::vector<RawDocument> read_items(const fs::path& path) {
  std::vector<RawDocument> docs;
  std::map<std::string, std::size_t, std::less<>> seen;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw InputError(where(path, n) + "expected '<item_id>\\t<tokens>'");
    RawDocument doc{std::string(line.substr(0, tab)), {}};
    if (!seen.emplace(doc.item_id, n).second)
      throw InputError(where(path, n) + "duplicate item id '" + doc.item_id + "'");
    for (auto tok : split_ws(line.substr(tab + 1))) doc.tokens.emplace_back(tok);
    docs.push_back(std::move(doc));
  });
  return docs;
}

inline void write_items(std::ostream& os, const std::vector<RawDocument>& docs) {
  for (const auto& doc : docs) {
    os << doc.item_id << '\t';
    for (std::size_t t = 0; t < doc.tokens.size(); ++t) os << (t ? " " : "") << doc.tokens[t];
    os << '\n';
  }
}

// Vocabulary file: one token per line, line number (from 0) = word id.
inline Vocabulary read_vocabulary(const fs::path& path) {
  std::vector<std::string> words;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (split_ws(line).size() != 1) throw InputError(where(path, n) + "expected a single token");
    words.emplace_back(line);
  });
  try {
    return Vocabulary(std::move(words));
  } catch (const InputError& err) {
    throw InputError(path.string() + ": " + err.what());
  }
}

inline void write_vocabulary(std::ostream& os, const Vocabulary& vocab) {
  for (const auto& w : vocab.words()) os << w << '\n';
}

// Bag-of-words file: `<item_id>\t<word_id>:<count> ...`
inline Corpus read_bow(const fs::path& path, Vocabulary vocab) {
  Corpus corpus{std::move(vocab), {}};
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    const auto tab = line.find('\t');
    const auto id = line.substr(0, tab);
    if (id.empty()) throw InputError(where(path, n) + "missing item id");
    Document doc{std::string(id), {}};
    if (tab != std::string_view::npos) {
      for (auto entry : split_ws(line.substr(tab + 1))) {
        const auto colon = entry.find(':');
        WordCount wc{};
        if (colon == std::string_view::npos || !parse_number(entry.substr(0, colon), wc.word) ||
            !parse_number(entry.substr(colon + 1), wc.count) || wc.count == 0)
          throw InputError(where(path, n) + "malformed entry '" + std::string(entry) + "'");
        if (wc.word >= corpus.vocabulary.size())
          throw InputError(where(path, n) + "word id " + std::to_string(wc.word) +
                           " outside vocabulary");
        doc.counts.push_back(wc);
      }
    }
    std::sort(doc.counts.begin(), doc.counts.end(),
              [](const WordCount& a, const WordCount& b) { return a.word < b.word; });
    for (std::size_t c = 1; c < doc.counts.size(); ++c)
      if (doc.counts[c].word == doc.counts[c - 1].word)
        throw InputError(where(path, n) + "repeated word id " + std::to_string(doc.counts[c].word));
    corpus.documents.push_back(std::move(doc));
  });
  corpus.validate();
  return corpus;
}

inline void write_bow(std::ostream& os, const Corpus& corpus) {
  for (const auto& doc : corpus.documents) {
    os << doc.item_id << '\t';
    for (std::size_t c = 0; c < doc.counts.size(); ++c)
      os << (c ? " " : "") << doc.counts[c].word << ':' << doc.counts[c].count;
    os << '\n';
  }
}

struct NamedEdge {
  std::string follower;
  std::string followee;
};

// Edges file: `<follower_id>\t<followee_id>`
inline std::vector<NamedEdge> read_edges(const fs::path& path) {
  std::vector<NamedEdge> edges;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    const auto f = split_tabs(line);
    if (f.size() != 2 || f[0].empty() || f[1].empty())
      throw InputError(where(path, n) + "expected '<follower_id>\\t<followee_id>'");
    edges.push_back({std::string(f[0]), std::string(f[1])});
  });
  return edges;
}

inline void write_edges(std::ostream& os, const std::vector<NamedEdge>& edges) {
  for (const auto& e : edges) os << e.follower << '\t' << e.followee << '\n';
}

struct NamedVote {
  std::string user;
  std::string item;
  Timestamp time;
};

// Votes file: `<user_id>\t<item_id>\t<timestamp>`, integer epoch seconds.
inline std::vector<NamedVote> read_votes(const fs::path& path) {
  std::vector<NamedVote> votes;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    const auto f = split_tabs(line);
    if (f.size() != 3 || f[0].empty() || f[1].empty())
      throw InputError(where(path, n) + "expected '<user_id>\\t<item_id>\\t<timestamp>'");
    NamedVote v{std::string(f[0]), std::string(f[1]), 0};
    if (!parse_number(f[2], v.time))
      throw InputError(where(path, n) + "missing or malformed timestamp '" + std::string(f[2]) + "'");
    votes.push_back(std::move(v));
  });
  return votes;
}

inline void write_votes(std::ostream& os, const std::vector<NamedVote>& votes) {
  for (const auto& v : votes) os << v.user << '\t' << v.item << '\t' << v.time << '\n';
}

// One string id per line; line number = dense id.
inline std::vector<std::string> read_names(const fs::path& path) {
  std::vector<std::string> names;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (line.find('\t') != std::string_view::npos) throw InputError(where(path, n) + "unexpected tab");
    names.emplace_back(line);
  });
  return names;
}

inline void write_names(std::ostream& os, const std::vector<std::string>& names) {
  for (const auto& n : names) os << n << '\n';
}

// `<user>\t<item>\t<source>,<source>...`
inline void write_attribution(std::ostream& os, const SourceAttribution& attribution,
                              const std::vector<std::string>& users,
                              const std::vector<std::string>& items) {
  for (const auto& a : attribution) {
    os << users.at(a.user) << '\t' << items.at(a.item) << '\t';
    for (std::size_t n = 0; n < a.sources.size(); ++n) os << (n ? "," : "") << users.at(a.sources[n]);
    os << '\n';
  }
}

// Training trace CSV: sweep,log_likelihood,delta
inline void write_trace(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "sweep,log_likelihood,delta\n";
  const auto old = os.precision(17);
  for (const auto& row : trace) os << row.sweep << ',' << row.log_likelihood << ',' << row.delta << '\n';
  os.precision(old);
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                               const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw InputError(std::string("model dump: '") + what + "' has the wrong number of rows");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(std::string("model dump: '") + what + "' has the wrong number of columns");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline json hyperparams_to_json(const Hyperparams& hp) {
  return json{{"k", hp.k},           {"lambda_u", hp.lambda_u},     {"lambda_v", hp.lambda_v},
              {"lambda_s", hp.lambda_s}, {"lambda_phi", hp.lambda_phi}, {"a_r", hp.a_r},
              {"b_r", hp.b_r},       {"a_phi", hp.a_phi},           {"b_phi", hp.b_phi},
              {"theta_mode", to_string(hp.theta_mode)},             {"max_sweeps", hp.max_sweeps},
              {"tol", hp.tol}};
}

inline Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  hp.k = j.at("k").get<std::size_t>();
  hp.lambda_u = j.at("lambda_u").get<double>();
  hp.lambda_v = j.at("lambda_v").get<double>();
  hp.lambda_s = j.at("lambda_s").get<double>();
  hp.lambda_phi = j.at("lambda_phi").get<double>();
  hp.a_r = j.at("a_r").get<double>();
  hp.b_r = j.at("b_r").get<double>();
  hp.a_phi = j.at("a_phi").get<double>();
  hp.b_phi = j.at("b_phi").get<double>();
  hp.theta_mode = parse_theta_mode(j.at("theta_mode").get<std::string>());
  hp.max_sweeps = j.at("max_sweeps").get<std::size_t>();
  hp.tol = j.at("tol").get<double>();
  return hp;
}

// A loaded model dump. `lactr` is set for {LA}-CTR dumps; CTR dumps carry an
// absent-edge marker ("edges": null) and fill `ctr` instead.
struct ModelDump {
  std::string kind;  // "lactr" or "ctr"
  Hyperparams hp;
  std::optional<ModelState> lactr;
  std::optional<CtrState> ctr;
};

inline json dims_json(std::size_t n, std::size_t d, std::size_t k, std::size_t m) {
  return json{{"n_users", n}, {"n_items", d}, {"k", k}, {"vocab_size", m}};
}

// Self-describing JSON container. Doubles are written in shortest
// round-trip form, so load(save(x)) reproduces every value bit for bit.
inline json model_to_json(const ModelState& st, const Hyperparams& hp) {
  json edges = json::array();
  for (EdgeId e = 0; e < st.edges.num_edges(); ++e) {
    json phi = json::array();
    for (Eigen::Index t = 0; t < st.phi.cols(); ++t) phi.push_back(st.phi(e, t));
    edges.push_back(json{{"user", st.edges.source(e)},
                         {"target", st.edges.target(e)},
                         {"confidence", st.edges.confidence(e)},
                         {"followed", st.edges.is_followed(e)},
                         {"s", st.s(e)},
                         {"phi", std::move(phi)}});
  }
  return json{{"format", "lactr-model"},
              {"version", 1},
              {"kind", "lactr"},
              {"dims", dims_json(st.num_users(), st.num_items(), st.k(),
                                 static_cast<std::size_t>(st.beta.cols()))},
              {"hyperparams", hyperparams_to_json(hp)},
              {"u", matrix_to_json(st.u)},
              {"v", matrix_to_json(st.v)},
              {"theta", matrix_to_json(st.theta)},
              {"beta", matrix_to_json(st.beta)},
              {"edges", std::move(edges)}};
}

inline json model_to_json(const CtrState& st, const Hyperparams& hp) {
  return json{{"format", "lactr-model"},
              {"version", 1},
              {"kind", "ctr"},
              {"dims", dims_json(st.num_users(), st.num_items(), static_cast<std::size_t>(st.u.cols()),
                                 static_cast<std::size_t>(st.beta.cols()))},
              {"hyperparams", hyperparams_to_json(hp)},
              {"u", matrix_to_json(st.u)},
              {"v", matrix_to_json(st.v)},
              {"theta", matrix_to_json(st.theta)},
              {"beta", matrix_to_json(st.beta)},
              {"edges", nullptr}};
}

inline ModelDump model_from_json(const json& j) {
  try {
    if (j.at("format") != "lactr-model" || j.at("version") != 1)
      throw InputError("not a version 1 lactr model dump");
    ModelDump dump;
    dump.kind = j.at("kind").get<std::string>();
    dump.hp = hyperparams_from_json(j.at("hyperparams"));
    const auto& dims = j.at("dims");
    const auto n = dims.at("n_users").get<Eigen::Index>();
    const auto d = dims.at("n_items").get<Eigen::Index>();
    const auto k = dims.at("k").get<Eigen::Index>();
    const auto m = dims.at("vocab_size").get<Eigen::Index>();
    Matrix u = matrix_from_json(j.at("u"), n, k, "u");
    Matrix v = matrix_from_json(j.at("v"), d, k, "v");
    Matrix theta = matrix_from_json(j.at("theta"), d, k, "theta");
    Matrix beta = matrix_from_json(j.at("beta"), k, m, "beta");

    if (dump.kind == "ctr") {
      if (!j.at("edges").is_null()) throw InputError("CTR dump must mark edges as absent");
      dump.ctr = CtrState{std::move(u), std::move(v), std::move(theta), std::move(beta)};
      return dump;
    }
    if (dump.kind != "lactr") throw InputError("unknown model kind '" + dump.kind + "'");

    const auto& edges = j.at("edges");
    std::vector<AttentionEdgeSet::EdgeRecord> records;
    struct Latent {
      double s;
      Vector phi;
    };
    std::map<std::pair<UserId, UserId>, Latent> latents;
    for (const auto& e : edges) {
      const auto i = e.at("user").get<UserId>();
      const auto l = e.at("target").get<UserId>();
      records.push_back({i, l, e.at("confidence").get<double>(), e.at("followed").get<bool>()});
      const auto& phi = e.at("phi");
      if (static_cast<Eigen::Index>(phi.size()) != k)
        throw InputError("model dump: attention vector has the wrong length");
      Vector p(k);
      for (Eigen::Index t = 0; t < k; ++t) p(t) = phi[static_cast<std::size_t>(t)].get<double>();
      latents[{i, l}] = {e.at("s").get<double>(), std::move(p)};
    }
    ModelState st;
    st.edges = AttentionEdgeSet::from_records(static_cast<std::size_t>(n), std::move(records));
    st.s.resize(static_cast<Eigen::Index>(st.edges.num_edges()));
    st.phi.resize(static_cast<Eigen::Index>(st.edges.num_edges()), k);
    for (EdgeId e = 0; e < st.edges.num_edges(); ++e) {
      const auto& lat = latents.at({st.edges.source(e), st.edges.target(e)});
      st.s(e) = lat.s;
      st.phi.row(e) = lat.phi.transpose();
    }
    st.u = std::move(u);
    st.v = std::move(v);
    st.theta = std::move(theta);
    st.beta = std::move(beta);
    st.validate();
    dump.lactr = std::move(st);
    return dump;
  } catch (const json::exception& err) {
    throw InputError(std::string("model dump: ") + err.what());
  }
}

inline void save_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
}

inline json load_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& err) {
    throw InputError(path.string() + ": " + err.what());
  }
}

inline json topic_model_to_json(const TopicModel& tm) {
  return json{{"format", "lactr-topics"},
              {"version", 1},
              {"k", tm.k},
              {"theta", matrix_to_json(tm.theta)},
              {"beta", matrix_to_json(tm.beta)}};
}

inline TopicModel topic_model_from_json(const json& j) {
  try {
    if (j.at("format") != "lactr-topics") throw InputError("not a lactr topic model file");
    TopicModel tm;
    tm.k = j.at("k").get<std::size_t>();
    const auto k = static_cast<Eigen::Index>(tm.k);
    const auto& theta = j.at("theta");
    const auto& beta = j.at("beta");
    const auto d = static_cast<Eigen::Index>(theta.size());
    const auto m = beta.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(beta.at(0).size());
    tm.theta = matrix_from_json(theta, d, k, "theta");
    tm.beta = matrix_from_json(beta, k, m, "beta");
    return tm;
  } catch (const json::exception& err) {
    throw InputError(std::string("topic model: ") + err.what());
  }
}

}  // namespace lactr::io
