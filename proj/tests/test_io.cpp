#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "lactr/config.hpp"
#include "lactr/ctr.hpp"
#include "lactr/io.hpp"
#include "support.hpp"

using namespace lactr;
namespace lt = lactr::testing;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lactr_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path put(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  template <typename Fn>
  std::string error_of(Fn&& fn) {
    try {
      fn();
    } catch (const InputError& err) {
      return err.what();
    }
    return "";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(IoTest, ItemsRoundTrip) {
  const std::vector<RawDocument> docs = {{"a1", {"x", "y", "x"}}, {"b2", {}}, {"c3", {"z"}}};
  std::ostringstream os;
  io::write_items(os, docs);
  const auto back = io::read_items(put("items.txt", os.str()));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(back[n].item_id, docs[n].item_id);
    EXPECT_EQ(back[n].tokens, docs[n].tokens);
  }
}

TEST_F(IoTest, MalformedLinesNameTheLine) {
  const auto items = put("items.txt", "a\tx y\nno tab here\n");
  EXPECT_NE(error_of([&] { io::read_items(items); }).find(":2:"), std::string::npos);
  const auto dup = put("dup.txt", "a\tx\na\ty\n");
  EXPECT_NE(error_of([&] { io::read_items(dup); }).find("duplicate item id 'a'"), std::string::npos);
  const auto votes = put("votes.tsv", "u\ti\t5\nu\tj\n");
  EXPECT_NE(error_of([&] { io::read_votes(votes); }).find(":2:"), std::string::npos);
  const auto stamp = put("stamp.tsv", "u\ti\tsoon\n");
  EXPECT_NE(error_of([&] { io::read_votes(stamp); }).find("timestamp"), std::string::npos);
  const auto edges = put("edges.tsv", "a\tb\nc\n");
  EXPECT_NE(error_of([&] { io::read_edges(edges); }).find(":2:"), std::string::npos);
  EXPECT_FALSE(error_of([&] { io::read_items(dir_ / "missing.txt"); }).empty());
}

TEST_F(IoTest, VotesAndEdgesRoundTrip) {
  const std::vector<io::NamedVote> votes = {{"u1", "i1", 12}, {"u2", "i1", -3}};
  std::ostringstream vs;
  io::write_votes(vs, votes);
  const auto vback = io::read_votes(put("v.tsv", vs.str()));
  ASSERT_EQ(vback.size(), 2u);
  EXPECT_EQ(vback[1].user, "u2");
  EXPECT_EQ(vback[1].time, -3);
  const std::vector<io::NamedEdge> edges = {{"u1", "u2"}};
  std::ostringstream es;
  io::write_edges(es, edges);
  const auto eback = io::read_edges(put("e.tsv", es.str()));
  ASSERT_EQ(eback.size(), 1u);
  EXPECT_EQ(eback[0].followee, "u2");
}

TEST_F(IoTest, BagOfWordsRoundTrip) {
  const Vocabulary vocab({"a", "b", "c"});
  const std::vector<RawDocument> raw = {{"d0", {"c", "a", "c"}}, {"d1", {}}};
  const Corpus corpus = to_corpus(raw, vocab);
  std::ostringstream os;
  io::write_bow(os, corpus);
  std::ostringstream vs;
  io::write_vocabulary(vs, vocab);
  const auto back = io::read_bow(put("bow.txt", os.str()), io::read_vocabulary(put("vocab.txt", vs.str())));
  ASSERT_EQ(back.num_docs(), 2u);
  EXPECT_EQ(back.documents[0].counts, corpus.documents[0].counts);
  EXPECT_TRUE(back.documents[1].counts.empty());
  EXPECT_NE(error_of([&] { io::read_bow(put("bad.txt", "d0\t7:1\n"), vocab); }).find("outside vocabulary"),
            std::string::npos);
  EXPECT_NE(error_of([&] { io::read_bow(put("rep.txt", "d0\t1:1 1:2\n"), vocab); }).find("repeated"),
            std::string::npos);
}

TEST(ModelDump, LaCtrRoundTripIsExact) {
  Hyperparams hp;
  hp.k = 5;
  hp.max_sweeps = 3;
  const auto inst = lt::make_instance(lt::small_synth(8), hp, 3);
  const auto st = train(inst.init, inst.edges, inst.ratings, inst.data.corpus, hp).state;
  const auto text = io::model_to_json(st, hp).dump(1);
  const auto dump = io::model_from_json(io::json::parse(text));
  ASSERT_TRUE(dump.lactr.has_value());
  EXPECT_EQ(dump.kind, "lactr");
  EXPECT_EQ(dump.lactr->u, st.u);
  EXPECT_EQ(dump.lactr->s, st.s);
  EXPECT_EQ(dump.lactr->phi, st.phi);
  EXPECT_EQ(dump.lactr->v, st.v);
  EXPECT_EQ(dump.lactr->theta, st.theta);
  EXPECT_EQ(dump.lactr->beta, st.beta);
  for (EdgeId e = 0; e < st.edges.num_edges(); ++e) {
    EXPECT_EQ(dump.lactr->edges.target(e), st.edges.target(e));
    EXPECT_EQ(dump.lactr->edges.confidence(e), st.edges.confidence(e));
    EXPECT_EQ(dump.lactr->edges.is_followed(e), st.edges.is_followed(e));
  }
  EXPECT_EQ(io::hyperparams_to_json(dump.hp), io::hyperparams_to_json(hp));
}

TEST(ModelDump, CtrRoundTripAndRejections) {
  CtrState st{Matrix::Constant(2, 2, 0.1), Matrix::Constant(3, 2, 1.0 / 3), Matrix::Constant(3, 2, 0.5),
              Matrix::Constant(2, 4, 0.25)};
  Hyperparams hp;
  hp.k = 2;
  const auto j = io::model_to_json(st, hp);
  EXPECT_TRUE(j.at("edges").is_null());
  const auto dump = io::model_from_json(io::json::parse(j.dump()));
  ASSERT_TRUE(dump.ctr.has_value());
  EXPECT_FALSE(dump.lactr.has_value());
  EXPECT_EQ(dump.ctr->v, st.v);

  auto bad = j;
  bad["format"] = "other";
  EXPECT_THROW(io::model_from_json(bad), InputError);
  bad = j;
  bad["u"] = io::json::array({io::json::array({1.0, 2.0})});
  EXPECT_THROW(io::model_from_json(bad), InputError);
  bad = j;
  bad.erase("beta");
  EXPECT_THROW(io::model_from_json(bad), InputError);
}

TEST(TopicModelFile, RoundTrip) {
  TopicModel tm{Matrix::Constant(3, 2, 0.5), Matrix::Constant(2, 5, 0.2), 2};
  tm.theta(1, 0) = 0.1 + 1e-17;
  const auto back = io::topic_model_from_json(io::json::parse(io::topic_model_to_json(tm).dump()));
  EXPECT_EQ(back.k, 2u);
  EXPECT_EQ(back.theta, tm.theta);
  EXPECT_EQ(back.beta, tm.beta);
}

TEST(Trace, CsvHasHeaderAndFullPrecision) {
  std::ostringstream os;
  io::write_trace(os, {{0, -1.0 / 3, 0.0}, {1, -0.25, 1.0 / 12}});
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "sweep,log_likelihood,delta");
  std::getline(in, line);
  EXPECT_EQ(std::stod(line.substr(2, line.find(',', 2) - 2)), -1.0 / 3);
}

TEST(Config, ParseSerializeParseIsIdentity) {
  const auto cfg = RunConfig::parse_string("# comment\nk = 7\n lambda_phi=0.001  # trailing\n\nmodels = lactr\n");
  EXPECT_EQ(cfg.get_count("k"), 7u);
  EXPECT_EQ(cfg.get_double("lambda_phi"), 0.001);
  const auto again = RunConfig::parse_string(cfg.serialize());
  EXPECT_EQ(again, cfg);
  EXPECT_EQ(again.serialize(), cfg.serialize());
  EXPECT_EQ(again.hash(), cfg.hash());
  EXPECT_NE(RunConfig().hash(), cfg.hash());
  EXPECT_EQ(RunConfig().hash().size(), 16u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  try {
    RunConfig::parse_string("k = 5\nlamda_u = 1\n");
    FAIL();
  } catch (const InputError& err) {
    EXPECT_NE(std::string(err.what()).find(":2:"), std::string::npos);
    EXPECT_NE(std::string(err.what()).find("lamda_u"), std::string::npos);
  }
  EXPECT_THROW(RunConfig::parse_string("just words\n"), InputError);
  EXPECT_THROW(RunConfig::parse_string("k = -1\n").get_count("k"), InputError);
  EXPECT_THROW(RunConfig::parse_string("lambda_u = fast\n").hyperparams(), InputError);
  EXPECT_THROW(RunConfig::parse_string("attribution = latest\n").attribution_rule(), InputError);
  EXPECT_THROW(RunConfig::parse_string("graph = ring\n").synth_config(), InputError);
}

TEST(Config, DefaultsMatchLibraryDefaults) {
  const RunConfig cfg;
  const auto hp = cfg.hyperparams();
  const Hyperparams lib;
  EXPECT_EQ(io::hyperparams_to_json(hp), io::hyperparams_to_json(lib));
  EXPECT_EQ(cfg.get_count("top_m"), 3000u);
  EXPECT_EQ(cfg.get_count("min_votes"), 10u);
  EXPECT_EQ(cfg.get_count("min_words"), 10u);
  EXPECT_EQ(cfg.lda_options().alpha, 1.0);
  EXPECT_EQ(cfg.list("models"), (std::vector<std::string>{"lactr", "ctr"}));
  const auto synth = cfg.synth_config();
  EXPECT_TRUE(std::holds_alternative<ErdosRenyi>(synth.graph));
  EXPECT_EQ(std::get<ThresholdRule>(synth.adoption).tau, 0.5);
}
