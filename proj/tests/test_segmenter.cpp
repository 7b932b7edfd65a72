#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

using namespace gujian;

namespace {

Hyperparams tiny_hp(int epochs = 3) {
  Hyperparams hp;
  hp.embed_dim = 4;
  hp.hidden = 3;
  hp.batch = 4;
  hp.epochs = epochs;
  hp.learning_rate = 0.1;
  return hp;
}

CorpusSplits tiny_splits() {
  auto units = fixtures::overfit_units(12, 3);
  for (auto& u : units) {
    u.seq.chars.resize(20);
    u.seq.tags.resize(20);
  }
  CorpusSplits s;
  s.train.assign(units.begin(), units.begin() + 8);
  s.valid.assign(units.begin() + 8, units.end());
  return s;
}

SegmenterModel tiny_trainable(std::uint64_t seed) {
  auto s = tiny_splits();
  return SegmenterModel::random(build_vocab(s.train), fixtures::default_table(), 2, 2, 3, seed);
}

std::vector<Tag> tags(std::string_view s) { return tags_from_string(s); }

EvalReport eval_pairs(const std::vector<std::pair<std::string, std::string>>& gold_pred) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [g, p] : gold_pred) count_boundaries(tags(g), tags(p), tp, fp, fn);
  return EvalReport::from_counts(tp, fp, fn);
}

}  // namespace

TEST(HyperparamsTest, Defaults) {
  const Hyperparams hp;
  EXPECT_EQ(hp.embed_dim, 100);
  EXPECT_EQ(hp.hidden, 100);
  EXPECT_EQ(hp.layers, 1);
  EXPECT_EQ(hp.batch, 50);
  EXPECT_EQ(hp.epochs, 30);
  EXPECT_DOUBLE_EQ(hp.learning_rate, 0.01);
  EXPECT_DOUBLE_EQ(hp.clip, 5.0);
  EXPECT_DOUBLE_EQ(hp.dropout, 0.5);
  EXPECT_NO_THROW(hp.validate());
  Hyperparams bad;
  bad.layers = 2;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.batch = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Metrics, Fixtures) {
  // Gold boundaries after positions {2, 5}; predicted {2, 7}.
  auto r = eval_pairs({{"BOEBOEBO", "BOEBOOOE"}});
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);

  r = eval_pairs({{"BOEBE", "BOEBE"}});
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);

  r = eval_pairs({{"BOEBE", "BOOOO"}});
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);

  r = eval_pairs({{"BOOO", "BOOO"}});
  EXPECT_EQ(r, EvalReport{});
}

TEST(Metrics, OnlyEndTagsCount) {
  EXPECT_DOUBLE_EQ(eval_pairs({{"BOEBOE", "OBEOBE"}}).f1, 1.0);
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<std::string, std::string>> units;
    for (int u = 0; u < 3; ++u) {
      std::string g, p;
      for (int i = 0; i < 15; ++i) {
        g += "BEO"[rng.below(3)];
        p += "BEO"[rng.below(3)];
      }
      units.emplace_back(g, p);
    }
    const auto r = eval_pairs(units);
    ASSERT_GE(r.f1, 0.0);
    ASSERT_LE(r.f1, 1.0);
    bool same = true;
    for (const auto& [g, p] : units) {
      for (std::size_t i = 0; i < g.size(); ++i) same = same && ((g[i] == 'E') == (p[i] == 'E'));
    }
    ASSERT_EQ(r.f1 == 1.0, same && r.tp > 0);
  }
}

TEST(ModelForward, ZeroNetworkGivesBias) {
  SegmenterModel m(fixtures::small_vocab(), fixtures::default_table(), 2, 2, 3);
  m.emit_b.value = Matrix{{0.1, -0.2, 0.3}};
  const auto p = model_forward(m, m.encode(U"天"), false, 0.0, nullptr);
  EXPECT_EQ(p, m.emit_b.value);
}

TEST(ModelForward, ShapeAndUnknownCharacters) {
  auto m = fixtures::tiny_model(1);
  for (std::size_t n : {1u, 5u, 17u}) {
    const auto p = model_forward(m, m.encode(std::u32string(n, U'龍')), false, 0.0, nullptr);
    EXPECT_EQ(p.rows(), n);
    EXPECT_EQ(p.cols(), 3u);
  }
  EXPECT_EQ(m.encode(U"龍")[0].ch, Vocab::kUnk);
}

TEST(ModelForward, DropoutOnlyWhenTraining) {
  auto m = fixtures::tiny_model(2);
  const auto toks = m.encode(U"天地人雲");
  Rng a(1), b(1);
  const auto eval1 = model_forward(m, toks, false, 0.5, &a);
  const auto eval2 = model_forward(m, toks, false, 0.5, nullptr);
  EXPECT_EQ(eval1, eval2);
  const auto train1 = model_forward(m, toks, true, 0.5, &b);
  EXPECT_NE(train1, eval1);
  EXPECT_THROW(model_forward(m, toks, true, 0.5, nullptr), ConfigError);
}

TEST(EndToEnd, GradientCheck) {
  const std::vector<int> gold{0, 2, 1, 0, 1};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto m = fixtures::tiny_model(seed);
    const auto toks = m.encode(U"天腿雲膊人");
    auto ps = m.params();
    auto loss = [&](bool acc) { return unit_loss(m, toks, gold, false, 0.0, nullptr, acc); };
    EXPECT_LT(grad_check(loss, ps), 1e-4) << "seed " << seed;
  }
}

TEST(EndToEnd, GradientCheckWithDropoutMasks) {
  const std::vector<int> gold{1, 0, 2, 2, 1};
  auto m = fixtures::tiny_model(4);
  const auto toks = m.encode(U"天腿雲膊人");
  auto ps = m.params();
  auto loss = [&](bool acc) {
    Rng rng(99);  // same masks on every evaluation
    return unit_loss(m, toks, gold, true, 0.3, &rng, acc);
  };
  EXPECT_LT(grad_check(loss, ps), 1e-4);
}

TEST(EndToEnd, CharOnlyAblationIgnoresRadicals) {
  auto m = fixtures::tiny_model(5);
  m.use_radicals = false;
  const auto toks = m.encode(U"天腿雲");
  const auto before = model_forward(m, toks, false, 0.0, nullptr);
  for (double& v : m.rad_emb.value.data()) v += 1.0;
  EXPECT_EQ(model_forward(m, toks, false, 0.0, nullptr), before);
  auto ps = m.trainable(false);
  EXPECT_TRUE(std::find(ps.begin(), ps.end(), &m.rad_emb) == ps.end());
}

TEST(Train, DeterministicGivenSeed) {
  auto s = tiny_splits();
  auto a = tiny_trainable(1), b = tiny_trainable(1);
  const auto la = train(a, s, tiny_hp(), 5);
  const auto lb = train(b, s, tiny_hp(), 5);
  ASSERT_EQ(la.epochs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(la.epochs[i].mean_loss, lb.epochs[i].mean_loss);
    EXPECT_EQ(la.epochs[i].valid, lb.epochs[i].valid);
  }
  EXPECT_EQ(la.best_epoch, lb.best_epoch);
  EXPECT_TRUE(params_equal(a, b));
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  auto s = tiny_splits();
  auto m = tiny_trainable(2), orig = tiny_trainable(2);
  auto hp = tiny_hp(3);
  hp.learning_rate = 0.0;
  const auto log = train(m, s, hp, 1);
  EXPECT_TRUE(params_equal(m, orig));
  for (const auto& e : log.epochs) EXPECT_EQ(e.valid, log.epochs[0].valid);
  EXPECT_EQ(log.best_epoch, 1);
}

TEST(Train, RestoresBestEpoch) {
  auto s = tiny_splits();
  auto m = tiny_trainable(3);
  auto hp = tiny_hp(6);
  hp.learning_rate = 0.5;
  const auto log = train(m, s, hp, 2);
  ASSERT_EQ(log.epochs.size(), 6u);
  double best = -1;
  int best_epoch = 0;
  for (const auto& e : log.epochs) {
    if (e.valid.f1 > best) {
      best = e.valid.f1;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(log.best_epoch, best_epoch);
  EXPECT_EQ(evaluate(m, s.valid), log.epochs[static_cast<std::size_t>(best_epoch - 1)].valid);
}

TEST(Train, FreezeEmbeddings) {
  auto s = tiny_splits();
  auto m = tiny_trainable(4), orig = tiny_trainable(4);
  auto hp = tiny_hp(2);
  hp.freeze_embeddings = true;
  train(m, s, hp, 1);
  EXPECT_EQ(m.char_emb.value, orig.char_emb.value);
  EXPECT_EQ(m.rad_emb.value, orig.rad_emb.value);
}

TEST(Train, EvalOnTrainAndErrors) {
  auto s = tiny_splits();
  auto m = tiny_trainable(5);
  auto hp = tiny_hp(1);
  hp.eval_on_train = true;
  const auto log = train(m, s, hp, 1);
  ASSERT_TRUE(log.epochs[0].train.has_value());
  CorpusSplits empty;
  EXPECT_THROW(train(m, empty, hp, 1), ConfigError);
  hp.hidden = 4;
  EXPECT_THROW(train(m, s, hp, 1), ConfigError);
}

TEST(Train, ZeroEpochs) {
  auto s = tiny_splits();
  auto m = tiny_trainable(6), orig = tiny_trainable(6);
  const auto log = train(m, s, tiny_hp(0), 1);
  EXPECT_TRUE(log.epochs.empty());
  EXPECT_EQ(log.best_epoch, 0);
  EXPECT_TRUE(params_equal(m, orig));
}

TEST(FromEmbeddings, DimensionMismatchNamesDims) {
  EmbeddingSet e;
  e.vocab = fixtures::small_vocab();
  e.char_vectors = Matrix(e.vocab.size(), 3);
  e.radical_vectors = Matrix(215, 2);
  Hyperparams hp;
  try {
    SegmenterModel::from_embeddings(e, fixtures::default_table(), hp, 1);
    FAIL();
  } catch (const ConfigError& err) {
    const std::string msg = err.what();
    EXPECT_NE(msg.find("100"), std::string::npos) << msg;
    EXPECT_NE(msg.find("5"), std::string::npos) << msg;
  }
  hp.embed_dim = 5;
  auto m = SegmenterModel::from_embeddings(e, fixtures::default_table(), hp, 1);
  EXPECT_EQ(m.char_emb.value, e.char_vectors);
  EXPECT_EQ(m.input_dim(), 5u);
}

TEST(Segment, Examples) {
  auto m = fixtures::tiny_model(1);
  EXPECT_EQ(segment(m, std::string(""), "/"), "");
  EXPECT_EQ(segment(m, std::string("abc, 123!"), "/"), "");
  EXPECT_THROW(segment(m, std::string("天"), "//"), ValidationError);
}

TEST(Segment, PreservesContent) {
  auto m = fixtures::tiny_model(2);
  Rng rng(3);
  const auto punct = PunctConfig::defaults();
  for (int trial = 0; trial < 30; ++trial) {
    const auto raw = fixtures::random_punctuated(rng, 250);
    const auto out = segment(m, raw, U'/');
    std::u32string stripped;
    for (char32_t c : out) {
      if (c != U'/') stripped.push_back(c);
    }
    ASSERT_EQ(stripped, strip_stops(normalize_text(raw, punct), punct));
  }
}

TEST(Segment, MatchesPerWindowDecoding) {
  auto m = fixtures::tiny_model(3);
  std::u32string raw;
  for (int i = 0; i < 230; ++i) raw.push_back(U"天地人雲腿膊"[i % 6]);
  LabeledSequence seq;
  seq.chars = raw;
  for (std::size_t off = 0; off < raw.size(); off += 100) {
    const auto t = decode(m, std::u32string_view(raw).substr(off, 100));
    seq.tags.insert(seq.tags.end(), t.begin(), t.end());
  }
  EXPECT_EQ(segment(m, raw, U'|'), tags_to_text(seq, U'|'));
}

TEST(Checkpoint, RoundTripBitwise) {
  auto m = fixtures::tiny_model(7);
  m.use_radicals = false;
  std::stringstream ss;
  save_model(m, ss);
  EXPECT_EQ(ss.str().substr(0, 8), "GJSEG01\n");
  auto back = load_model(ss, fixtures::default_table());
  EXPECT_TRUE(params_equal(m, back));
  EXPECT_FALSE(back.use_radicals);
  const std::u32string text = U"天地人雲腿膊天地人";
  EXPECT_EQ(segment(m, text, U'/'), segment(back, text, U'/'));
  std::stringstream again;
  save_model(back, again);
  EXPECT_EQ(again.str(), ss.str());
}

namespace {

std::string saved_bytes(SegmenterModel& m) {
  std::stringstream ss;
  save_model(m, ss);
  return ss.str();
}

std::string load_error(const std::string& bytes) {
  std::istringstream is(bytes);
  try {
    load_model(is, fixtures::default_table());
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Checkpoint, TamperedShapeNamesSection) {
  auto m = fixtures::tiny_model(8);
  std::string bytes = saved_bytes(m);
  // Locate the section table entry for emit.W and bump its row count.
  const std::string name = "emit.W";
  const auto pos = bytes.find(name);
  ASSERT_NE(pos, std::string::npos);
  bytes[pos + name.size()] = static_cast<char>(bytes[pos + name.size()] + 1);
  const auto msg = load_error(bytes);
  EXPECT_NE(msg.find("emit.W"), std::string::npos) << msg;
}

TEST(Checkpoint, CorruptFilesRejected) {
  auto m = fixtures::tiny_model(9);
  const std::string good = saved_bytes(m);
  std::string bad = good;
  bad[3] = 'X';
  EXPECT_NE(load_error(bad), "");
  bad = good;
  bad[8] = 9;  // version
  EXPECT_NE(load_error(bad).find("version"), std::string::npos);
  EXPECT_NE(load_error(good.substr(0, good.size() - 3)), "");
  EXPECT_NE(load_error(good.substr(0, 20)), "");
  EXPECT_NE(load_error(good + "extra"), "");
  EXPECT_EQ(load_error(good), "");

  auto other = std::make_shared<const RadicalTable>(parse_radical_table("4E00\t1\n"));
  std::istringstream is(good);
  EXPECT_THROW(load_model(is, other), FormatError);
  EXPECT_THROW(load_model(std::string("/nonexistent/model.bin"), fixtures::default_table()), FormatError);
}

TEST(Overfit, LearnsFixtureAndSegmentsConfucius) {
  auto units = fixtures::overfit_units();
  ASSERT_EQ(units.size(), 20u);
  CorpusSplits s;
  s.train = units;
  s.valid = units;
  auto m = SegmenterModel::random(build_vocab(units), fixtures::default_table(), 70, 30, 100, 1);
  const auto log = train(m, s, Hyperparams{}, 7);
  EXPECT_GE(evaluate(m, units).f1, 0.99);
  EXPECT_EQ(segment(m, std::string("三人行必有我師焉"), "/"), "三人行/必有我師焉");
  EXPECT_EQ(log.epochs.size(), 30u);
}
