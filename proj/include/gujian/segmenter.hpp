#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "corpus.hpp"
#include "crf.hpp"
#include "embedding.hpp"
#include "errors.hpp"
#include "lstm.hpp"
#include "nncore.hpp"
#include "radicals.hpp"
#include "utf8.hpp"

namespace gujian {

struct Hyperparams {
  int embed_dim = 100;
  int hidden = 100;
  int layers = 1;
  int batch = 50;
  int epochs = 30;
  double learning_rate = 0.01;
  double clip = 5.0;
  ClipMode clip_mode = ClipMode::Value;
  double dropout = 0.5;
  bool freeze_embeddings = false;
  bool eval_on_train = false;

  SgdConfig sgd() const { return {learning_rate, clip, dropout, clip_mode}; }

  void validate() const {
    if (embed_dim < 2) throw ConfigError("embed_dim must be >= 2");
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (layers != 1) throw ConfigError("only a single Bi-LSTM layer is supported (layers=" + std::to_string(layers) + ")");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    sgd().validate();
  }
};

// Boundary-level scores: a boundary is the position right after an E tag.
struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static EvalReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    EvalReport r{tp, fp, fn, 0.0, 0.0, 0.0};
    if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (r.precision + r.recall > 0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
  }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Adds one sequence's boundary counts to (tp, fp, fn).
inline void count_boundaries(const std::vector<Tag>& gold, const std::vector<Tag>& pred, std::size_t& tp,
                             std::size_t& fp, std::size_t& fn) {
  if (gold.size() != pred.size()) throw DimensionError("count_boundaries: length mismatch");
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == Tag::E;
    const bool p = pred[i] == Tag::E;
    tp += g && p;
    fp += !g && p;
    fn += g && !p;
  }
}

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  EvalReport valid;
  std::optional<EvalReport> train;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based; 0 when no epoch ran
};

class SegmenterModel {
 public:
  Vocab vocab;
  std::shared_ptr<const RadicalTable> radicals;
  Param char_emb;  // |V| x d_c
  Param rad_emb;   // 215 x d_r
  lstm::BiLstmParams bilstm;
  Param emit_w;  // 2H x k
  Param emit_b;  // 1 x k
  crf::CrfParams crf{kNumTags};
  // When false the radical half of every input is zero (char-only ablation).
  bool use_radicals = true;

  SegmenterModel() = default;

  SegmenterModel(Vocab v, std::shared_ptr<const RadicalTable> table, std::size_t dim_char, std::size_t dim_radical,
                 std::size_t hidden)
      : vocab(std::move(v)),
        radicals(std::move(table)),
        char_emb("embed.chars", vocab.size(), dim_char),
        rad_emb("embed.radicals", kRadicalRows, dim_radical),
        bilstm(dim_char + dim_radical, hidden),
        emit_w("emit.W", 2 * hidden, kNumTags),
        emit_b("emit.b", 1, kNumTags) {
    if (!radicals) radicals = std::make_shared<const RadicalTable>();
  }

  // Pretrained embeddings plus freshly initialised Bi-LSTM and emission layer.
  static SegmenterModel from_embeddings(const EmbeddingSet& emb, std::shared_ptr<const RadicalTable> table,
                                        const Hyperparams& hp, std::uint64_t seed) {
    hp.validate();
    const auto dc = static_cast<std::size_t>(emb.dim_char());
    const auto dr = static_cast<std::size_t>(emb.dim_radical());
    if (static_cast<std::size_t>(hp.embed_dim) != dc + dr) {
      throw ConfigError("embedding dimension mismatch: embed_dim=" + std::to_string(hp.embed_dim) +
                        " but embeddings have d_c=" + std::to_string(dc) + " + d_r=" + std::to_string(dr) + " = " +
                        std::to_string(dc + dr));
    }
    SegmenterModel m(emb.vocab, std::move(table), dc, dr, static_cast<std::size_t>(hp.hidden));
    m.char_emb.value = emb.char_vectors;
    m.rad_emb.value = emb.radical_vectors;
    Rng rng(seed);
    m.init_network(rng);
    return m;
  }

  // All parameters randomly initialised; embedding entries uniform in
  // [-sqrt(3), sqrt(3)] (unit variance).
  static SegmenterModel random(Vocab v, std::shared_ptr<const RadicalTable> table, std::size_t dim_char,
                               std::size_t dim_radical, std::size_t hidden, std::uint64_t seed) {
    SegmenterModel m(std::move(v), std::move(table), dim_char, dim_radical, hidden);
    Rng rng(seed);
    m.char_emb.init_uniform(rng, std::sqrt(3.0));
    m.rad_emb.init_uniform(rng, std::sqrt(3.0));
    m.init_network(rng);
    return m;
  }

  void init_network(Rng& rng) {
    bilstm.init(rng);
    emit_w.init_glorot(rng);
    emit_b.value.fill(0.0);
    crf.transitions.value.fill(0.0);
    crf.pin();
  }

  std::size_t dim_char() const { return char_emb.value.cols(); }
  std::size_t dim_radical() const { return rad_emb.value.cols(); }
  std::size_t input_dim() const { return dim_char() + dim_radical(); }
  std::size_t hidden() const { return bilstm.hidden(); }

  ParamList params() {
    ParamList out{&char_emb, &rad_emb};
    for (Param* p : bilstm.params()) out.push_back(p);
    out.push_back(&emit_w);
    out.push_back(&emit_b);
    out.push_back(&crf.transitions);
    return out;
  }

  ParamList trainable(bool freeze_embeddings) {
    ParamList out;
    for (Param* p : params()) {
      if (p == &char_emb && freeze_embeddings) continue;
      if (p == &rad_emb && (freeze_embeddings || !use_radicals)) continue;
      out.push_back(p);
    }
    return out;
  }

  std::vector<Token> encode(std::u32string_view chars) const { return gujian::encode(chars, vocab, *radicals); }
};

inline bool params_equal(SegmenterModel& a, SegmenterModel& b) {
  auto pa = a.params();
  auto pb = b.params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->name != pb[i]->name || !(pa[i]->value == pb[i]->value)) return false;
  }
  return a.vocab == b.vocab && a.use_radicals == b.use_radicals;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct ForwardCache {
  std::vector<Token> tokens;
  std::vector<Vec> input_mask;
  lstm::BiLstmCache lstm;
  std::vector<Vec> hidden;  // after dropout
  std::vector<Vec> hidden_mask;
};

// Per position: [c ; r] -> dropout -> Bi-LSTM -> dropout -> affine -> n x 3
// emissions. Dropout is applied only when `training` is set.
inline crf::Emissions model_forward(const SegmenterModel& m, std::span<const Token> tokens, bool training,
                                    double dropout, Rng* rng, ForwardCache* cache = nullptr) {
  const std::size_t n = tokens.size();
  const std::size_t dc = m.dim_char();
  const std::size_t dr = m.dim_radical();
  const bool drop = training && dropout > 0.0;
  if (drop && !rng) throw ConfigError("model_forward: dropout requires an rng");

  std::vector<Vec> inputs(n, Vec(dc + dr, 0.0));
  std::vector<Vec> in_mask;
  for (std::size_t t = 0; t < n; ++t) {
    const auto ch = static_cast<std::size_t>(tokens[t].ch);
    const auto rad = static_cast<std::size_t>(tokens[t].radical);
    if (ch >= m.char_emb.value.rows() || rad >= m.rad_emb.value.rows()) {
      throw std::out_of_range("model_forward: token index out of range");
    }
    auto c = m.char_emb.value.row(ch);
    std::copy(c.begin(), c.end(), inputs[t].begin());
    if (m.use_radicals) {
      auto r = m.rad_emb.value.row(rad);
      std::copy(r.begin(), r.end(), inputs[t].begin() + static_cast<std::ptrdiff_t>(dc));
    }
    if (drop) {
      in_mask.push_back(dropout_mask(dc + dr, dropout, *rng));
      for (std::size_t j = 0; j < dc + dr; ++j) inputs[t][j] *= in_mask[t][j];
    }
  }

  lstm::BiLstmCache lcache;
  std::vector<Vec> hidden = lstm::bilstm_forward(m.bilstm, inputs, cache ? &lcache : nullptr);
  std::vector<Vec> h_mask;
  if (drop) {
    for (auto& h : hidden) {
      h_mask.push_back(dropout_mask(h.size(), dropout, *rng));
      for (std::size_t j = 0; j < h.size(); ++j) h[j] *= h_mask.back()[j];
    }
  }

  crf::Emissions p(n, kNumTags);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = p.row(t);
    std::copy(m.emit_b.value.data().begin(), m.emit_b.value.data().end(), row.begin());
    gemv_t_acc(m.emit_w.value, hidden[t], row);
  }

  if (cache) {
    cache->tokens.assign(tokens.begin(), tokens.end());
    cache->input_mask = std::move(in_mask);
    cache->lstm = std::move(lcache);
    cache->hidden = std::move(hidden);
    cache->hidden_mask = std::move(h_mask);
  }
  return p;
}

// Accumulates gradients of a loss whose emission gradient is d_emissions.
inline void model_backward(SegmenterModel& m, const ForwardCache& cache, const Matrix& d_emissions) {
  const std::size_t n = cache.tokens.size();
  const std::size_t dc = m.dim_char();
  const std::size_t dr = m.dim_radical();
  std::vector<Vec> d_hidden(n, Vec(2 * m.hidden(), 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    auto dp = d_emissions.row(t);
    outer_acc(m.emit_w.grad, cache.hidden[t], dp);
    axpy(1.0, dp, m.emit_b.grad.data());
    gemv_acc(m.emit_w.value, dp, d_hidden[t]);
    if (!cache.hidden_mask.empty()) {
      for (std::size_t j = 0; j < d_hidden[t].size(); ++j) d_hidden[t][j] *= cache.hidden_mask[t][j];
    }
  }
  std::vector<Vec> d_inputs = lstm::bilstm_backward(m.bilstm, cache.lstm, d_hidden);
  for (std::size_t t = 0; t < n; ++t) {
    Vec& dx = d_inputs[t];
    if (!cache.input_mask.empty()) {
      for (std::size_t j = 0; j < dx.size(); ++j) dx[j] *= cache.input_mask[t][j];
    }
    const auto ch = static_cast<std::size_t>(cache.tokens[t].ch);
    axpy(1.0, std::span<const double>(dx).first(dc), m.char_emb.grad.row(ch));
    if (m.use_radicals) {
      const auto rad = static_cast<std::size_t>(cache.tokens[t].radical);
      axpy(1.0, std::span<const double>(dx).subspan(dc, dr), m.rad_emb.grad.row(rad));
    }
  }
}

// CRF negative log-likelihood of one unit. When `accumulate` is set the
// gradients, multiplied by `scale`, are added to the model's Param::grad.
inline double unit_loss(SegmenterModel& m, std::span<const Token> tokens, std::span<const int> gold, bool training,
                        double dropout, Rng* rng, bool accumulate, double scale = 1.0) {
  ForwardCache cache;
  crf::Emissions p = model_forward(m, tokens, training, dropout, rng, accumulate ? &cache : nullptr);
  crf::NllResult r = crf::crf_nll(p, m.crf, gold);
  if (accumulate) {
    for (double& v : r.d_emissions.data()) v *= scale;
    for (double& v : r.d_transitions.data()) v *= scale;
    axpy(1.0, r.d_transitions.data(), m.crf.transitions.grad.data());
    model_backward(m, cache, r.d_emissions);
  }
  return r.loss;
}

inline std::vector<Tag> decode_tokens(const SegmenterModel& m, std::span<const Token> tokens) {
  if (tokens.empty()) return {};
  crf::TagPath path = crf::viterbi_decode(model_forward(m, tokens, false, 0.0, nullptr), m.crf);
  std::vector<Tag> tags;
  tags.reserve(path.tags.size());
  for (int t : path.tags) tags.push_back(static_cast<Tag>(t));
  return tags;
}

inline std::vector<Tag> decode(const SegmenterModel& m, std::u32string_view chars) {
  return decode_tokens(m, m.encode(chars));
}

inline EvalReport evaluate(const SegmenterModel& m, const std::vector<Unit>& units) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& u : units) count_boundaries(u.seq.tags, decode(m, u.seq.chars), tp, fp, fn);
  return EvalReport::from_counts(tp, fp, fn);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

using TrainCallback = std::function<void(const EpochRecord&)>;

// Minibatch SGD on the mean CRF loss with gradient clipping. The model
// ends up holding the parameters of the epoch with the best validation F1
// (earliest on ties).
inline TrainLog train(SegmenterModel& m, const CorpusSplits& splits, const Hyperparams& hp, std::uint64_t seed,
                      const TrainCallback& on_epoch = {}) {
  hp.validate();
  if (splits.train.empty()) throw ConfigError("training split is empty");
  if (m.input_dim() != static_cast<std::size_t>(hp.embed_dim)) {
    throw ConfigError("model input dimension " + std::to_string(m.input_dim()) + " does not match embed_dim " +
                      std::to_string(hp.embed_dim));
  }
  if (m.hidden() != static_cast<std::size_t>(hp.hidden)) {
    throw ConfigError("model hidden size " + std::to_string(m.hidden()) + " does not match hidden " +
                      std::to_string(hp.hidden));
  }

  struct Encoded {
    std::vector<Token> tokens;
    std::vector<int> gold;
  };
  std::vector<Encoded> data;
  data.reserve(splits.train.size());
  for (const auto& u : splits.train) {
    if (u.seq.empty()) continue;
    data.push_back({m.encode(u.seq.chars), tag_indices(u.seq.tags)});
  }
  if (data.empty()) throw ConfigError("training split contains only empty units");

  const SgdConfig sgd = hp.sgd();
  ParamList trainable = m.trainable(hp.freeze_embeddings);
  ParamList all = m.params();
  for (Param* p : all) p->zero_grad();

  Rng rng(seed);
  TrainLog log;
  std::vector<Matrix> best;
  double best_f1 = -1.0;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    const auto batch = static_cast<std::size_t>(hp.batch);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const Encoded& e = data[order[b]];
        total += unit_loss(m, e.tokens, e.gold, true, hp.dropout, &rng, true, scale);
      }
      sgd_step(trainable, sgd);
      for (Param* p : all) p->zero_grad();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = total / static_cast<double>(data.size());
    rec.valid = evaluate(m, splits.valid);
    if (hp.eval_on_train) rec.train = evaluate(m, splits.train);
    if (rec.valid.f1 > best_f1) {
      best_f1 = rec.valid.f1;
      log.best_epoch = epoch;
      best.clear();
      for (Param* p : all) best.push_back(p->value);
    }
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (!best.empty()) {
    for (std::size_t i = 0; i < all.size(); ++i) all[i]->value = best[i];
  }
  return log;
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

// Normalises `raw` (existing stops are dropped), decodes it in windows of
// `unit_size` characters and rejoins the text with `separator` after every
// predicted sentence end.
inline std::u32string segment(const SegmenterModel& m, std::u32string_view raw, char32_t separator,
                              const PunctConfig& punct = PunctConfig::defaults(), std::size_t unit_size = 100) {
  if (unit_size < 2) throw ConfigError("unit size must be at least 2");
  LabeledSequence seq;
  seq.chars = strip_stops(normalize_text(raw, punct), punct);
  seq.tags.reserve(seq.chars.size());
  for (std::size_t off = 0; off < seq.chars.size(); off += unit_size) {
    auto window = std::u32string_view(seq.chars).substr(off, unit_size);
    auto tags = decode(m, window);
    seq.tags.insert(seq.tags.end(), tags.begin(), tags.end());
  }
  return tags_to_text(seq, separator);
}

inline std::string segment(const SegmenterModel& m, std::string_view raw, std::string_view separator = "/",
                           const PunctConfig& punct = PunctConfig::defaults(), std::size_t unit_size = 100) {
  const auto sep = utf8::decode(separator);
  if (sep.size() != 1) throw ValidationError("separator must be a single character");
  return utf8::encode(segment(m, utf8::decode(raw), sep[0], punct, unit_size));
}

// ---------------------------------------------------------------------------
// Checkpoint
//
//   "GJSEG01\n"  u8 version
//   u32 flags (bit 0: radicals enabled)  u64 radical-table fingerprint
//   u32 |V|, then |V| length-prefixed UTF-8 entries in index order
//   u32 section count, then per section: name, u32 rows, u32 cols, u64 offset
//   section payloads: row-major little-endian float64
// ---------------------------------------------------------------------------

inline constexpr char kModelMagic[8] = {'G', 'J', 'S', 'E', 'G', '0', '1', '\n'};
inline constexpr std::uint8_t kModelVersion = 1;

inline void save_model(SegmenterModel& m, std::ostream& os) {
  std::ostringstream head;
  head.write(kModelMagic, sizeof kModelMagic);
  binio::put(head, kModelVersion);
  binio::put(head, static_cast<std::uint32_t>(m.use_radicals ? 1 : 0));
  binio::put(head, m.radicals->fingerprint());
  binio::put(head, static_cast<std::uint32_t>(m.vocab.size()));
  for (std::size_t i = 0; i < m.vocab.size(); ++i) binio::put_string(head, utf8::encode(m.vocab.at(static_cast<int>(i))));

  ParamList ps = m.params();
  binio::put(head, static_cast<std::uint32_t>(ps.size()));
  std::size_t table_size = 0;
  for (Param* p : ps) table_size += 4 + p->name.size() + 4 + 4 + 8;
  std::uint64_t offset = static_cast<std::uint64_t>(head.str().size()) + table_size;
  for (Param* p : ps) {
    binio::put_string(head, p->name);
    binio::put(head, static_cast<std::uint32_t>(p->value.rows()));
    binio::put(head, static_cast<std::uint32_t>(p->value.cols()));
    binio::put(head, offset);
    offset += 8ULL * p->value.size();
  }
  const std::string h = head.str();
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (Param* p : ps) binio::put_f64s(os, p->value.data());
}

inline void save_model(SegmenterModel& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write model: " + path);
  save_model(m, os);
  if (!os) throw FormatError("write failed: " + path);
}

// `table` is the radical table the caller will segment with; it must be the
// one the model was trained with.
inline SegmenterModel load_model(std::istream& is, std::shared_ptr<const RadicalTable> table) {
  binio::Reader rd(is);
  char magic[8];
  rd.set_context("magic");
  rd.bytes(magic, sizeof magic);
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kModelMagic))) {
    throw FormatError("not a model checkpoint (bad magic)");
  }
  rd.set_context("header");
  if (const auto v = rd.get<std::uint8_t>(); v != kModelVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(v));
  }
  const auto flags = rd.get<std::uint32_t>();
  const auto fingerprint = rd.get<std::uint64_t>();
  if (table && table->fingerprint() != fingerprint) {
    throw FormatError("section 'header': radical table does not match the one the model was trained with");
  }

  rd.set_context("vocab");
  const auto vocab_size = rd.get<std::uint32_t>();
  if (vocab_size < 2 || vocab_size > (1u << 24)) throw FormatError("section 'vocab': invalid size");
  Vocab vocab;
  for (std::uint32_t i = 0; i < vocab_size; ++i) {
    std::u32string s;
    try {
      s = utf8::decode(rd.get_string(16));
    } catch (const Utf8Error& e) {
      throw FormatError(std::string("section 'vocab': ") + e.what());
    }
    if (s.size() != 1) throw FormatError("section 'vocab': entry " + std::to_string(i) + " is not one character");
    if (i >= 2) {
      try {
        vocab.add(s[0]);
      } catch (const ValidationError& e) {
        throw FormatError(std::string("section 'vocab': ") + e.what());
      }
    }
  }

  struct Entry {
    std::uint32_t rows, cols;
    std::uint64_t offset;
  };
  rd.set_context("section table");
  const auto count = rd.get<std::uint32_t>();
  if (count > 1024) throw FormatError("section table too large");
  std::map<std::string, Entry> sections;
  std::vector<std::string> order;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = rd.get_string(256);
    Entry e{rd.get<std::uint32_t>(), rd.get<std::uint32_t>(), rd.get<std::uint64_t>()};
    if (!sections.emplace(name, e).second) throw FormatError("duplicate section '" + name + "'");
    order.push_back(std::move(name));
  }
  auto need = [&](const std::string& name) -> const Entry& {
    auto it = sections.find(name);
    if (it == sections.end()) throw FormatError("section '" + name + "' missing");
    return it->second;
  };
  const Entry& chars = need("embed.chars");
  const Entry& rads = need("embed.radicals");
  const Entry& whi = need("lstm.fwd.W_hi");
  if (chars.rows != vocab_size) throw FormatError("section 'embed.chars': rows do not match vocabulary size");
  if (rads.rows != kRadicalRows) throw FormatError("section 'embed.radicals': expected 215 rows");
  if (chars.cols == 0 || rads.cols == 0 || whi.rows == 0 || chars.cols > 4096 || rads.cols > 4096 || whi.rows > 4096) {
    throw FormatError("section 'embed.chars': implausible dimensions");
  }

  SegmenterModel m(std::move(vocab), table ? table : std::make_shared<const RadicalTable>(), chars.cols, rads.cols,
                   whi.rows);
  m.use_radicals = (flags & 1u) != 0;
  ParamList ps = m.params();
  if (ps.size() != count) throw FormatError("section table: expected " + std::to_string(ps.size()) + " sections");
  auto expected_offset = static_cast<std::uint64_t>(std::streamoff(is.tellg()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Param* p = ps[i];
    if (order[i] != p->name) throw FormatError("section '" + order[i] + "': unexpected (wanted '" + p->name + "')");
    const Entry& e = sections.at(p->name);
    if (e.rows != p->value.rows() || e.cols != p->value.cols()) {
      throw FormatError("section '" + p->name + "': shape " + Matrix::shape_string(e.rows, e.cols) +
                        " inconsistent, expected " + p->value.shape());
    }
    if (e.offset != expected_offset) throw FormatError("section '" + p->name + "': bad offset");
    expected_offset = e.offset + 8ULL * p->value.size();
  }
  for (Param* p : ps) {
    rd.set_context("section '" + p->name + "'");
    rd.get_f64s(p->value.data());
    for (double v : p->value.data()) {
      if (!std::isfinite(v)) throw FormatError("section '" + p->name + "': non-finite value");
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after last section");
  return m;
}

inline SegmenterModel load_model(const std::string& path, std::shared_ptr<const RadicalTable> table) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open model: " + path);
  return load_model(is, std::move(table));
}

}  // namespace gujian
