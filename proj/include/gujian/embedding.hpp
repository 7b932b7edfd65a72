#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "corpus.hpp"
#include "errors.hpp"
#include "nncore.hpp"
#include "radicals.hpp"
#include "utf8.hpp"

// Radical-augmented CBOW. Each context position contributes its character
// vector followed by its radical vector, in positional order, and one
// projection matrix W maps the concatenation to logits over the vocabulary:
//
//   h_i = [c_{i-N} r_{i-N} ... c_{i-1} r_{i-1} c_{i+1} r_{i+1} ... c_{i+N} r_{i+N}]
//   loss = -log softmax(W h_i)[x_i]
namespace gujian {

struct EmbeddingConfig {
  int dim_char = 70;
  int dim_radical = 30;
  int window = 2;
  int epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  int dim() const { return dim_char + dim_radical; }
  std::size_t context_length() const { return static_cast<std::size_t>(2 * window * dim()); }

  void validate() const {
    if (dim_char < 1) throw ConfigError("char embedding dimension must be >= 1");
    if (dim_radical < 1) throw ConfigError("radical embedding dimension must be >= 1");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  }
};

struct EmbeddingSet {
  Vocab vocab;
  Matrix char_vectors;     // |V| x d_c
  Matrix radical_vectors;  // 215 x d_r
  int window = 2;

  int dim_char() const { return static_cast<int>(char_vectors.cols()); }
  int dim_radical() const { return static_cast<int>(radical_vectors.cols()); }

  // c || r for one character.
  Vec joint_vector(char32_t ch, const RadicalTable& table) const {
    auto c = char_vectors.row(static_cast<std::size_t>(vocab.index(ch)));
    auto r = radical_vectors.row(static_cast<std::size_t>(table.radical_index(ch)));
    Vec out(c.begin(), c.end());
    out.insert(out.end(), r.begin(), r.end());
    return out;
  }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

struct CbowModel {
  EmbeddingConfig config;
  Param chars;       // |V| x d_c
  Param radicals;    // 215 x d_r
  Param projection;  // |V| x 2N(d_c + d_r)

  CbowModel(std::size_t vocab_size, const EmbeddingConfig& cfg)
      : config(cfg),
        chars("cbow.chars", vocab_size, static_cast<std::size_t>(cfg.dim_char)),
        radicals("cbow.radicals", kRadicalRows, static_cast<std::size_t>(cfg.dim_radical)),
        projection("cbow.W", vocab_size, cfg.context_length()) {
    cfg.validate();
  }

  std::size_t vocab_size() const { return chars.value.rows(); }

  ParamList params() { return {&chars, &radicals, &projection}; }

  // Uniform in [-0.5/cols, 0.5/cols] for each matrix.
  void init(Rng& rng) {
    for (Param* p : params()) p->init_uniform(rng, 0.5 / static_cast<double>(p->value.cols()));
  }
};

// Concatenated context of `center`; positions outside the sequence use the
// PAD character row and the sentinel radical row.
inline Vec context_vector(const CbowModel& m, std::span<const Token> tokens, std::size_t center) {
  if (center >= tokens.size()) throw std::out_of_range("context_vector: center outside sequence");
  const auto dc = static_cast<std::size_t>(m.config.dim_char);
  const auto dr = static_cast<std::size_t>(m.config.dim_radical);
  const int n = m.config.window;
  Vec h;
  h.reserve(m.config.context_length());
  for (int off = -n; off <= n; ++off) {
    if (off == 0) continue;
    const auto pos = static_cast<std::ptrdiff_t>(center) + off;
    Token t{Vocab::kPad, 0};
    if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(tokens.size())) t = tokens[static_cast<std::size_t>(pos)];
    auto c = m.chars.value.row(static_cast<std::size_t>(t.ch));
    auto r = m.radicals.value.row(static_cast<std::size_t>(t.radical));
    h.insert(h.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(dc));
    h.insert(h.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(dr));
  }
  return h;
}

inline Vec softmax(std::span<const double> logits) {
  double m = -INFINITY;
  for (double x : logits) m = std::max(m, x);
  Vec p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] = std::exp(logits[i] - m));
  for (double& v : p) v /= s;
  return p;
}

namespace detail {

struct CbowPass {
  Vec h;
  Vec dlogits;  // softmax - onehot
  double loss = 0.0;
};

inline CbowPass cbow_pass(const CbowModel& m, std::span<const Token> tokens, std::size_t center) {
  CbowPass r;
  r.h = context_vector(m, tokens, center);
  Vec logits(m.vocab_size(), 0.0);
  gemv_acc(m.projection.value, r.h, logits);
  double mx = -INFINITY;
  for (double x : logits) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : logits) s += std::exp(x - mx);
  const double log_z = mx + std::log(s);
  const auto target = static_cast<std::size_t>(tokens[center].ch);
  r.loss = log_z - logits[target];
  r.dlogits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) r.dlogits[i] = std::exp(logits[i] - log_z);
  r.dlogits[target] -= 1.0;
  return r;
}

// Calls visit(row_matrix_is_char, row_index, slice_of_dh) for each context slot.
template <typename Visit>
void scatter_context(const CbowModel& m, std::span<const Token> tokens, std::size_t center,
                     std::span<const double> dh, Visit&& visit) {
  const auto dc = static_cast<std::size_t>(m.config.dim_char);
  const auto dr = static_cast<std::size_t>(m.config.dim_radical);
  const int n = m.config.window;
  std::size_t slot = 0;
  for (int off = -n; off <= n; ++off) {
    if (off == 0) continue;
    const auto pos = static_cast<std::ptrdiff_t>(center) + off;
    Token t{Vocab::kPad, 0};
    if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(tokens.size())) t = tokens[static_cast<std::size_t>(pos)];
    const std::size_t base = slot * (dc + dr);
    visit(true, static_cast<std::size_t>(t.ch), dh.subspan(base, dc));
    visit(false, static_cast<std::size_t>(t.radical), dh.subspan(base + dc, dr));
    ++slot;
  }
}

}  // namespace detail

inline double cbow_forward_loss(const CbowModel& m, std::span<const Token> tokens, std::size_t center) {
  return detail::cbow_pass(m, tokens, center).loss;
}

// Loss plus gradient accumulation into the model's Param::grad buffers.
inline double cbow_backward(CbowModel& m, std::span<const Token> tokens, std::size_t center) {
  auto pass = detail::cbow_pass(m, tokens, center);
  Vec dh(pass.h.size(), 0.0);
  gemv_t_acc(m.projection.value, pass.dlogits, dh);
  outer_acc(m.projection.grad, pass.dlogits, pass.h);
  detail::scatter_context(m, tokens, center, dh, [&](bool is_char, std::size_t row, std::span<const double> g) {
    axpy(1.0, g, (is_char ? m.chars.grad : m.radicals.grad).row(row));
  });
  return pass.loss;
}

// One plain SGD update on a single (sequence, center) pair.
inline double cbow_sgd_update(CbowModel& m, std::span<const Token> tokens, std::size_t center, double lr) {
  auto pass = detail::cbow_pass(m, tokens, center);
  Vec dh(pass.h.size(), 0.0);
  gemv_t_acc(m.projection.value, pass.dlogits, dh);
  for (double& d : pass.dlogits) d *= -lr;
  outer_acc(m.projection.value, pass.dlogits, pass.h);
  detail::scatter_context(m, tokens, center, dh, [&](bool is_char, std::size_t row, std::span<const double> g) {
    axpy(-lr, g, (is_char ? m.chars.value : m.radicals.value).row(row));
  });
  return pass.loss;
}

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

inline EmbeddingSet extract_embeddings(const CbowModel& m, const Vocab& vocab) {
  return EmbeddingSet{vocab, m.chars.value, m.radicals.value, m.config.window};
}

// Sequential SGD over every (sequence, position) pair, in corpus order.
inline CbowModel train_cbow(const std::vector<std::vector<Token>>& corpus, const Vocab& vocab,
                            const EmbeddingConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  std::size_t pairs = 0;
  for (const auto& s : corpus) pairs += s.size();
  if (pairs == 0) throw ConfigError("cannot pretrain embeddings on an empty corpus");
  for (const auto& s : corpus) {
    for (const Token& t : s) {
      if (t.ch < 0 || static_cast<std::size_t>(t.ch) >= vocab.size() || t.radical < 0 || t.radical >= kRadicalRows) {
        throw ValidationError("token out of range for the vocabulary or radical table");
      }
    }
  }
  CbowModel model(vocab.size(), cfg);
  Rng rng(cfg.seed);
  model.init(rng);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& seq : corpus) {
      for (std::size_t c = 0; c < seq.size(); ++c) total += cbow_sgd_update(model, seq, c, cfg.learning_rate);
    }
    if (on_epoch) on_epoch(epoch + 1, total / static_cast<double>(pairs));
  }
  return model;
}

inline EmbeddingSet train_embeddings(const std::vector<std::vector<Token>>& corpus, const Vocab& vocab,
                                     const EmbeddingConfig& cfg, const EpochCallback& on_epoch = {}) {
  return extract_embeddings(train_cbow(corpus, vocab, cfg, on_epoch), vocab);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline constexpr char kEmbeddingMagic[8] = {'G', 'J', 'E', 'M', 'B', '0', '1', '\n'};

inline void save_embeddings(const EmbeddingSet& set, std::ostream& os) {
  os.write(kEmbeddingMagic, sizeof kEmbeddingMagic);
  binio::put(os, static_cast<std::uint32_t>(set.vocab.size()));
  binio::put(os, static_cast<std::uint32_t>(set.dim_char()));
  binio::put(os, static_cast<std::uint32_t>(set.dim_radical()));
  binio::put(os, static_cast<std::uint32_t>(set.window));
  binio::put(os, std::uint32_t{0});
  for (std::size_t i = 0; i < set.vocab.size(); ++i) {
    binio::put_string(os, utf8::encode(set.vocab.at(static_cast<int>(i))));
  }
  binio::put_f64s(os, set.char_vectors.data());
  binio::put_f64s(os, set.radical_vectors.data());
}

inline void save_embeddings(const EmbeddingSet& set, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write embeddings: " + path);
  save_embeddings(set, os);
  if (!os) throw FormatError("write failed: " + path);
}

inline EmbeddingSet load_embeddings(std::istream& is) {
  binio::Reader rd(is);
  char magic[8];
  rd.set_context("magic");
  rd.bytes(magic, sizeof magic);
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kEmbeddingMagic))) {
    throw FormatError("not an embedding file (bad magic)");
  }
  rd.set_context("header");
  const auto vocab_size = rd.get<std::uint32_t>();
  const auto dc = rd.get<std::uint32_t>();
  const auto dr = rd.get<std::uint32_t>();
  const auto window = rd.get<std::uint32_t>();
  const auto reserved = rd.get<std::uint32_t>();
  if (reserved != 0) throw FormatError("unsupported embedding file version");
  if (vocab_size < 2 || dc == 0 || dr == 0 || window == 0) throw FormatError("invalid embedding header");
  if (vocab_size > (1u << 24) || dc > 4096 || dr > 4096) throw FormatError("embedding header out of range");

  rd.set_context("vocab");
  EmbeddingSet set;
  for (std::uint32_t i = 0; i < vocab_size; ++i) {
    std::u32string s;
    try {
      s = utf8::decode(rd.get_string(16));
    } catch (const Utf8Error& e) {
      throw FormatError(std::string("vocab entry: ") + e.what());
    }
    if (s.size() != 1) throw FormatError("vocab entry " + std::to_string(i) + " is not a single character");
    if (i == 0 && s[0] != Vocab::kPadChar) throw FormatError("vocab entry 0 must be PAD");
    if (i == 1 && s[0] != Vocab::kUnkChar) throw FormatError("vocab entry 1 must be UNK");
    if (i >= 2) {
      try {
        set.vocab.add(s[0]);
      } catch (const ValidationError& e) {
        throw FormatError(e.what());
      }
    }
  }
  rd.set_context("char_vectors");
  set.char_vectors = Matrix(vocab_size, dc);
  rd.get_f64s(set.char_vectors.data());
  rd.set_context("radical_vectors");
  set.radical_vectors = Matrix(kRadicalRows, dr);
  rd.get_f64s(set.radical_vectors.data());
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after embedding data");
  set.window = static_cast<int>(window);
  return set;
}

inline EmbeddingSet load_embeddings(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open embeddings: " + path);
  return load_embeddings(is);
}

// word2vec text layout: "count dim" then "char v1 ... vd", vectors being c || r.
inline void export_word2vec_text(const EmbeddingSet& set, const RadicalTable& table, std::ostream& os) {
  const auto entries = set.vocab.entries();
  os << entries.size() << ' ' << (set.dim_char() + set.dim_radical()) << '\n';
  char buf[32];
  for (char32_t c : entries) {
    os << utf8::encode(c);
    for (double v : set.joint_vector(c, table)) {
      std::snprintf(buf, sizeof buf, " %.9g", v);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace gujian
