#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <gujian/gujian.hpp>

namespace fixtures {

using namespace gujian;

inline std::shared_ptr<const RadicalTable> default_table() {
  static const auto table = std::make_shared<const RadicalTable>(load_radical_table(kDefaultRadicalTablePath));
  return table;
}

// Unihan kRSUnicode radicals, looked up independently of the shipped table.
struct RadicalOracle {
  char32_t ch;
  int radical;
};

inline const std::vector<RadicalOracle>& figure_characters() {
  static const std::vector<RadicalOracle> v = {
      {U'腿', 130}, {U'膊', 130}, {U'雲', 173}, {U'云', 7},   {U'雨', 173},
      {U'月', 74},  {U'肉', 130}, {U'臂', 130}, {U'腰', 130}, {U'脚', 130},
  };
  return v;
}

struct RadicalPair {
  char32_t a;
  char32_t b;
  int radical;
};

inline const std::vector<RadicalPair>& same_radical_pairs() {
  static const std::vector<RadicalPair> v = {
      {U'兟', U'児', 10},  {U'兮', U'其', 12},  {U'册', U'冔', 13},  {U'冮', U'凒', 15},  {U'処', U'凯', 16},
      {U'劁', U'剔', 18},  {U'勈', U'勜', 19},  {U'匹', U'匿', 23},  {U'卂', U'卛', 24},  {U'卨', U'卞', 25},
      {U'厒', U'厗', 27},  {U'囶', U'囡', 31},  {U'圶', U'壚', 32},  {U'夑', U'夐', 35},  {U'奀', U'奔', 37},
      {U'子', U'孰', 39},  {U'巜', U'巤', 47},  {U'弅', U'弃', 55},  {U'弮', U'強', 57},  {U'彔', U'彞', 58},
      {U'戡', U'或', 62},  {U'機', U'楩', 75},  {U'毈', U'段', 79},  {U'氓', U'民', 83},  {U'猍', U'獅', 94},
      {U'畃', U'畷', 102}, {U'盞', U'盤', 108}, {U'睧', U'睭', 109}, {U'碵', U'磁', 112}, {U'臊', U'肖', 130},
      {U'艮', U'艱', 138}, {U'艷', U'艴', 139}, {U'蜂', U'蠼', 142}, {U'衈', U'衅', 143}, {U'衟', U'衢', 144},
      {U'袔', U'衴', 145}, {U'覢', U'覟', 147}, {U'觧', U'觛', 148}, {U'詙', U'诹', 149}, {U'谺', U'谽', 150},
      {U'農', U'辱', 161}, {U'遙', U'迳', 162}, {U'錪', U'錏', 167}, {U'隷', U'隶', 171}, {U'馥', U'馜', 186},
      {U'鬰', U'鬱', 192}, {U'麛', U'麔', 198}, {U'鼁', U'鼆', 205}, {U'齏', U'齑', 210}, {U'龒', U'龚', 212},
  };
  return v;
}

// ---------------------------------------------------------------------------
// Overfit fixture: every sentence ends with one of a few final characters
// that never occur inside a sentence.

inline const std::u32string kOverfitBody = U"天地玄黃宇宙洪荒日月盈昃辰宿列張寒來暑往秋收冬藏閏餘成歲律調陽雲騰致雨露結為霜三人必有我師";
inline const std::u32string kOverfitFinals = U"也矣焉乎哉行";

// Punctuated text of at least `min_chars` Han characters.
inline std::u32string overfit_text(std::size_t min_chars, std::uint64_t seed) {
  Rng rng(seed);
  std::u32string text = U"三人行，必有我師焉。";
  std::size_t han = 8;
  while (han < min_chars) {
    const std::size_t len = 2 + rng.below(7);
    for (std::size_t i = 0; i + 1 < len; ++i) text.push_back(kOverfitBody[rng.below(kOverfitBody.size())]);
    text.push_back(kOverfitFinals[rng.below(kOverfitFinals.size())]);
    text.push_back(U'。');
    han += len;
  }
  return text;
}

inline std::vector<Unit> overfit_units(std::size_t num_units = 20, std::uint64_t seed = 7) {
  auto seq = text_to_tags(overfit_text(num_units * 100, seed), PunctConfig::defaults());
  seq.chars.resize(num_units * 100);
  seq.tags.resize(num_units * 100);
  return chunk_units(seq, 100, "overfit");
}

// ---------------------------------------------------------------------------
// Radical-signal fixture: sentence-final characters come from two radical
// classes (口 and 心); body characters carry neither radical. Held-out units
// use final characters that never appear in the training units.

inline const std::u32string kSignalBody =
    U"天地玄黃宇宙荒日月盈昃辰宿列張寒來暑往秋收冬藏閏餘成歲律陽雲騰致雨露結為霜金生麗玉出崑岡劍號巨闕珠稱夜光果珍李柰菜重芥薑";
inline const std::u32string kSignalTrainFinals = U"呢吧嗎哉唄志忠念思怨";
inline const std::u32string kSignalHeldOutFinals = U"啊哦嘛咧呀恩悲惑意愛";
inline constexpr int kSignalRadicalA = 30;
inline constexpr int kSignalRadicalB = 61;

inline std::vector<Unit> signal_units(std::size_t num_units, const std::u32string& finals, std::uint64_t seed,
                                      const std::string& doc) {
  Rng rng(seed);
  std::u32string text;
  std::size_t han = 0;
  while (han < num_units * 100) {
    const std::size_t len = 3 + rng.below(7);
    for (std::size_t i = 0; i + 1 < len; ++i) text.push_back(kSignalBody[rng.below(kSignalBody.size())]);
    text.push_back(finals[rng.below(finals.size())]);
    text.push_back(U'。');
    han += len;
  }
  auto seq = text_to_tags(text, PunctConfig::defaults());
  seq.chars.resize(num_units * 100);
  seq.tags.resize(num_units * 100);
  return chunk_units(seq, 100, doc);
}

// ---------------------------------------------------------------------------
// Random normalized punctuated text for round-trip properties.

inline std::u32string random_punctuated(Rng& rng, std::size_t max_len = 60) {
  static const std::u32string han = U"天地玄黃宇宙洪荒日月盈昃□";
  static const std::u32string stops = U"，。；？！,;?!";
  std::u32string out;
  const std::size_t len = rng.below(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    const bool stop = !out.empty() && !PunctConfig::defaults().is_stop(out.back()) && rng.below(4) == 0;
    out.push_back(stop ? stops[rng.below(stops.size())] : han[rng.below(han.size())]);
  }
  return out;
}

// Where a separator belongs: every stop mark except a final one.
inline std::u32string expected_segmentation(const std::u32string& punctuated, char32_t sep) {
  const auto punct = PunctConfig::defaults();
  std::u32string out;
  for (char32_t c : punctuated) out.push_back(punct.is_stop(c) ? sep : c);
  if (!out.empty() && out.back() == sep) out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force CRF oracle: enumerates all k^n paths.

inline std::vector<std::vector<int>> all_paths(std::size_t n, std::size_t k) {
  std::vector<std::vector<int>> out;
  std::vector<int> y(n, 0);
  while (true) {
    out.push_back(y);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (static_cast<std::size_t>(++y[i]) < k) break;
      y[i] = 0;
      if (i == 0) return out;
    }
    if (n == 0) return out;
  }
}

// Independent re-statement of the path score.
inline double brute_score(const Matrix& p, const Matrix& a, const std::vector<int>& y) {
  const std::size_t k = p.cols();
  const std::size_t start = k, stop = k + 1;
  double s = 0.0;
  std::size_t prev = start;
  for (std::size_t i = 0; i < y.size(); ++i) {
    s += a(prev, static_cast<std::size_t>(y[i])) + p(i, static_cast<std::size_t>(y[i]));
    prev = static_cast<std::size_t>(y[i]);
  }
  return s + a(prev, stop);
}

inline double brute_log_partition(const Matrix& p, const Matrix& a) {
  std::vector<double> scores;
  for (const auto& y : all_paths(p.rows(), p.cols())) scores.push_back(brute_score(p, a, y));
  const double m = *std::max_element(scores.begin(), scores.end());
  double s = 0.0;
  for (double x : scores) s += std::exp(x - m);
  return m + std::log(s);
}

// Among maximal paths, prefers the lowest tag at the last position, then the
// lowest at the one before, and so on: the order a backtracking decoder with
// lowest-index tie-breaking produces.
inline std::vector<int> brute_argmax(const Matrix& p, const Matrix& a) {
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  auto later_first_less = [](const std::vector<int>& x, const std::vector<int>& y) {
    return std::lexicographical_compare(x.rbegin(), x.rend(), y.rbegin(), y.rend());
  };
  for (const auto& y : all_paths(p.rows(), p.cols())) {
    const double s = brute_score(p, a, y);
    if (s > best_score || (s == best_score && later_first_less(y, best))) {
      best_score = s;
      best = y;
    }
  }
  return best;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

inline crf::CrfParams random_crf(std::size_t k, Rng& rng, double scale = 1.0) {
  crf::CrfParams a(k);
  for (double& v : a.transitions.value.data()) v = rng.uniform(-scale, scale);
  a.pin();
  return a;
}

// Random instance with integer-valued scores, so exact ties are common.
inline crf::CrfParams tied_crf(std::size_t k, Rng& rng) {
  crf::CrfParams a(k);
  for (double& v : a.transitions.value.data()) v = static_cast<double>(rng.below(3));
  a.pin();
  return a;
}

// ---------------------------------------------------------------------------
// Small models for gradient checks.

inline Vocab small_vocab() { return Vocab(U"天地人雲腿膊"); }

inline SegmenterModel tiny_model(std::uint64_t seed, std::size_t dc = 2, std::size_t dr = 2, std::size_t hidden = 3) {
  auto m = SegmenterModel::random(small_vocab(), default_table(), dc, dr, hidden, seed);
  // Transitions start at zero; give them values so their gradients are exercised.
  Rng rng(seed + 1000);
  for (double& v : m.crf.transitions.value.data()) v = rng.uniform(-0.5, 0.5);
  m.crf.pin();
  for (double& v : m.emit_b.value.data()) v = rng.uniform(-0.5, 0.5);
  for (Param* p : m.bilstm.params()) {
    if (p->value.rows() == 1) {
      for (double& v : p->value.data()) v = rng.uniform(-0.5, 0.5);
    }
  }
  return m;
}

// Tags 也 as E and every other character as O: the forward cell sees only the
// current character (forget gate shut) and the emission layer reads its sign.
inline SegmenterModel particle_model() {
  SegmenterModel m(Vocab(U"天地也"), default_table(), 2, 1, 1);
  const auto id = static_cast<std::size_t>(m.vocab.index(U'也'));
  for (std::size_t r = 0; r < m.char_emb.value.rows(); ++r) m.char_emb.value(r, 0) = (r == id) ? 3.0 : -3.0;
  m.bilstm.forward.W_xc.value(0, 0) = 1.0;
  m.bilstm.forward.b_f.value(0, 0) = -50.0;
  m.emit_w.value(0, static_cast<std::size_t>(Tag::E)) = 10.0;
  m.emit_w.value(0, static_cast<std::size_t>(Tag::O)) = -10.0;
  return m;
}

}  // namespace fixtures
