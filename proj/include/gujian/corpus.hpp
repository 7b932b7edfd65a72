#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "nncore.hpp"
#include "radicals.hpp"
#include "utf8.hpp"

namespace gujian {

inline constexpr char32_t kUnsureChar = U'□';  // □

// CJK ideograph blocks, including extensions and compatibility forms.
inline bool is_han(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0x20000 && c <= 0x323AF) || (c >= 0xF900 && c <= 0xFAFF) ||
         (c >= 0x2F800 && c <= 0x2FA1F) || c == 0x3007;
}

// ---------------------------------------------------------------------------
// Tags
// ---------------------------------------------------------------------------

// Sentence position of a character. The numeric values are the CRF tag
// indices and are part of the checkpoint format.
enum class Tag : std::uint8_t { B = 0, E = 1, O = 2 };

inline constexpr int kNumTags = 3;

inline char tag_letter(Tag t) {
  switch (t) {
    case Tag::B: return 'B';
    case Tag::E: return 'E';
    case Tag::O: return 'O';
  }
  return '?';
}

inline Tag tag_from_letter(char c) {
  switch (c) {
    case 'B': return Tag::B;
    case 'E': return Tag::E;
    case 'O': return Tag::O;
    default: throw ParseError(std::string("unknown tag letter '") + c + "'");
  }
}

inline std::string tags_to_string(const std::vector<Tag>& tags) {
  std::string s;
  s.reserve(tags.size());
  for (Tag t : tags) s.push_back(tag_letter(t));
  return s;
}

inline std::vector<Tag> tags_from_string(std::string_view s) {
  std::vector<Tag> tags;
  tags.reserve(s.size());
  for (char c : s) tags.push_back(tag_from_letter(c));
  return tags;
}

struct LabeledSequence {
  std::u32string chars;
  std::vector<Tag> tags;

  std::size_t size() const { return chars.size(); }
  bool empty() const { return chars.empty(); }
  friend bool operator==(const LabeledSequence&, const LabeledSequence&) = default;
};

// True when tags follow (B O* E | E)* (B O*)?.
inline bool well_formed(const std::vector<Tag>& tags) {
  bool open = false;
  for (Tag t : tags) {
    switch (t) {
      case Tag::B:
        if (open) return false;
        open = true;
        break;
      case Tag::O:
        if (!open) return false;
        break;
      case Tag::E:
        open = false;
        break;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Punctuation and text normalisation
// ---------------------------------------------------------------------------

struct PunctConfig {
  std::set<char32_t> stops;

  bool is_stop(char32_t c) const { return stops.count(c) != 0; }

  static PunctConfig defaults() {
    return from_utf8("，。；？！,;?!");
  }

  static PunctConfig from_utf8(std::string_view s) {
    PunctConfig cfg;
    for (char32_t c : utf8::decode(s)) cfg.stops.insert(c);
    cfg.validate();
    return cfg;
  }

  void validate() const {
    if (stops.empty()) throw ConfigError("stop set must not be empty");
    for (char32_t c : stops) {
      if (is_han(c) || c == kUnsureChar) {
        throw ConfigError("stop set contains a Han character: " + utf8::encode(c));
      }
    }
  }
};

// Keeps Han characters, □ and stop marks. Runs of stops collapse to the
// first one, and a stop with no preceding character is dropped.
inline std::u32string normalize_text(std::u32string_view raw, const PunctConfig& punct) {
  std::u32string out;
  out.reserve(raw.size());
  for (char32_t c : raw) {
    if (is_han(c) || c == kUnsureChar) {
      out.push_back(c);
    } else if (punct.is_stop(c)) {
      if (!out.empty() && !punct.is_stop(out.back())) out.push_back(c);
    }
  }
  return out;
}

inline std::string normalize_text(std::string_view raw, const PunctConfig& punct) {
  return utf8::encode(normalize_text(utf8::decode(raw), punct));
}

// Drops stop marks from already-normalised text.
inline std::u32string strip_stops(std::u32string_view text, const PunctConfig& punct) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    if (!punct.is_stop(c)) out.push_back(c);
  }
  return out;
}

namespace detail {
inline void tag_sentence(std::size_t len, bool closed, std::vector<Tag>& tags) {
  if (len == 0) return;
  if (closed && len == 1) {
    tags.push_back(Tag::E);
    return;
  }
  tags.push_back(Tag::B);
  for (std::size_t i = 1; i + 1 < len; ++i) tags.push_back(Tag::O);
  if (len > 1) tags.push_back(closed ? Tag::E : Tag::O);
}
}  // namespace detail

inline LabeledSequence text_to_tags(std::u32string_view punctuated, const PunctConfig& punct) {
  LabeledSequence seq;
  seq.chars.reserve(punctuated.size());
  seq.tags.reserve(punctuated.size());
  std::size_t run = 0;
  for (char32_t c : punctuated) {
    if (punct.is_stop(c)) {
      detail::tag_sentence(run, true, seq.tags);
      run = 0;
    } else {
      seq.chars.push_back(c);
      ++run;
    }
  }
  detail::tag_sentence(run, false, seq.tags);
  return seq;
}

// Emits the characters, with `separator` after each E except the last
// character of the sequence.
inline std::u32string tags_to_text(const LabeledSequence& seq, char32_t separator) {
  if (seq.chars.size() != seq.tags.size()) {
    throw DimensionError("tags_to_text: " + std::to_string(seq.chars.size()) + " chars vs " +
                         std::to_string(seq.tags.size()) + " tags");
  }
  std::u32string out;
  out.reserve(seq.chars.size() * 2);
  for (std::size_t i = 0; i < seq.chars.size(); ++i) {
    out.push_back(seq.chars[i]);
    if (seq.tags[i] == Tag::E && i + 1 < seq.chars.size()) out.push_back(separator);
  }
  return out;
}

// Deletes every sentence (with its stop) that has more than `max_run`
// consecutive □.
inline std::u32string clean_unsure(std::u32string_view text, const PunctConfig& punct,
                                   std::size_t max_run = 5) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = start;
    std::size_t run = 0;
    std::size_t longest = 0;
    while (end < text.size() && !punct.is_stop(text[end])) {
      run = text[end] == kUnsureChar ? run + 1 : 0;
      longest = std::max(longest, run);
      ++end;
    }
    if (end < text.size()) ++end;  // include the stop
    if (longest <= max_run) out.append(text.substr(start, end - start));
    start = end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Units and splits
// ---------------------------------------------------------------------------

struct Unit {
  LabeledSequence seq;
  std::string doc;
  std::size_t offset = 0;

  friend bool operator==(const Unit&, const Unit&) = default;
};

inline std::vector<Unit> chunk_units(const LabeledSequence& seq, std::size_t unit_size = 100,
                                     const std::string& doc = {}) {
  if (unit_size < 2) throw ConfigError("unit size must be at least 2, got " + std::to_string(unit_size));
  if (seq.chars.size() != seq.tags.size()) throw DimensionError("chunk_units: chars/tags length mismatch");
  std::vector<Unit> units;
  for (std::size_t off = 0; off < seq.size(); off += unit_size) {
    const std::size_t len = std::min(unit_size, seq.size() - off);
    Unit u;
    u.seq.chars = seq.chars.substr(off, len);
    u.seq.tags.assign(seq.tags.begin() + static_cast<std::ptrdiff_t>(off),
                      seq.tags.begin() + static_cast<std::ptrdiff_t>(off + len));
    u.doc = doc;
    u.offset = off;
    units.push_back(std::move(u));
  }
  return units;
}

struct CorpusSplits {
  std::vector<Unit> train;
  std::vector<Unit> valid;
  std::vector<Unit> test;
  std::uint64_t seed = 0;
};

// Shuffles, then takes floor(n/4) for validation and test each; the rest
// (at least half) is training data.
inline CorpusSplits split_corpus(std::vector<Unit> units, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(units);
  const std::size_t n = units.size();
  const std::size_t n_valid = n / 4;
  const std::size_t n_test = n / 4;
  const std::size_t n_train = n - n_valid - n_test;
  CorpusSplits s;
  s.seed = seed;
  auto it = std::make_move_iterator(units.begin());
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  s.valid.assign(it + static_cast<std::ptrdiff_t>(n_train), it + static_cast<std::ptrdiff_t>(n_train + n_valid));
  s.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_valid), std::make_move_iterator(units.end()));
  return s;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr char32_t kPadChar = 0;
  static constexpr char32_t kUnkChar = 0xFFFD;

  Vocab() : index_to_char_{kPadChar, kUnkChar} {}

  // Appends chars in the given order. Duplicates are rejected.
  explicit Vocab(const std::u32string& chars) : Vocab() {
    for (char32_t c : chars) add(c);
  }

  int add(char32_t c) {
    auto [it, inserted] = char_to_index_.emplace(c, static_cast<int>(index_to_char_.size()));
    if (!inserted) throw ValidationError("duplicate vocabulary entry " + utf8::encode(c));
    index_to_char_.push_back(c);
    return it->second;
  }

  int index(char32_t c) const {
    auto it = char_to_index_.find(c);
    return it == char_to_index_.end() ? kUnk : it->second;
  }

  bool contains(char32_t c) const { return char_to_index_.count(c) != 0; }
  char32_t at(int i) const { return index_to_char_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return index_to_char_.size(); }

  // Non-special entries in index order.
  std::u32string entries() const { return {index_to_char_.begin() + 2, index_to_char_.end()}; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.index_to_char_ == b.index_to_char_; }

 private:
  std::unordered_map<char32_t, int> char_to_index_;
  std::vector<char32_t> index_to_char_;
};

// Frequency descending, then code point ascending.
inline Vocab build_vocab(const std::vector<Unit>& units, std::size_t min_count = 1) {
  std::map<char32_t, std::size_t> counts;
  for (const auto& u : units) {
    for (char32_t c : u.seq.chars) ++counts[c];
  }
  std::vector<std::pair<char32_t, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (auto [c, n] : order) {
    if (n >= min_count) v.add(c);
  }
  return v;
}

// Character index plus radical row; the model input for one position.
struct Token {
  int ch = Vocab::kPad;
  int radical = 0;
  friend bool operator==(const Token&, const Token&) = default;
};

inline std::vector<Token> encode(std::u32string_view chars, const Vocab& vocab, const RadicalTable& radicals) {
  std::vector<Token> out;
  out.reserve(chars.size());
  for (char32_t c : chars) out.push_back({vocab.index(c), radicals.radical_index(c)});
  return out;
}

inline std::vector<int> tag_indices(const std::vector<Tag>& tags) {
  std::vector<int> out;
  out.reserve(tags.size());
  for (Tag t : tags) out.push_back(static_cast<int>(t));
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ParseError("write failed: " + path.string());
}

// Prepared dataset: one unit per line, "chars<TAB>tags".
inline std::string format_dataset(const std::vector<Unit>& units) {
  std::string out;
  for (const auto& u : units) {
    out += utf8::encode(u.seq.chars);
    out += '\t';
    out += tags_to_string(u.seq.tags);
    out += '\n';
  }
  return out;
}

inline std::vector<Unit> parse_dataset(std::string_view text, const std::string& name = "<memory>") {
  std::vector<Unit> units;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (line.empty()) continue;
    const auto where = name + ":" + std::to_string(lineno);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(where + ": expected chars<TAB>tags");
    Unit u;
    try {
      u.seq.chars = utf8::decode(line.substr(0, tab));
      u.seq.tags = tags_from_string(line.substr(tab + 1));
    } catch (const std::runtime_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (u.seq.chars.size() != u.seq.tags.size()) {
      throw ParseError(where + ": " + std::to_string(u.seq.chars.size()) + " chars but " +
                       std::to_string(u.seq.tags.size()) + " tags");
    }
    u.doc = name;
    u.offset = lineno;
    units.push_back(std::move(u));
  }
  return units;
}

inline std::vector<Unit> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path), path.string());
}

// Split manifest: "train<TAB>file", "valid<TAB>file", "test<TAB>file",
// "seed<TAB>n".
struct SplitManifest {
  std::string train = "train.tsv";
  std::string valid = "valid.tsv";
  std::string test = "test.tsv";
  std::uint64_t seed = 0;

  std::string format() const {
    return "train\t" + train + "\nvalid\t" + valid + "\ntest\t" + test + "\nseed\t" + std::to_string(seed) + "\n";
  }

  static SplitManifest parse(std::string_view text) {
    SplitManifest m;
    std::istringstream in{std::string(text)};
    std::string line;
    int seen = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError("manifest: malformed line '" + line + "'");
      const auto key = line.substr(0, tab);
      const auto val = line.substr(tab + 1);
      if (key == "train") {
        m.train = val;
      } else if (key == "valid") {
        m.valid = val;
      } else if (key == "test") {
        m.test = val;
      } else if (key == "seed") {
        try {
          m.seed = std::stoull(val);
        } catch (const std::exception&) {
          throw ParseError("manifest: bad seed '" + val + "'");
        }
      } else {
        throw ParseError("manifest: unknown key '" + key + "'");
      }
      ++seen;
    }
    if (seen != 4) throw ParseError("manifest: expected 4 entries, found " + std::to_string(seen));
    return m;
  }
};

// Vocabulary file: one "char<TAB>count" line per entry in index order
// (specials excluded).
inline std::string format_vocab(const Vocab& vocab, const std::vector<Unit>& units) {
  std::unordered_map<char32_t, std::size_t> counts;
  for (const auto& u : units) {
    for (char32_t c : u.seq.chars) ++counts[c];
  }
  std::string out;
  for (char32_t c : vocab.entries()) {
    out += utf8::encode(c);
    out += '\t';
    out += std::to_string(counts[c]);
    out += '\n';
  }
  return out;
}

inline Vocab parse_vocab(std::string_view text) {
  Vocab v;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (line.empty()) continue;
    const auto chars = utf8::decode(line.substr(0, line.find('\t')));
    if (chars.size() != 1) throw ParseError("vocab:" + std::to_string(lineno) + ": expected one character");
    v.add(chars[0]);
  }
  return v;
}

}  // namespace gujian
