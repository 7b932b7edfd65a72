#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace gujian {

inline constexpr int kNumRadicals = 214;
// Row count of the radical embedding matrix: 214 radicals plus the
// "no radical" sentinel at index 0.
inline constexpr int kRadicalRows = kNumRadicals + 1;

// Unified-ideograph form of each Kangxi radical, indexed by id - 1.
inline constexpr std::u32string_view kRadicalGlyphs =
    U"一丨丶丿乙亅二亠人儿入八冂冖冫几凵刀力勹匕匚匸十卜卩厂厶又口囗土士夂夊夕大女子宀寸"
    U"小尢尸屮山巛工己巾干幺广廴廾弋弓彐彡彳心戈戶手支攴文斗斤方无日曰月木欠止歹殳毋比毛"
    U"氏气水火爪父爻爿片牙牛犬玄玉瓜瓦甘生用田疋疒癶白皮皿目矛矢石示禸禾穴立竹米糸缶网羊"
    U"羽老而耒耳聿肉臣自至臼舌舛舟艮色艸虍虫血行衣襾見角言谷豆豕豸貝赤走足身車辛辰辵邑酉"
    U"釆里金長門阜隶隹雨靑非面革韋韭音頁風飛食首香馬骨高髟鬥鬯鬲鬼魚鳥鹵鹿麥麻黃黍黑黹黽"
    U"鼎鼓鼠鼻齊齒龍龜龠";
static_assert(kRadicalGlyphs.size() == kNumRadicals);

inline char32_t radical_glyph(int radical_id) {
  if (radical_id < 1 || radical_id > kNumRadicals) {
    throw ValidationError("radical id out of range: " + std::to_string(radical_id));
  }
  return kRadicalGlyphs[static_cast<std::size_t>(radical_id - 1)];
}

// Code point -> Kangxi radical id (1..214). Immutable once built.
class RadicalTable {
 public:
  RadicalTable() = default;
  RadicalTable(std::unordered_map<char32_t, std::uint8_t> entries, std::string source_path)
      : entries_(std::move(entries)), source_path_(std::move(source_path)) {}

  std::optional<int> radical_of(char32_t ch) const {
    auto it = entries_.find(ch);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  // Embedding row for ch; 0 when the character has no radical.
  int radical_index(char32_t ch) const { return radical_of(ch).value_or(0); }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::string& source_path() const { return source_path_; }

  // FNV-1a over the entries in code point order. Stored in checkpoints so a
  // model is never paired with a different table silently.
  std::uint64_t fingerprint() const {
    std::vector<std::pair<char32_t, std::uint8_t>> sorted(entries_.begin(), entries_.end());
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t byte) {
      h ^= byte;
      h *= 0x100000001b3ULL;
    };
    for (auto [cp, id] : sorted) {
      for (int s = 0; s < 32; s += 8) mix((cp >> s) & 0xFF);
      mix(id);
    }
    return h;
  }

 private:
  std::unordered_map<char32_t, std::uint8_t> entries_;
  std::string source_path_;
};

// Parses "HEX<TAB>ID" lines; '#' starts a comment line.
inline RadicalTable parse_radical_table(std::istream& in, std::string source_path = {}) {
  std::unordered_map<char32_t, std::uint8_t> entries;
  std::string line;
  std::size_t lineno = 0;
  auto parse_error = [&](const std::string& why) {
    return ParseError(source_path + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw parse_error("expected \"hex-codepoint<TAB>radical-id\"");
    }
    std::string_view hex(line.data(), tab);
    std::string_view dec(line.data() + tab + 1, line.size() - tab - 1);

    std::uint32_t cp = 0;
    auto [hp, hec] = std::from_chars(hex.data(), hex.data() + hex.size(), cp, 16);
    const bool upper = std::none_of(hex.begin(), hex.end(), [](char c) { return c >= 'a' && c <= 'f'; });
    if (hec != std::errc{} || hp != hex.data() + hex.size() || !upper || cp > 0x10FFFF) {
      throw parse_error("malformed code point '" + std::string(hex) + "'");
    }
    int id = 0;
    auto [dp, dec_ec] = std::from_chars(dec.data(), dec.data() + dec.size(), id);
    if (dec_ec != std::errc{} || dp != dec.data() + dec.size()) {
      throw parse_error("malformed radical id '" + std::string(dec) + "'");
    }
    if (id < 1 || id > kNumRadicals) {
      throw ValidationError(source_path + ":" + std::to_string(lineno) + ": radical id " +
                            std::to_string(id) + " outside 1..214");
    }
    if (!entries.emplace(static_cast<char32_t>(cp), static_cast<std::uint8_t>(id)).second) {
      throw parse_error("duplicate code point " + std::string(hex));
    }
  }
  return RadicalTable(std::move(entries), std::move(source_path));
}

inline RadicalTable load_radical_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open radical table: " + path);
  return parse_radical_table(in, path);
}

inline RadicalTable parse_radical_table(std::string_view text, std::string source_path = "<memory>") {
  std::istringstream in{std::string(text)};
  return parse_radical_table(in, std::move(source_path));
}

#ifdef GUJIAN_DEFAULT_RADICALS
inline constexpr const char* kDefaultRadicalTablePath = GUJIAN_DEFAULT_RADICALS;
#else
inline constexpr const char* kDefaultRadicalTablePath = "data/radicals.tsv";
#endif

}  // namespace gujian
