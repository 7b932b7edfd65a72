#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>

#include "errors.hpp"

// Little-endian primitives shared by the embedding and checkpoint formats.
namespace gujian::binio {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
inline T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename UInt>
inline void put(std::ostream& os, UInt v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void put_f64(std::ostream& os, double d) {
  put(os, std::bit_cast<std::uint64_t>(d));
}

inline void put_string(std::ostream& os, const std::string& s) {
  put(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_f64s(std::ostream& os, std::span<const double> values) {
  for (double d : values) put_f64(os, d);
}

// Reader that reports which part of the file it was decoding on failure.
class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  void set_context(std::string ctx) { ctx_ = std::move(ctx); }
  const std::string& context() const { return ctx_; }

  void bytes(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw FormatError("truncated file while reading " + ctx_);
    }
  }

  template <typename UInt>
  UInt get() {
    UInt v{};
    bytes(reinterpret_cast<char*>(&v), sizeof v);
    return to_little(v);
  }

  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::string get_string(std::uint32_t max_len = 1u << 20) {
    const auto len = get<std::uint32_t>();
    if (len > max_len) throw FormatError("string too long in " + ctx_);
    std::string s(len, '\0');
    bytes(s.data(), len);
    return s;
  }

  void get_f64s(std::span<double> out) {
    for (double& d : out) d = get_f64();
  }

  std::istream& stream() { return is_; }

 private:
  std::istream& is_;
  std::string ctx_ = "header";
};

}  // namespace gujian::binio
