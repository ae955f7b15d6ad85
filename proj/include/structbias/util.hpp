#pragma once

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "structbias/errors.hpp"

namespace structbias {

inline constexpr std::string_view kToolVersion = "0.3.0";

namespace util {

// ---------------------------------------------------------------------------
// UTF-8. Offsets exposed outside the library count Unicode scalar values.

// Number of code points in `s`. Continuation bytes (10xxxxxx) are not counted.
inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

// Byte offset of the code point with index `cp`. Returns s.size() when cp is
// one past the end and npos when it is further out.
inline std::size_t utf8_byte_offset(std::string_view s, std::size_t cp) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
    if (seen == cp) return i;
    ++seen;
  }
  return seen == cp ? s.size() : std::string_view::npos;
}

// Code-point slice [begin, end) of `s`, nullopt when out of range.
inline std::optional<std::string_view> utf8_slice(std::string_view s,
                                                  std::size_t begin,
                                                  std::size_t end) {
  const std::size_t b = utf8_byte_offset(s, begin);
  const std::size_t e = utf8_byte_offset(s, end);
  if (b == std::string_view::npos || e == std::string_view::npos || b > e)
    return std::nullopt;
  return s.substr(b, e - b);
}

// Lowercase ASCII letters only. Used for closed-class forms like "se".
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// ---------------------------------------------------------------------------
// Strings.

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename Int>
bool parse_int(std::string_view s, Int* out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Locale-independent rendering with a fixed number of significant digits.
inline std::string format_double(double v, int significant = 12) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                           std::chars_format::general, significant);
  return std::string(buf.data(), res.ptr);
}

// ---------------------------------------------------------------------------
// Files.

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Hashing. SHA-256 for content addressing; SplitMix64 for stable, platform
// independent pseudo-randomness.

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1)
    throw DataError("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

// First 8 bytes of SHA-256, big endian.
inline std::uint64_t sha256_u64(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1)
    throw DataError("sha256 failed");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[i];
  return v;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based stream: the n-th draw depends only on (key, n), so results do
// not depend on how work is scheduled.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(splitmix64(key)) {}
  CounterRng(std::uint64_t key, std::uint64_t stream)
      : key_(splitmix64(splitmix64(key) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t next() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  // Uniform in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
      const std::uint64_t v = next();
      if (v < limit) return v % bound;
    }
  }

  // Uniform in [0, 1) with 53 bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace util
}  // namespace structbias
