#pragma once

// Shared helpers for the versioned file formats: little-endian scalar encoding
// and a line-oriented header reader that reports byte offsets on failure.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "znav/errors.hpp"

namespace znav::io {

inline void put_u32(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xffu));
}

inline void put_i32(std::string& out, std::int32_t x) { put_u32(out, static_cast<std::uint32_t>(x)); }

inline void put_f64(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

/// 64-bit FNV-1a digest, used as a payload integrity check.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Shortest decimal text that parses back to the same double.
inline std::string fmt_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view data) : data_(data) {}

  /// Byte offset of the next unread line.
  std::uint64_t offset() const { return pos_; }

  std::string line() {
    line_start_ = pos_;
    const auto nl = data_.find('\n', pos_);
    if (nl == std::string_view::npos) throw FormatError("truncated header", pos_);
    std::string out(data_.substr(pos_, nl - pos_));
    pos_ = nl + 1;
    return out;
  }

  /// Reads "key f1 f2 ..." and returns the fields. count == 0 accepts any nonzero count.
  std::vector<std::string> fields(std::string_view key, std::size_t count) {
    const std::string l = line();
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < l.size()) {
      while (i < l.size() && l[i] == ' ') ++i;
      std::size_t j = i;
      while (j < l.size() && l[j] != ' ') ++j;
      if (j > i) parts.emplace_back(l.substr(i, j - i));
      i = j;
    }
    if (parts.empty() || parts[0] != key) fail("expected '" + std::string(key) + "' line");
    parts.erase(parts.begin());
    if (parts.empty() || (count != 0 && parts.size() != count))
      fail("wrong field count on '" + std::string(key) + "' line");
    return parts;
  }

  template <typename T>
  T number(const std::vector<std::string>& f, std::size_t idx) const {
    T value{};
    const auto& s = f.at(idx);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail("bad number '" + s + "'");
    return value;
  }

  void expect_end() {
    if (line() != "end") fail("expected 'end' line");
  }

  void expect_no_payload() const {
    if (pos_ != data_.size()) throw FormatError("unexpected trailing bytes", pos_);
  }

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(what, line_start_); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
};

class PayloadReader {
 public:
  PayloadReader(std::string_view data, std::size_t offset) : data_(data), pos_(offset) {}

  /// Checks that count records of record_bytes each are present; reports the
  /// offset of the first incomplete record otherwise.
  void require(std::size_t count, std::size_t record_bytes, const std::string& what) const {
    const std::size_t avail = data_.size() - pos_;
    if (count > 0 && avail / record_bytes < count) {
      const std::size_t complete = avail / record_bytes;
      throw FormatError("truncated payload: " + what + " " + std::to_string(complete) + " of " +
                            std::to_string(count) + " incomplete",
                        pos_ + complete * record_bytes);
    }
  }

  std::int32_t i32() {
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i)
      x |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return static_cast<std::int32_t>(x);
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(i32()); }

  double f64() {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i)
      x |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(x);
  }

  std::size_t offset() const { return pos_; }

  void expect_exhausted() const {
    if (pos_ != data_.size()) throw FormatError("unexpected trailing bytes", pos_);
  }

 private:
  std::string_view data_;
  std::size_t pos_;
};

}  // namespace znav::io
