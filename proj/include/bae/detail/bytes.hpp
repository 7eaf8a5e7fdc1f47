#pragma once

// Little-endian encode/decode over in-memory buffers.

#include "bae/types.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace bae::detail {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <typename T>
T to_little(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    v = to_little(v);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<char>& buf, std::string source)
      : buf_(buf), source_(std::move(source)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  std::string get_bytes(std::size_t count) {
    need(count);
    std::string s(buf_.data() + pos_, count);
    pos_ += count;
    return s;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::string& source() const { return source_; }

 private:
  void need(std::size_t count) const {
    if (remaining() < count) throw FormatError(source_ + ": truncated payload");
  }
  const std::vector<char>& buf_;
  std::size_t pos_ = 0;
  std::string source_;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

/// Reads the 4-byte magic and u32 version; throws FormatError on mismatch.
void expect_header(ByteReader& in, std::string_view magic, std::uint32_t version);

}  // namespace bae::detail
