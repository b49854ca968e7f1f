#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dom::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Appends fixed-width values in an explicit byte order.
class ByteWriter {
 public:
  void bytes(std::string_view s);
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32_le(std::uint32_t v);
  void u64_le(std::uint64_t v);
  void f64_le(double v);
  void u32_be(std::uint32_t v);

  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked cursor; any over-read throws FormatError(truncated) naming `what`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string what) : data_(data), what_(std::move(what)) {}

  std::string bytes(std::size_t n);
  std::uint8_t u8();
  std::uint32_t u32_le();
  std::uint64_t u64_le();
  double f64_le();
  std::uint32_t u32_be();
  std::span<const std::uint8_t> take(std::size_t n);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace dom::io
