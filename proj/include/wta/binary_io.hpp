#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace wta {

/// Little-endian primitive writer over an ostream.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void magic(std::string_view tag);  // exactly 4 bytes
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::span<const std::uint8_t> data);

 private:
  std::ostream& out_;
};

/// Little-endian primitive reader; throws IoError on truncation.
class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  void bytes(std::span<std::uint8_t> data);

 private:
  void raw(void* dst, std::size_t n);
  std::istream& in_;
};

/// Writes through `write` into a sibling temporary file and renames it over
/// `path` only after `write` returns and the stream is flushed; on any error
/// the temporary is removed and `path` is untouched.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& write,
                       bool binary = true);

}  // namespace wta
