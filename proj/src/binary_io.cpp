#include "wta/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "wta/error.hpp"

namespace wta {

namespace {

template <typename U>
void put_le(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_le(const unsigned char* buf) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void BinaryWriter::magic(std::string_view tag) {
  if (tag.size() != 4) throw IoError("magic tags are 4 bytes");
  out_.write(tag.data(), 4);
}
void BinaryWriter::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
void BinaryWriter::u32(std::uint32_t v) { put_le(out_, v); }
void BinaryWriter::u64(std::uint64_t v) { put_le(out_, v); }
void BinaryWriter::f32(float v) { put_le(out_, std::bit_cast<std::uint32_t>(v)); }
void BinaryWriter::f64(double v) { put_le(out_, std::bit_cast<std::uint64_t>(v)); }
void BinaryWriter::bytes(std::span<const std::uint8_t> data) {
  out_.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void BinaryReader::raw(void* dst, std::size_t n) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("unexpected end of file");
}

void BinaryReader::expect_magic(std::string_view tag) {
  char buf[4];
  raw(buf, 4);
  if (std::string_view(buf, 4) != tag) {
    throw IoError("bad magic: expected '" + std::string(tag) + "', found '" + std::string(buf, 4) + "'");
  }
}
std::uint8_t BinaryReader::u8() {
  unsigned char b;
  raw(&b, 1);
  return b;
}
std::uint32_t BinaryReader::u32() {
  unsigned char buf[4];
  raw(buf, 4);
  return get_le<std::uint32_t>(buf);
}
std::uint64_t BinaryReader::u64() {
  unsigned char buf[8];
  raw(buf, 8);
  return get_le<std::uint64_t>(buf);
}
float BinaryReader::f32() { return std::bit_cast<float>(u32()); }
double BinaryReader::f64() { return std::bit_cast<double>(u64()); }
void BinaryReader::bytes(std::span<std::uint8_t> data) { raw(data.data(), data.size()); }

void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& write,
                       bool binary) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
      if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
      write(out);
      out.flush();
      if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

}  // namespace wta
