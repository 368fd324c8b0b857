#include "spicer/io_util.hpp"

#include <array>
#include <cstdio>
#include <filesystem>

#include "spicer/types.hpp"

namespace spicer {

namespace {

std::array<std::uint64_t, 256> make_crc_table() {
  constexpr std::uint64_t poly = 0xC96C5795D7870F42ULL;  // reflected ECMA-182
  std::array<std::uint64_t, 256> table{};
  for (std::uint64_t i = 0; i < 256; ++i) {
    std::uint64_t crc = i;
    for (int b = 0; b < 8; ++b)
      crc = (crc >> 1) ^ ((crc & 1) ? poly : 0);
    table[i] = crc;
  }
  return table;
}

const std::array<std::uint64_t, 256>& crc_table() {
  static const auto table = make_crc_table();
  return table;
}

}  // namespace

Crc64::Crc64() = default;

void Crc64::update(const void* data, size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(data);
  const auto& table = crc_table();
  for (size_t i = 0; i < n; ++i)
    crc_ = table[(crc_ ^ b[i]) & 0xFF] ^ (crc_ >> 8);
}

std::uint64_t crc64(const void* data, size_t n) {
  Crc64 c;
  c.update(data, n);
  return c.value();
}

void ByteReader::take_raw(void* dst, size_t count) {
  if (pos + count > n) throw ChecksumError("file truncated: read past end");
  std::memcpy(dst, p + pos, count);
  pos += count;
}

std::uint32_t ByteReader::take_u32() {
  std::uint32_t v;
  take_raw(&v, 4);
  return v;
}

std::uint64_t ByteReader::take_u64() {
  std::uint64_t v;
  take_raw(&v, 8);
  return v;
}

double ByteReader::take_f64() {
  double v;
  take_raw(&v, 8);
  return v;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  std::fseek(f, 0, SEEK_END);
  const long sz = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<std::uint8_t> bytes(static_cast<size_t>(sz), 0);
  const size_t got = sz > 0 ? std::fread(bytes.data(), 1, size_t(sz), f) : 0;
  std::fclose(f);
  if (got != size_t(sz)) throw IoError("short read on " + path);
  return bytes;
}

void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  const std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw IoError("cannot open " + tmp + " for writing");
  const size_t wrote = bytes.empty() ? 0 : std::fwrite(bytes.data(), 1, bytes.size(), f);
  const bool flushed = std::fflush(f) == 0;
  std::fclose(f);
  if (wrote != bytes.size() || !flushed) {
    std::remove(tmp.c_str());
    throw IoError("short write on " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

}  // namespace spicer
