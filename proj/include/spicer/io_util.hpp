#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace spicer {

// CRC-64/XZ (reflected, poly 0xC96C5795D7870F42, init/xorout all-ones).
class Crc64 {
 public:
  Crc64();
  void update(const void* data, size_t n);
  std::uint64_t value() const { return ~crc_; }

 private:
  std::uint64_t crc_ = ~0ULL;
};

std::uint64_t crc64(const void* data, size_t n);

// Append-only little-endian byte buffer.
struct ByteWriter {
  std::vector<std::uint8_t> bytes;

  void put_raw(const void* p, size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void put_u32(std::uint32_t v) { put_raw(&v, 4); }
  void put_u64(std::uint64_t v) { put_raw(&v, 8); }
  void put_f64(double v) { put_raw(&v, 8); }
};

// Bounds-checked little-endian reader over a loaded file.
struct ByteReader {
  const std::uint8_t* p = nullptr;
  size_t n = 0;
  size_t pos = 0;

  void take_raw(void* dst, size_t count);
  std::uint32_t take_u32();
  std::uint64_t take_u64();
  double take_f64();
  size_t remaining() const { return n - pos; }
};

// Whole-file helpers; write goes through a temp file + rename so readers
// never see a partial file.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace spicer
