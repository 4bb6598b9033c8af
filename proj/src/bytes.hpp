#ifndef DRAIL_SRC_BYTES_HPP_
#define DRAIL_SRC_BYTES_HPP_

// Little-endian byte packing for the on-disk formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "drail/error.hpp"

namespace drail::detail {

class ByteWriter {
 public:
  void raw(const void* data, size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  void u8(uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  const std::string& bytes() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  void need(size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorCode::kFormat,
                  what_ + " truncated: expected at least " +
                      std::to_string(pos_ + n) + " bytes, got " +
                      std::to_string(bytes_.size()));
    }
  }
  // Fails unless exactly `total` bytes are present.
  void expect_total(size_t total) const {
    if (bytes_.size() != total) {
      throw Error(ErrorCode::kFormat,
                  what_ + " has wrong size: expected " + std::to_string(total) +
                      " bytes, got " + std::to_string(bytes_.size()));
    }
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(bytes_[pos_++]);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const uint32_t n = u32();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void magic(const char (&expected)[4]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, expected, 4) != 0) {
      throw Error(ErrorCode::kFormat, what_ + ": bad magic");
    }
    pos_ += 4;
  }
  size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  size_t size() const { return bytes_.size(); }

 private:
  const std::string& bytes_;
  std::string what_;
  size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace drail::detail

#endif  // DRAIL_SRC_BYTES_HPP_
