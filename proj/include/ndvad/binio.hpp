#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ndvad/errors.hpp"

namespace ndvad {

// Little-endian byte stream helpers for the NDCK/NDVF containers. The reader
// tracks its offset so corruption errors can name the failing byte.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(const void* p, std::size_t n);
  void str(const std::string& s) { bytes(s.data(), s.size()); }

  const std::vector<std::uint8_t>& data() const { return buf_; }
  void write_file(const std::string& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> data, std::string origin)
      : buf_(std::move(data)), origin_(std::move(origin)) {}
  static ByteReader from_file(const std::string& path);

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string str(std::size_t n);
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }
  bool at_end() const { return pos_ == buf_.size(); }

  [[noreturn]] void fail(const std::string& what) const;

 private:
  void need(std::size_t n);
  std::vector<std::uint8_t> buf_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace ndvad
