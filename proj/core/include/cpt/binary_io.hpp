#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpt {

// All on-disk binary formats are little-endian regardless of host order.

/// Append-only little-endian encoder.
class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { buf_.push_back(char(v)); }
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }
  void put_f64(double v);
  void put_bytes(std::string_view bytes) { buf_.append(bytes); }
  void put_string(std::string_view s);  // u64 length prefix + raw bytes
  void put_f64_span(std::span<const double> xs);
  void put_i64_span(std::span<const std::int64_t> xs);

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Little-endian decoder; throws data_error on truncated input.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : data_(bytes) {}

  std::uint8_t get_u8();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }
  double get_f64();
  std::string get_bytes(std::size_t n);
  std::string get_string();
  std::vector<double> get_f64_vector(std::size_t n);
  std::vector<std::int64_t> get_i64_vector(std::size_t n);

  std::size_t remaining() const { return data_.size() - pos_; }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const;
  std::string_view data_;
  std::size_t pos_ = 0;
};

/// CRC-32 (IEEE 802.3) used as a corruption check on checkpoint payloads.
std::uint32_t crc32(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace cpt
