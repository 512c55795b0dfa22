#include "cpt/binary_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "cpt/errors.hpp"

namespace cpt {

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(char((v >> (8 * i)) & 0xFF));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(char((v >> (8 * i)) & 0xFF));
}

void ByteWriter::put_f64(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(bits);
}

void ByteWriter::put_string(std::string_view s) {
  put_u64(s.size());
  buf_.append(s);
}

void ByteWriter::put_f64_span(std::span<const double> xs) {
  for (double x : xs) put_f64(x);
}

void ByteWriter::put_i64_span(std::span<const std::int64_t> xs) {
  for (std::int64_t x : xs) put_i64(x);
}

void ByteReader::need(std::size_t n) const {
  if (pos_ + n > data_.size()) throw data_error("truncated binary input");
}

std::uint8_t ByteReader::get_u8() {
  need(1);
  return std::uint8_t(data_[pos_++]);
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(data_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::get_u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(data_[pos_ + i])) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::get_f64() {
  const std::uint64_t bits = get_u64();
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

std::string ByteReader::get_bytes(std::size_t n) {
  need(n);
  std::string out(data_.substr(pos_, n));
  pos_ += n;
  return out;
}

std::string ByteReader::get_string() {
  const std::uint64_t n = get_u64();
  if (n > remaining()) throw data_error("truncated binary input (string)");
  return get_bytes(std::size_t(n));
}

std::vector<double> ByteReader::get_f64_vector(std::size_t n) {
  if (n * 8 > remaining()) throw data_error("truncated binary input (f64 array)");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = get_f64();
  return out;
}

std::vector<std::int64_t> ByteReader::get_i64_vector(std::size_t n) {
  if (n * 8 > remaining()) throw data_error("truncated binary input (i64 array)");
  std::vector<std::int64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = get_i64();
  return out;
}

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

}  // namespace

std::uint32_t crc32(std::string_view bytes) {
  static const auto table = make_crc_table();
  std::uint32_t c = 0xFFFFFFFFu;
  for (char ch : bytes) c = table[(c ^ std::uint8_t(ch)) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file: " + path);
  std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw data_error("error reading file: " + path);
  return out;
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open file for writing: " + path);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw data_error("error writing file: " + path);
}

}  // namespace cpt
