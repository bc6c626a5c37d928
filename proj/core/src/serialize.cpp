#include "dermanet/serialize.hpp"

#include <cstring>
#include <istream>
#include <ostream>

#include "dermanet/errors.hpp"
#include "dermanet/rng.hpp"

namespace dermanet {

void BinaryWriter::write_bytes(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  checksum_ = fnv1a(data, n, checksum_);
}

void BinaryWriter::write_u32(std::uint32_t v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_u64(std::uint64_t v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_i64(std::int64_t v) { write_bytes(&v, sizeof v); }
void BinaryWriter::write_f64(double v) { write_bytes(&v, sizeof v); }

void BinaryWriter::write_string(const std::string& s) {
  write_u64(s.size());
  write_bytes(s.data(), s.size());
}

void BinaryWriter::write_doubles(const std::vector<double>& v) {
  write_u64(v.size());
  write_bytes(v.data(), v.size() * sizeof(double));
}

void BinaryWriter::finish() {
  out_.write(reinterpret_cast<const char*>(&checksum_), sizeof checksum_);
  out_.flush();
}

void BinaryReader::read_bytes(void* data, std::size_t n) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    fail("truncated (unexpected end of file)");
  }
  checksum_ = fnv1a(data, n, checksum_);
}

std::uint32_t BinaryReader::read_u32() {
  std::uint32_t v;
  read_bytes(&v, sizeof v);
  return v;
}

std::uint64_t BinaryReader::read_u64() {
  std::uint64_t v;
  read_bytes(&v, sizeof v);
  return v;
}

std::int64_t BinaryReader::read_i64() {
  std::int64_t v;
  read_bytes(&v, sizeof v);
  return v;
}

double BinaryReader::read_f64() {
  double v;
  read_bytes(&v, sizeof v);
  return v;
}

std::string BinaryReader::read_string(std::size_t max_len) {
  const std::uint64_t n = read_u64();
  if (n > max_len) fail("string length out of bounds");
  std::string s(n, '\0');
  read_bytes(s.data(), n);
  return s;
}

std::vector<double> BinaryReader::read_doubles(std::size_t max_len) {
  const std::uint64_t n = read_u64();
  if (n > max_len) fail("array length out of bounds");
  std::vector<double> v(n);
  read_bytes(v.data(), n * sizeof(double));
  return v;
}

void BinaryReader::verify_checksum() {
  const std::uint64_t expected = checksum_;
  std::uint64_t stored;
  in_.read(reinterpret_cast<char*>(&stored), sizeof stored);
  if (static_cast<std::size_t>(in_.gcount()) != sizeof stored) {
    fail("truncated (missing checksum)");
  }
  if (stored != expected) fail("checksum mismatch (corrupt file)");
}

void BinaryReader::fail(const std::string& why) const {
  throw LoadError(label_ + ": " + why);
}

}  // namespace dermanet
