#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dermanet {

/// Little-endian binary writer with a running FNV-1a checksum over every
/// payload byte; finish() appends the checksum so readers can detect
/// truncation and corruption.
class BinaryWriter {
public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void write_bytes(const void* data, std::size_t n);
  void write_u32(std::uint32_t v);
  void write_u64(std::uint64_t v);
  void write_i64(std::int64_t v);
  void write_f64(double v);
  void write_string(const std::string& s);
  void write_doubles(const std::vector<double>& v);

  /// Appends the running checksum (not itself checksummed).
  void finish();

private:
  std::ostream& out_;
  std::uint64_t checksum_ = 14695981039346656037ull;
};

/// Counterpart reader; every read failure (including EOF) throws LoadError
/// tagged with the container label. verify_checksum() must be called after
/// the last payload read.
class BinaryReader {
public:
  BinaryReader(std::istream& in, std::string container_label)
      : in_(in), label_(std::move(container_label)) {}

  void read_bytes(void* data, std::size_t n);
  std::uint32_t read_u32();
  std::uint64_t read_u64();
  std::int64_t read_i64();
  double read_f64();
  std::string read_string(std::size_t max_len = 1 << 20);
  std::vector<double> read_doubles(std::size_t max_len = std::size_t(1) << 33);

  void verify_checksum();

  [[noreturn]] void fail(const std::string& why) const;

private:
  std::istream& in_;
  std::string label_;
  std::uint64_t checksum_ = 14695981039346656037ull;
};

}  // namespace dermanet
