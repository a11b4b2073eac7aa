#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace denc {

// Error taxonomy shared by the library and the CLI exit codes:
// ConfigError -> 2, DataError -> 3, NumericError -> 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Little-endian scalar I/O. All binary container formats (checkpoints,
// feature files, shot indexes) are little-endian regardless of host order.
inline void put_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  put_u32_le(os, static_cast<std::uint32_t>(v & 0xffffffffu));
  put_u32_le(os, static_cast<std::uint32_t>(v >> 32));
}

inline void put_f32_le(std::ostream& os, float v) {
  std::uint32_t bits;
  static_assert(sizeof bits == sizeof v);
  __builtin_memcpy(&bits, &v, sizeof bits);
  put_u32_le(os, bits);
}

inline void put_f64_le(std::ostream& os, double v) {
  std::uint64_t bits;
  __builtin_memcpy(&bits, &v, sizeof bits);
  put_u64_le(os, bits);
}

inline std::uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("unexpected end of binary stream");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64_le(std::istream& is) {
  std::uint64_t lo = get_u32_le(is);
  std::uint64_t hi = get_u32_le(is);
  return lo | (hi << 32);
}

inline float get_f32_le(std::istream& is) {
  std::uint32_t bits = get_u32_le(is);
  float v;
  __builtin_memcpy(&v, &bits, sizeof v);
  return v;
}

inline double get_f64_le(std::istream& is) {
  std::uint64_t bits = get_u64_le(is);
  double v;
  __builtin_memcpy(&v, &bits, sizeof v);
  return v;
}

// FNV-1a, used for checkpoint fingerprints and index integrity tags.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v);

// Writes to "<path>.tmp" and renames on commit, so failed commands never
// leave partial output files behind.
class AtomicFile {
 public:
  explicit AtomicFile(const std::filesystem::path& target, bool binary = false);
  ~AtomicFile();

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace denc
