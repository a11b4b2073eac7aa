#include "denc/common.hpp"

#include <cstdio>
#include <sstream>

namespace denc {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

AtomicFile::AtomicFile(const std::filesystem::path& target, bool binary) : target_(target) {
  temp_ = target;
  temp_ += ".tmp";
  auto mode = std::ios::out | std::ios::trunc;
  if (binary) mode |= std::ios::binary;
  out_.open(temp_, mode);
  if (!out_) throw DataError("cannot open for writing: " + target.string());
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw DataError("write failed: " + target_.string());
  out_.close();
  std::filesystem::rename(temp_, target_);
  committed_ = true;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace denc
