#include "denc/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace denc {

std::vector<std::pair<std::string, Tensor32>> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path.string());
  const std::uint32_t version = get_u32_le(in);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = get_u32_le(in);

  std::vector<std::pair<std::string, Tensor32>> out;
  out.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = get_u32_le(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw DataError("truncated checkpoint: " + path.string());
    const std::uint32_t rank = get_u32_le(in);
    std::vector<std::int64_t> shape(rank);
    std::int64_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<std::int64_t>(get_u64_le(in));
      numel *= shape[i];
    }
    std::vector<float> data(static_cast<std::size_t>(numel));
    for (std::int64_t i = 0; i < numel; ++i) data[static_cast<std::size_t>(i)] = get_f32_le(in);
    out.emplace_back(std::move(name), Tensor32(std::move(shape), std::move(data)));
  }
  return out;
}

std::string checkpoint_fingerprint(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

}  // namespace denc
