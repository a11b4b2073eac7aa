#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "denc/common.hpp"
#include "denc/tensor.hpp"

namespace denc {

// Parameter checkpoint container: magic "DENC", version, named-tensor count,
// then per tensor: name length + bytes, rank, extents, little-endian f32 data.
// Values are stored at 32-bit regardless of the precision used in memory.

inline constexpr char kCheckpointMagic[4] = {'D', 'E', 'N', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const Tensor<Scalar>*>>& tensors) {
  AtomicFile file(path, /*binary=*/true);
  std::ostream& os = file.stream();
  os.write(kCheckpointMagic, 4);
  put_u32_le(os, kCheckpointVersion);
  put_u32_le(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    put_u32_le(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32_le(os, static_cast<std::uint32_t>(tensor->rank()));
    for (std::int64_t e : tensor->shape()) put_u64_le(os, static_cast<std::uint64_t>(e));
    for (std::int64_t i = 0; i < tensor->numel(); ++i)
      put_f32_le(os, static_cast<float>((*tensor)[i]));
  }
  file.commit();
}

std::vector<std::pair<std::string, Tensor32>> load_checkpoint(const std::filesystem::path& path);

// Fingerprint of the checkpoint bytes; embedded in shot indexes and manifests
// so stale indexes are detected.
std::string checkpoint_fingerprint(const std::filesystem::path& path);

}  // namespace denc
