#include "denc/model_io.hpp"

#include <map>

#include "denc/checkpoint.hpp"

namespace denc {

namespace {

constexpr const char* kConfigEntry = "meta.config";

// Configuration layout inside the meta tensor: fixed fields, then the
// convolution width list. All values are small integers, exact in f32.
template <typename Scalar>
Tensor<Scalar> pack_config(const EncoderConfig& cfg) {
  std::vector<Scalar> values = {
      static_cast<Scalar>(cfg.feature_dim), static_cast<Scalar>(cfg.embed_dim),
      static_cast<Scalar>(cfg.bow_dim),     static_cast<Scalar>(cfg.hidden),
      static_cast<Scalar>(cfg.attention_dim), static_cast<Scalar>(cfg.common_dim),
      static_cast<Scalar>(cfg.conv_filters), static_cast<Scalar>(cfg.max_frames),
      static_cast<Scalar>(cfg.conv_widths.size())};
  for (std::int64_t w : cfg.conv_widths) values.push_back(static_cast<Scalar>(w));
  return Tensor<Scalar>::row(std::move(values));
}

EncoderConfig unpack_config(const Tensor32& meta) {
  auto field = [&](std::int64_t i) -> std::int64_t {
    if (i >= meta.numel()) throw DataError("checkpoint meta.config entry is truncated");
    return static_cast<std::int64_t>(meta[i]);
  };
  EncoderConfig cfg;
  cfg.feature_dim = field(0);
  cfg.embed_dim = field(1);
  cfg.bow_dim = field(2);
  cfg.hidden = field(3);
  cfg.attention_dim = field(4);
  cfg.common_dim = field(5);
  cfg.conv_filters = field(6);
  cfg.max_frames = field(7);
  const std::int64_t width_count = field(8);
  cfg.conv_widths.clear();
  for (std::int64_t i = 0; i < width_count; ++i) cfg.conv_widths.push_back(field(9 + i));
  if (meta.numel() != 9 + width_count) {
    throw DataError("checkpoint meta.config entry has trailing values");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

template <typename Scalar>
void save_model(const std::string& path, const EncoderParams<Scalar>& params) {
  const Tensor<Scalar> meta = pack_config<Scalar>(params.config);
  std::vector<std::pair<std::string, const Tensor<Scalar>*>> entries;
  entries.emplace_back(kConfigEntry, &meta);
  params.for_each_param([&](const std::string& name, const Tensor<Scalar>& t) {
    entries.emplace_back(name, &t);
  });
  save_checkpoint(path, entries);
}

EncoderParams<double> load_model(const std::string& path) {
  const std::vector<std::pair<std::string, Tensor32>> entries = load_checkpoint(path);

  std::map<std::string, const Tensor32*> by_name;
  for (const auto& [name, tensor] : entries) {
    if (!by_name.emplace(name, &tensor).second) {
      throw DataError("checkpoint lists tensor '" + name + "' twice: " + path);
    }
  }

  const auto meta = by_name.find(kConfigEntry);
  if (meta == by_name.end()) {
    throw DataError("checkpoint has no meta.config entry (not a model checkpoint): " + path);
  }
  const EncoderConfig cfg = unpack_config(*meta->second);

  EncoderParams<double> params = EncoderParams<double>::seeded(cfg, 0);
  std::size_t used = 1;  // the meta entry
  params.for_each_param([&](const std::string& name, Tensor64& t) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw DataError("checkpoint is missing tensor '" + name + "': " + path);
    }
    if (it->second->shape() != t.shape()) {
      throw DataError("checkpoint tensor '" + name + "' has shape " + it->second->shape_str() +
                      ", expected " + t.shape_str());
    }
    t = it->second->cast<double>();
    ++used;
  });
  if (used != entries.size()) {
    throw DataError("checkpoint holds tensors that are not model parameters: " + path);
  }
  return params;
}

template void save_model<float>(const std::string&, const EncoderParams<float>&);
template void save_model<double>(const std::string&, const EncoderParams<double>&);

}  // namespace denc
