#pragma once

#include <string>

#include "denc/encoder.hpp"

namespace denc {

// Writes every encoder parameter plus a "meta.config" tensor holding the
// encoder configuration, so a checkpoint alone suffices to rebuild the model.
// Values are stored as f32 (checkpoint format v1).
template <typename Scalar>
void save_model(const std::string& path, const EncoderParams<Scalar>& params);

// Rebuilds parameters at double precision from a checkpoint written by
// save_model. Errors when the meta entry is missing, a parameter is missing or
// extra, or a shape disagrees with the embedded configuration.
EncoderParams<double> load_model(const std::string& path);

extern template void save_model<float>(const std::string&, const EncoderParams<float>&);
extern template void save_model<double>(const std::string&, const EncoderParams<double>&);

}  // namespace denc
