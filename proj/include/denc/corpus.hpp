#pragma once

#include <map>
#include <string>
#include <vector>

#include "denc/tensor.hpp"

namespace denc {

// Keyframe features of one video shot: an n×D matrix (one row per frame).
struct FeatureSequence {
  std::string shot_id;
  Tensor64 frames;

  std::int64_t frame_count() const { return frames.shape()[0]; }
  std::int64_t dim() const { return frames.shape()[1]; }
};

// One (shot, caption) training pair. A shot may appear with several captions;
// exact duplicate pairs are rejected by the loader.
struct CaptionPair {
  std::string shot_id;
  std::string caption;
};

// Feature container, text form:
//   shot_id n D
//   <n lines of D space-separated floats>
// and binary form (magic "FEAT", little-endian 32-bit floats). load_features
// sniffs the magic and accepts either. All shots must share one feature
// dimension D; duplicate shot ids are rejected with the offending line.
std::vector<FeatureSequence> load_features(const std::string& path);
void save_features_text(const std::string& path, const std::vector<FeatureSequence>& shots);
void save_features_binary(const std::string& path, const std::vector<FeatureSequence>& shots);

// Caption file: one `shot_id<TAB>caption` record per line, '#' comments.
std::vector<CaptionPair> load_captions(const std::string& path);
void save_captions(const std::string& path, const std::vector<CaptionPair>& pairs);

// shot_id → position in the loaded order; rejects duplicates.
std::map<std::string, std::size_t> index_shots(const std::vector<FeatureSequence>& shots);

}  // namespace denc
