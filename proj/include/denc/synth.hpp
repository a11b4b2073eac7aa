#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "denc/corpus.hpp"

namespace denc {

// Desk-scale synthetic retrieval corpus. Each prototype concept owns a feature
// centroid on the unit sphere and a private caption word cluster; its shots are
// noisy copies of the centroid and its captions are template instantiations
// over the cluster. Generation is a pure function of the spec.
struct SyntheticCorpusSpec {
  int prototype_count = 5;  // at most 26: each prototype gets one codeword label
  int shots_per_prototype = 40;
  int frames_min = 3;  // frames per shot drawn uniformly from
  int frames_max = 6;  //   [frames_min, frames_max]
  std::int64_t feature_dim = 32;
  double noise = 0.1;  // per-element feature noise scale

  // Caption templates. Placeholders: {label} = the prototype's codeword,
  // {unique} = a word private to the shot, {w} = a random word of the
  // prototype's cluster. Shot k's training caption instantiates template
  // k mod T; its held-out caption instantiates the next template, so with the
  // default pair the two share vocabulary but never the exact string. The
  // second default omits {label} so the bare codeword is a useful but
  // deliberately imperfect retrieval cue.
  std::vector<std::string> caption_templates = {
      "{label} {unique} {w} {w}",
      "{unique} {w} {w} {w}",
  };

  double judgment_rate = 1.0;  // fraction of each topic's pool that is judged
  std::uint64_t seed = 1;

  void validate() const;  // ConfigError with a "synth spec:" prefix
};

struct SyntheticCorpus {
  std::vector<FeatureSequence> shots;       // prototype-major order
  std::vector<CaptionPair> train_captions;  // one per shot, shot order
  std::vector<CaptionPair> val_captions;    // held-out caption per shot
  std::string qrels_text;                   // parseable by JudgmentPool
  std::string taxonomy_text;                // parseable by ConceptTree
  std::vector<std::string> concept_ids;     // prototype labels; the topic ids
  std::vector<std::string> vocabulary;      // labels, then clusters, then uniques
};

// Features are snapped to 32-bit precision so writing them through the binary
// feature container is lossless and reruns stay bitwise identical.
SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

}  // namespace denc
