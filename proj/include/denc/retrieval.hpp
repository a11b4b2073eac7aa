#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "denc/corpus.hpp"
#include "denc/embedding.hpp"
#include "denc/encoder.hpp"
#include "denc/taxonomy.hpp"

namespace denc {

// Encoded corpus: one common-space vector per shot, in corpus order. The
// fingerprint ties the index to the checkpoint that produced it ("" when the
// parameters never touched disk).
struct ShotIndex {
  std::vector<std::string> shot_ids;
  std::vector<CommonSpaceVector> vectors;
  std::string checkpoint_fingerprint;

  std::size_t size() const { return shot_ids.size(); }
  std::int64_t dim() const { return vectors.empty() ? 0 : vectors.front().numel(); }
};

// Shots are encoded independently, so `threads` > 1 splits the corpus across
// workers; the result is bitwise identical at any thread count.
ShotIndex build_index(const std::vector<FeatureSequence>& shots,
                      const EncoderParams<double>& params,
                      const std::string& checkpoint_fingerprint = "", std::size_t threads = 1);

// Binary index file, magic "DIDX"; vectors stored as f64 little-endian so a
// save/load round trip is bitwise lossless.
void save_index(const ShotIndex& index, const std::string& path);
ShotIndex load_index(const std::string& path);

struct ScoredShot {
  std::string shot_id;
  double score = 0;
};

struct RankedList {
  std::string topic_id;
  std::vector<ScoredShot> entries;  // scores non-increasing; ties by ascending shot_id
};

// How a multi-sentence query is collapsed to per-shot scores: average the
// per-sentence cosine scores (default), or average the sentence vectors first.
enum class QueryAggregation { kMeanOfScores, kMeanOfEmbeddings };

RankedList rank_shots(const AugmentedQuery& query, const ShotIndex& index,
                      const EmbeddingTable& embeddings, const EncoderParams<double>& params,
                      std::size_t k,
                      QueryAggregation aggregation = QueryAggregation::kMeanOfScores);

// Ranked-run exchange format: `topic_id Q0 shot_id rank score run_tag` with
// ranks from 1 and scores at 6 decimals, one contiguous block per topic.
struct RunFile {
  std::vector<RankedList> topics;
  std::string run_tag;
};

void save_run_file(const std::vector<RankedList>& lists, const std::string& run_tag,
                   const std::string& path);
RunFile load_run_file(const std::string& path);

}  // namespace denc
