#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "denc/common.hpp"
#include "denc/corpus.hpp"
#include "denc/embedding.hpp"
#include "denc/encoder.hpp"
#include "denc/loss.hpp"
#include "denc/rng.hpp"

namespace denc {

struct TrainConfig {
  double margin = 0.2;
  double learning_rate = 1e-4;
  int batch_size = 16;
  int epochs = 30;
  std::uint64_t seed = 1;
  std::string precision = "f64";  // "f32" or "f64"
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool strict_repro = false;  // accepted for CLI symmetry; updates are always serial

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("train config: ") + what);
    };
    need(margin > 0, "margin must be > 0");
    need(learning_rate >= 0, "learning rate must be >= 0");
    need(batch_size >= 2, "batch size must be >= 2 (hard negatives need a negative)");
    need(epochs >= 1, "epoch count must be >= 1");
    need(precision == "f32" || precision == "f64", "precision must be f32 or f64");
    need(adam_beta1 >= 0 && adam_beta1 < 1, "adam_beta1 must be in [0,1)");
    need(adam_beta2 >= 0 && adam_beta2 < 1, "adam_beta2 must be in [0,1)");
    need(adam_eps > 0, "adam_eps must be > 0");
  }
};

// A caption pair resolved against the feature set and the embedding table:
// shot position plus the caption's in-vocabulary token indices.
struct PreparedPair {
  std::size_t shot = 0;
  std::vector<int> tokens;
};

inline std::vector<PreparedPair> prepare_pairs(const std::vector<CaptionPair>& pairs,
                                               const std::map<std::string, std::size_t>& shot_index,
                                               const EmbeddingTable& table) {
  if (pairs.empty()) throw DataError("empty caption-pair list");
  std::vector<PreparedPair> out;
  out.reserve(pairs.size());
  for (const CaptionPair& p : pairs) {
    auto it = shot_index.find(p.shot_id);
    if (it == shot_index.end()) {
      throw DataError("caption references unknown shot '" + p.shot_id + "'");
    }
    PreparedPair prepared;
    prepared.shot = it->second;
    prepared.tokens = table.token_indices(p.caption);
    if (prepared.tokens.empty()) {
      throw DataError("caption for shot '" + p.shot_id + "' has no in-vocabulary tokens: \"" +
                      p.caption + "\"");
    }
    out.push_back(std::move(prepared));
  }
  return out;
}

// Adaptive moment estimation with bias correction; one slot pair per tensor
// in canonical for_each_param order.
template <typename Scalar>
struct AdamState {
  std::vector<Tensor<Scalar>> m, v;
  std::int64_t steps = 0;

  static AdamState init(const EncoderParams<Scalar>& params) {
    AdamState st;
    params.for_each_param([&](const std::string&, const Tensor<Scalar>& t) {
      st.m.push_back(Tensor<Scalar>(t.shape()));
      st.v.push_back(Tensor<Scalar>(t.shape()));
    });
    return st;
  }
};

template <typename Scalar>
void adam_step(EncoderParams<Scalar>& params, const std::vector<Tensor<Scalar>>& grads,
               AdamState<Scalar>& st, const TrainConfig& cfg) {
  ++st.steps;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(st.steps));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(st.steps));
  std::size_t i = 0;
  params.for_each_param([&](const std::string&, Tensor<Scalar>& p) {
    const Tensor<Scalar>& g = grads[i];
    Tensor<Scalar>& m = st.m[i];
    Tensor<Scalar>& v = st.v[i];
    for (std::int64_t k = 0; k < p.numel(); ++k) {
      const double gk = static_cast<double>(g[k]);
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * gk;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * gk * gk;
      m[k] = static_cast<Scalar>(mk);
      v[k] = static_cast<Scalar>(vk);
      const double update =
          cfg.learning_rate * (mk / corr1) / (std::sqrt(vk / corr2) + cfg.adam_eps);
      p[k] = static_cast<Scalar>(static_cast<double>(p[k]) - update);
    }
    ++i;
  });
}

// One pass over the pairs in a seeded shuffle, taking a gradient step per
// mini-batch; a trailing batch of fewer than 2 pairs is dropped. Returns the
// mean loss per counted pair.
template <typename Scalar>
double train_epoch(const std::vector<PreparedPair>& pairs,
                   const std::vector<Tensor<Scalar>>& shot_frames,
                   const Tensor<Scalar>& table_vectors, EncoderParams<Scalar>& params,
                   AdamState<Scalar>& opt, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (pairs.empty()) throw DataError("empty caption-pair list");

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  double total = 0;
  std::size_t counted = 0;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end =
        std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
    const std::size_t b = end - start;
    if (b < 2) break;  // a single leftover pair has no negative

    try {
      Tape<Scalar> tape;
      tape.set_check_finite(true);
      TapeEncoder<Scalar> enc(tape, params, /*trainable=*/true);

      std::vector<Value> videos, texts;
      videos.reserve(b);
      texts.reserve(b);
      for (std::size_t k = start; k < end; ++k) {
        const PreparedPair& pair = pairs[order[k]];
        videos.push_back(enc.encode_video(shot_frames[pair.shot]).common);
        texts.push_back(enc.encode_text(pair.tokens, table_vectors).common);
      }

      const Value sim = similarity_matrix_on_tape(tape, videos, texts);
      const Value loss = tape.ranking_loss(sim, cfg.margin);
      const double loss_value = static_cast<double>(tape.value(loss)[0]);
      if (!std::isfinite(loss_value)) throw NumericError("loss is not finite");

      tape.backward(loss);
      std::vector<Tensor<Scalar>> grads;
      grads.reserve(enc.parameter_values().size());
      for (const Value v : enc.parameter_values()) grads.push_back(tape.grad(v));
      adam_step(params, grads, opt, cfg);

      total += loss_value;
      counted += b;
    } catch (const NumericError& e) {
      throw NumericError("training batch " + std::to_string(batch_index) + ": " + e.what());
    }
    ++batch_index;
  }

  if (counted == 0) throw DataError("no training batch had >= 2 pairs");
  return total / static_cast<double>(counted);
}

// --- Validation ----------------------------------------------------------------

struct RecallReport {
  std::map<int, double> recall_at;
  double median_rank = 0;
};

// Core ranking arithmetic, separated so it can be exercised with synthetic
// common-space vectors. caption_shot[i] is the index of caption i's matching
// entry in shot_commons; the rank counts strictly-better shots only.
inline RecallReport recall_from_commons(const std::vector<Tensor64>& shot_commons,
                                        const std::vector<Tensor64>& caption_commons,
                                        const std::vector<std::size_t>& caption_shot,
                                        const std::vector<int>& ks) {
  if (caption_commons.empty() || caption_commons.size() != caption_shot.size()) {
    throw DataError("recall needs one matching shot per caption");
  }
  for (int k : ks) {
    if (k < 1) throw ConfigError("recall K must be >= 1, got " + std::to_string(k));
  }

  std::vector<double> ranks;
  ranks.reserve(caption_commons.size());
  for (std::size_t i = 0; i < caption_commons.size(); ++i) {
    const double match = similarity(caption_commons[i], shot_commons.at(caption_shot[i]));
    std::int64_t better = 0;
    for (std::size_t j = 0; j < shot_commons.size(); ++j) {
      if (j == caption_shot[i]) continue;
      if (similarity(caption_commons[i], shot_commons[j]) > match) ++better;
    }
    ranks.push_back(static_cast<double>(better + 1));
  }

  RecallReport report;
  for (int k : ks) {
    std::size_t hits = 0;
    for (double r : ranks) {
      if (r <= static_cast<double>(k)) ++hits;
    }
    report.recall_at[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  std::sort(ranks.begin(), ranks.end());
  const std::size_t n = ranks.size();
  report.median_rank = (n % 2 == 1) ? ranks[n / 2] : 0.5 * (ranks[n / 2 - 1] + ranks[n / 2]);
  return report;
}

// Ranks every validation shot for every caption and reports recall@K plus the
// median rank of the matching shot.
inline RecallReport validation_recall(const std::vector<PreparedPair>& pairs,
                                      const std::vector<FeatureSequence>& shots,
                                      const EmbeddingTable& table,
                                      const EncoderParams<double>& params,
                                      const std::vector<int>& ks) {
  if (pairs.empty()) throw DataError("empty validation set");

  std::set<std::size_t> used;
  for (const PreparedPair& p : pairs) used.insert(p.shot);
  std::vector<std::size_t> shot_ids(used.begin(), used.end());
  std::map<std::size_t, std::size_t> position;  // shot index → slot in shot_commons
  std::vector<Tensor64> shot_commons;
  shot_commons.reserve(shot_ids.size());
  for (std::size_t id : shot_ids) {
    position[id] = shot_commons.size();
    shot_commons.push_back(encode_video(shots.at(id), params).second);
  }

  std::vector<Tensor64> caption_commons;
  std::vector<std::size_t> caption_shot;
  caption_commons.reserve(pairs.size());
  for (const PreparedPair& p : pairs) {
    Tape64 tape;
    TapeEncoder<double> enc(tape, params, /*trainable=*/false);
    caption_commons.push_back(tape.value(enc.encode_text(p.tokens, table.vectors()).common));
    caption_shot.push_back(position.at(p.shot));
  }
  return recall_from_commons(shot_commons, caption_commons, caption_shot, ks);
}

// --- Full training loop --------------------------------------------------------

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_loss = 0;
  double recall1 = 0;
  double recall5 = 0;
  double median_rank = 0;
};

template <typename Scalar>
struct TrainedModel {
  EncoderParams<Scalar> params;  // parameters after the final epoch
  EncoderParams<Scalar> best;    // highest validation recall@1 (earliest on ties)
  int best_epoch = 0;            // 1-based
  std::vector<EpochStats> history;
};

// Seeds parameters, then alternates train_epoch and validation_recall for
// cfg.epochs epochs. The optional callback sees each epoch's statistics and
// the parameters as of that epoch (for per-epoch checkpointing).
template <typename Scalar>
TrainedModel<Scalar> fit(
    const std::vector<CaptionPair>& train_pairs, const std::vector<CaptionPair>& val_pairs,
    const std::vector<FeatureSequence>& shots, const EmbeddingTable& table,
    EncoderConfig enc_cfg, const TrainConfig& cfg,
    const std::function<void(const EpochStats&, const EncoderParams<Scalar>&)>& on_epoch = {}) {
  cfg.validate();
  enc_cfg.validate();

  const std::map<std::string, std::size_t> shot_index = index_shots(shots);
  const std::vector<PreparedPair> train_set = prepare_pairs(train_pairs, shot_index, table);
  const std::vector<PreparedPair> val_set = prepare_pairs(val_pairs, shot_index, table);

  std::vector<Tensor<Scalar>> shot_frames;
  shot_frames.reserve(shots.size());
  for (const FeatureSequence& s : shots) {
    shot_frames.push_back(s.frames.template cast<Scalar>());
  }
  const Tensor<Scalar> table_vectors = table.vectors().template cast<Scalar>();

  TrainedModel<Scalar> model;
  model.params = EncoderParams<Scalar>::seeded(enc_cfg, cfg.seed);
  model.best = model.params;
  AdamState<Scalar> opt = AdamState<Scalar>::init(model.params);
  Rng rng(cfg.seed);

  double best_recall1 = -1;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double mean_loss =
        train_epoch(train_set, shot_frames, table_vectors, model.params, opt, cfg, rng);

    const EncoderParams<double> as_double = model.params.template cast<double>();
    const RecallReport report = validation_recall(val_set, shots, table, as_double, {1, 5});

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = mean_loss;
    stats.recall1 = report.recall_at.at(1);
    stats.recall5 = report.recall_at.at(5);
    stats.median_rank = report.median_rank;
    model.history.push_back(stats);

    if (stats.recall1 > best_recall1) {
      best_recall1 = stats.recall1;
      model.best = model.params;
      model.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(stats, model.params);
  }
  return model;
}

}  // namespace denc
