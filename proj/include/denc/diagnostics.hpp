#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "denc/encoder.hpp"
#include "denc/loss.hpp"
#include "denc/rng.hpp"
#include "denc/tape.hpp"
#include "denc/train.hpp"

namespace denc {

// Probe-sized end-to-end gradient verification: a batch of random video/text
// pairs is pushed through the full twin-encoder similarity loss, and every
// parameter coordinate's backward gradient is compared against a central
// finite difference of the forward value.
struct FdCheckConfig {
  EncoderConfig encoder{.feature_dim = 8,
                        .embed_dim = 6,
                        .bow_dim = 9,
                        .hidden = 5,
                        .common_dim = 7,
                        .conv_widths = {2, 3},
                        .conv_filters = 3};
  int pairs = 3;             // batch size; needs >= 2 for in-batch negatives
  std::int64_t frames = 4;   // keyframes per probe shot
  int tokens = 5;            // words per probe caption
  double margin = 0.2;
  double step = 1e-6;
  std::uint64_t seed = 1;
};

struct FdCheckReport {
  double worst_rel_error = 0;
  std::int64_t scalar_count = 0;
  double loss = 0;  // forward value at the probe point; should be > 0
};

namespace detail {

inline double fd_forward_loss(const EncoderParams<double>& params,
                              const std::vector<Tensor64>& frames,
                              const std::vector<std::vector<int>>& tokens, const Tensor64& table,
                              double margin) {
  Tape64 tape;
  TapeEncoder<double> enc(tape, params, /*trainable=*/false);
  std::vector<Value> videos, texts;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    videos.push_back(enc.encode_video(frames[i]).common);
    texts.push_back(enc.encode_text(tokens[i], table).common);
  }
  const Value sim = similarity_matrix_on_tape(tape, videos, texts);
  return tape.value(tape.ranking_loss(sim, margin))[0];
}

}  // namespace detail

inline FdCheckReport fd_check_encoder(const FdCheckConfig& cfg) {
  cfg.encoder.validate();
  if (cfg.pairs < 2) throw ConfigError("gradient check needs at least 2 pairs");
  if (cfg.frames < 1) throw ConfigError("gradient check needs at least 1 frame per shot");
  if (cfg.tokens < 1) throw ConfigError("gradient check needs at least 1 token per caption");
  if (!(cfg.step > 0)) throw ConfigError("finite-difference step must be > 0");

  Rng rng(cfg.seed);
  EncoderParams<double> params = EncoderParams<double>::seeded(cfg.encoder, cfg.seed);

  Tensor64 table({cfg.encoder.bow_dim, cfg.encoder.embed_dim});
  for (std::int64_t i = 0; i < table.numel(); ++i) table[i] = rng.normal();

  std::vector<Tensor64> frames;
  std::vector<std::vector<int>> tokens;
  for (int p = 0; p < cfg.pairs; ++p) {
    Tensor64 f({cfg.frames, cfg.encoder.feature_dim});
    for (std::int64_t i = 0; i < f.numel(); ++i) f[i] = rng.normal();
    frames.push_back(std::move(f));
    std::vector<int> sentence;
    for (int t = 0; t < cfg.tokens; ++t) {
      sentence.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.encoder.bow_dim))));
    }
    tokens.push_back(std::move(sentence));
  }

  // Analytic route: one trainable tape, full backward pass.
  Tape64 tape;
  TapeEncoder<double> enc(tape, params, /*trainable=*/true);
  std::vector<Value> videos, texts;
  for (int p = 0; p < cfg.pairs; ++p) {
    videos.push_back(enc.encode_video(frames[static_cast<std::size_t>(p)]).common);
    texts.push_back(enc.encode_text(tokens[static_cast<std::size_t>(p)], table).common);
  }
  const Value sim = similarity_matrix_on_tape(tape, videos, texts);
  const Value loss = tape.ranking_loss(sim, cfg.margin);
  tape.backward(loss);
  std::vector<Tensor64> grads;
  for (const Value v : enc.parameter_values()) grads.push_back(tape.grad(v));

  FdCheckReport report;
  report.loss = tape.value(loss)[0];

  std::size_t tensor_index = 0;
  params.for_each_param([&](const std::string&, Tensor64& t) {
    const Tensor64& grad = grads[tensor_index++];
    for (std::int64_t k = 0; k < t.numel(); ++k) {
      const double saved = t[k];
      t[k] = saved + cfg.step;
      const double up = detail::fd_forward_loss(params, frames, tokens, table, cfg.margin);
      t[k] = saved - cfg.step;
      const double down = detail::fd_forward_loss(params, frames, tokens, table, cfg.margin);
      t[k] = saved;
      const double numeric = (up - down) / (2.0 * cfg.step);
      const double analytic = grad[k];
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      report.worst_rel_error = std::max(report.worst_rel_error, rel);
      ++report.scalar_count;
    }
  });
  return report;
}

}  // namespace denc
