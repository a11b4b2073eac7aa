#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "denc/common.hpp"
#include "denc/corpus.hpp"
#include "denc/embedding.hpp"
#include "denc/rng.hpp"
#include "denc/tape.hpp"
#include "denc/tensor.hpp"

namespace denc {

// Dimension plan shared by both encoder branches. All extents are validated
// before any parameter is allocated.
struct EncoderConfig {
  std::int64_t feature_dim = 32;   // D: keyframe feature width
  std::int64_t embed_dim = 16;     // E: word vector width
  std::int64_t bow_dim = 0;        // one-hot width of the textual level-1 average
  std::int64_t hidden = 32;        // h: GRU cell output size (per direction)
  std::int64_t attention_dim = 0;  // query/key projection width; 0 means 2h
  std::int64_t common_dim = 64;    // d: shared-space width
  std::vector<std::int64_t> conv_widths = {2, 3, 4};
  std::int64_t conv_filters = 32;  // filters per convolution width
  std::int64_t max_frames = 0;     // shots longer than this are subsampled; 0 keeps all

  std::int64_t attn_dim() const { return attention_dim > 0 ? attention_dim : 2 * hidden; }
  std::int64_t conv_out_dim() const {
    return conv_filters * static_cast<std::int64_t>(conv_widths.size());
  }
  std::int64_t video_concat_dim() const { return feature_dim + 2 * hidden + conv_out_dim(); }
  std::int64_t text_concat_dim() const { return bow_dim + 2 * hidden + conv_out_dim(); }

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("encoder config: ") + what);
    };
    need(feature_dim >= 1, "feature_dim must be >= 1");
    need(embed_dim >= 1, "embed_dim must be >= 1");
    need(bow_dim >= 1, "bow_dim must be >= 1 (set it from the embedding table)");
    need(hidden >= 1, "hidden must be >= 1");
    need(attention_dim >= 0, "attention_dim must be >= 0");
    need(common_dim >= 1, "common_dim must be >= 1");
    need(!conv_widths.empty(), "at least one convolution width is required");
    for (std::int64_t w : conv_widths) need(w >= 1, "convolution widths must be >= 1");
    need(conv_filters >= 1, "conv_filters must be >= 1");
    need(max_frames >= 0, "max_frames must be >= 0");
  }
};

// Uniform Xavier/Glorot initialization; biases stay zero.
template <typename Scalar>
Tensor<Scalar> glorot_uniform(std::int64_t rows, std::int64_t cols, Rng& rng) {
  Tensor<Scalar> t({rows, cols});
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    t[i] = static_cast<Scalar>(rng.uniform(-limit, limit));
  }
  return t;
}

template <typename Scalar>
struct GruCellParams {
  Tensor<Scalar> wz, wr, wh;  // input → gate, in_dim × h
  Tensor<Scalar> uz, ur, uh;  // state → gate, h × h
  Tensor<Scalar> bz, br, bh;  // 1 × h

  void init(std::int64_t in_dim, std::int64_t h, Rng& rng) {
    wz = glorot_uniform<Scalar>(in_dim, h, rng);
    wr = glorot_uniform<Scalar>(in_dim, h, rng);
    wh = glorot_uniform<Scalar>(in_dim, h, rng);
    uz = glorot_uniform<Scalar>(h, h, rng);
    ur = glorot_uniform<Scalar>(h, h, rng);
    uh = glorot_uniform<Scalar>(h, h, rng);
    bz = Tensor<Scalar>::zeros(1, h);
    br = Tensor<Scalar>::zeros(1, h);
    bh = Tensor<Scalar>::zeros(1, h);
  }

  template <typename Self, typename F>
  static void for_each_impl(Self& self, const std::string& prefix, F&& fn) {
    fn(prefix + ".wz", self.wz);
    fn(prefix + ".wr", self.wr);
    fn(prefix + ".wh", self.wh);
    fn(prefix + ".uz", self.uz);
    fn(prefix + ".ur", self.ur);
    fn(prefix + ".uh", self.uh);
    fn(prefix + ".bz", self.bz);
    fn(prefix + ".br", self.br);
    fn(prefix + ".bh", self.bh);
  }
};

template <typename Scalar>
struct BranchParams {
  GruCellParams<Scalar> gru_fwd, gru_bwd;
  Tensor<Scalar> wq, wk;                // attention projections, 2h × a
  std::vector<Tensor<Scalar>> conv_w;   // per width: (width·2h) × conv_filters
  std::vector<Tensor<Scalar>> conv_b;   // per width: 1 × conv_filters
  Tensor<Scalar> fc_w, fc_b;            // concat → d

  void init(const EncoderConfig& cfg, std::int64_t in_dim, std::int64_t level1_dim, Rng& rng) {
    gru_fwd.init(in_dim, cfg.hidden, rng);
    gru_bwd.init(in_dim, cfg.hidden, rng);
    const std::int64_t two_h = 2 * cfg.hidden;
    wq = glorot_uniform<Scalar>(two_h, cfg.attn_dim(), rng);
    wk = glorot_uniform<Scalar>(two_h, cfg.attn_dim(), rng);
    conv_w.clear();
    conv_b.clear();
    for (std::int64_t width : cfg.conv_widths) {
      conv_w.push_back(glorot_uniform<Scalar>(width * two_h, cfg.conv_filters, rng));
      conv_b.push_back(Tensor<Scalar>::zeros(1, cfg.conv_filters));
    }
    const std::int64_t concat_dim = level1_dim + two_h + cfg.conv_out_dim();
    fc_w = glorot_uniform<Scalar>(concat_dim, cfg.common_dim, rng);
    fc_b = Tensor<Scalar>::zeros(1, cfg.common_dim);
  }

  template <typename Self, typename F>
  static void for_each_impl(Self& self, const EncoderConfig& cfg, const std::string& prefix,
                            F&& fn) {
    GruCellParams<Scalar>::for_each_impl(self.gru_fwd, prefix + ".gru_fwd", fn);
    GruCellParams<Scalar>::for_each_impl(self.gru_bwd, prefix + ".gru_bwd", fn);
    fn(prefix + ".attn.wq", self.wq);
    fn(prefix + ".attn.wk", self.wk);
    for (std::size_t i = 0; i < cfg.conv_widths.size(); ++i) {
      const std::string width = std::to_string(cfg.conv_widths[i]);
      fn(prefix + ".conv" + width + ".w", self.conv_w[i]);
      fn(prefix + ".conv" + width + ".b", self.conv_b[i]);
    }
    fn(prefix + ".fc.w", self.fc_w);
    fn(prefix + ".fc.b", self.fc_b);
  }
};

// Every trainable weight of the dual encoder. for_each_param visits tensors in
// one canonical order, which fixes checkpoint layout, optimizer slot order,
// and the registration order on a tape.
template <typename Scalar>
struct EncoderParams {
  EncoderConfig config;
  BranchParams<Scalar> video;
  BranchParams<Scalar> text;

  static EncoderParams seeded(EncoderConfig cfg, std::uint64_t seed) {
    cfg.validate();
    EncoderParams p;
    p.config = cfg;
    Rng rng(seed);
    p.video.init(cfg, cfg.feature_dim, cfg.feature_dim, rng);
    p.text.init(cfg, cfg.embed_dim, cfg.bow_dim, rng);
    return p;
  }

  template <typename F>
  void for_each_param(F&& fn) {
    BranchParams<Scalar>::for_each_impl(video, config, "video", fn);
    BranchParams<Scalar>::for_each_impl(text, config, "text", fn);
  }
  template <typename F>
  void for_each_param(F&& fn) const {
    BranchParams<Scalar>::for_each_impl(video, config, "video", fn);
    BranchParams<Scalar>::for_each_impl(text, config, "text", fn);
  }

  std::size_t tensor_count() const {
    std::size_t n = 0;
    for_each_param([&](const std::string&, const Tensor<Scalar>&) { ++n; });
    return n;
  }

  std::int64_t scalar_count() const {
    std::int64_t n = 0;
    for_each_param([&](const std::string&, const Tensor<Scalar>& t) { n += t.numel(); });
    return n;
  }

  template <typename Other>
  EncoderParams<Other> cast() const {
    EncoderParams<Other> out;
    out.config = config;
    std::vector<const Tensor<Scalar>*> src;
    for_each_param([&](const std::string&, const Tensor<Scalar>& t) { src.push_back(&t); });
    // Allocate the destination via a seeded init, then overwrite every tensor.
    out = EncoderParams<Other>::seeded(config, 0);
    std::size_t i = 0;
    out.for_each_param([&](const std::string&, Tensor<Other>& t) {
      t = src[i++]->template cast<Other>();
    });
    return out;
  }
};

// Keeps rows 0, floor(n/k), ... — evenly spaced original frames.
template <typename Scalar>
Tensor<Scalar> subsample_rows(const Tensor<Scalar>& t, std::int64_t max_rows) {
  const std::int64_t n = t.rows();
  if (max_rows <= 0 || n <= max_rows) return t;
  Tensor<Scalar> out({max_rows, t.cols()});
  for (std::int64_t i = 0; i < max_rows; ++i) {
    const std::int64_t src = (i * n) / max_rows;
    for (std::int64_t c = 0; c < t.cols(); ++c) out.at(i, c) = t.at(src, c);
  }
  return out;
}

// Handles of one encoded item on a tape.
struct EncodedValues {
  Value phi1, phi2, phi3;  // three encoding levels
  Value projected;          // concat → fully-connected output, 1×d
  Value common;             // L2-normalized shared-space vector, 1×d
};

// Builds encoder forward graphs on a tape. Parameters are registered once at
// construction — as tape parameters when `trainable`, else as constants — and
// the same handles are reused by every encode call on that tape.
template <typename Scalar>
class TapeEncoder {
 public:
  TapeEncoder(Tape<Scalar>& tape, const EncoderParams<Scalar>& params, bool trainable)
      : tape_(tape), cfg_(params.config) {
    cfg_.validate();
    params.for_each_param([&](const std::string& name, const Tensor<Scalar>& t) {
      const Value v = trainable ? tape_.param(t) : tape_.constant(t);
      names_.push_back(name);
      values_.push_back(v);
      by_name_.emplace(name, v);
    });
    ones_h_ = tape_.constant(Tensor<Scalar>::full(1, cfg_.hidden, Scalar(1)));
  }

  // Parameter handles in canonical for_each_param order.
  const std::vector<Value>& parameter_values() const { return values_; }
  const std::vector<std::string>& parameter_names() const { return names_; }

  EncodedValues encode_video(const Tensor<Scalar>& frames) {
    if (frames.rank() != 2 || frames.cols() != cfg_.feature_dim) {
      throw DataError("shot feature dimension " +
                      (frames.rank() == 2 ? std::to_string(frames.cols()) : frames.shape_str()) +
                      " does not match encoder feature_dim " + std::to_string(cfg_.feature_dim));
    }
    const Tensor<Scalar> kept = subsample_rows(frames, cfg_.max_frames);
    const Value seq = tape_.constant(kept);
    const Value phi1 = tape_.mean_rows(seq);
    return encode_sequence(seq, kept.rows(), phi1, "video");
  }

  EncodedValues encode_text(const std::vector<int>& tokens, const Tensor<Scalar>& table_vectors) {
    if (tokens.empty()) throw DataError("sentence has no in-vocabulary tokens");
    if (table_vectors.cols() != cfg_.embed_dim) {
      throw DataError("embedding dim " + std::to_string(table_vectors.cols()) +
                      " does not match encoder embed_dim " + std::to_string(cfg_.embed_dim));
    }
    const std::int64_t m = static_cast<std::int64_t>(tokens.size());

    // Level 1: average of one-hot vectors over the bag-of-words width. Tokens
    // indexed past bow_dim still count in the denominator but land nowhere.
    Tensor<Scalar> bow = Tensor<Scalar>::zeros(1, cfg_.bow_dim);
    Tensor<Scalar> rows({m, cfg_.embed_dim});
    for (std::int64_t j = 0; j < m; ++j) {
      const int idx = tokens[static_cast<std::size_t>(j)];
      if (idx < 0 || idx >= table_vectors.rows()) {
        throw DataError("token index " + std::to_string(idx) + " outside embedding table of " +
                        std::to_string(table_vectors.rows()) + " rows");
      }
      if (idx < cfg_.bow_dim) bow[idx] += Scalar(1);
      for (std::int64_t c = 0; c < cfg_.embed_dim; ++c) rows.at(j, c) = table_vectors.at(idx, c);
    }
    for (std::int64_t i = 0; i < bow.numel(); ++i) bow[i] /= static_cast<Scalar>(m);

    const Value phi1 = tape_.constant(std::move(bow));
    const Value seq = tape_.constant(std::move(rows));
    return encode_sequence(seq, m, phi1, "text");
  }

 private:
  Value p(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::invalid_argument("unknown parameter " + name);
    return it->second;
  }

  Value gru_step(Value x, Value h_prev, const std::string& cell) {
    Tape<Scalar>& t = tape_;
    const Value z = t.sigmoid(
        t.add(t.add(t.matmul(x, p(cell + ".wz")), t.matmul(h_prev, p(cell + ".uz"))),
              p(cell + ".bz")));
    const Value r = t.sigmoid(
        t.add(t.add(t.matmul(x, p(cell + ".wr")), t.matmul(h_prev, p(cell + ".ur"))),
              p(cell + ".br")));
    const Value cand = t.tanh(
        t.add(t.add(t.matmul(x, p(cell + ".wh")), t.matmul(t.mul(r, h_prev), p(cell + ".uh"))),
              p(cell + ".bh")));
    return t.add(t.mul(z, h_prev), t.mul(t.sub(ones_h_, z), cand));
  }

  // Bi-directional recurrence: row t of the result is [fwd state at t, bwd
  // state at t], each of width h.
  Value bigru(Value seq, std::int64_t n, const std::string& branch) {
    const Value h0 = tape_.constant(Tensor<Scalar>::zeros(1, cfg_.hidden));
    std::vector<Value> fwd(static_cast<std::size_t>(n)), bwd(static_cast<std::size_t>(n));
    Value state = h0;
    for (std::int64_t t = 0; t < n; ++t) {
      state = gru_step(tape_.slice_rows(seq, t, t + 1), state, branch + ".gru_fwd");
      fwd[static_cast<std::size_t>(t)] = state;
    }
    state = h0;
    for (std::int64_t t = n - 1; t >= 0; --t) {
      state = gru_step(tape_.slice_rows(seq, t, t + 1), state, branch + ".gru_bwd");
      bwd[static_cast<std::size_t>(t)] = state;
    }
    std::vector<Value> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (std::int64_t t = 0; t < n; ++t) {
      rows.push_back(tape_.concat_cols(
          {fwd[static_cast<std::size_t>(t)], bwd[static_cast<std::size_t>(t)]}));
    }
    return rows.size() == 1 ? rows[0] : tape_.stack_rows(rows);
  }

  // Scaled dot-product self-attention with learned query/key projections;
  // returns the attended sequence A·H.
  Value attend(Value H, const std::string& branch) {
    const Value q = tape_.matmul(H, p(branch + ".attn.wq"));
    const Value k = tape_.matmul(H, p(branch + ".attn.wk"));
    const Value logits =
        tape_.scale(tape_.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(cfg_.attn_dim())));
    return tape_.matmul(tape_.row_softmax(logits), H);
  }

  // Multi-width 1-d convolution over the attended rows with rectification and
  // max-over-time pooling; widths longer than the sequence contribute zeros.
  Value conv_level(Value attended, std::int64_t n, const std::string& branch) {
    std::vector<Value> per_width;
    for (std::size_t i = 0; i < cfg_.conv_widths.size(); ++i) {
      const std::int64_t width = cfg_.conv_widths[i];
      if (width > n) {
        per_width.push_back(tape_.constant(Tensor<Scalar>::zeros(1, cfg_.conv_filters)));
        continue;
      }
      const std::string base = branch + ".conv" + std::to_string(width);
      std::vector<Value> windows;
      for (std::int64_t t = 0; t + width <= n; ++t) {
        const Value flat = tape_.flatten_row(tape_.slice_rows(attended, t, t + width));
        windows.push_back(tape_.add(tape_.matmul(flat, p(base + ".w")), p(base + ".b")));
      }
      const Value stacked = windows.size() == 1 ? windows[0] : tape_.stack_rows(windows);
      per_width.push_back(tape_.max_over_time(tape_.relu(stacked)));
    }
    return per_width.size() == 1 ? per_width[0] : tape_.concat_cols(per_width);
  }

  EncodedValues encode_sequence(Value seq, std::int64_t n, Value phi1, const std::string& branch) {
    const Value H = bigru(seq, n, branch);
    const Value attended = attend(H, branch);
    EncodedValues out;
    out.phi1 = phi1;
    out.phi2 = tape_.mean_rows(attended);
    out.phi3 = conv_level(attended, n, branch);
    const Value full = tape_.concat_cols({out.phi1, out.phi2, out.phi3});
    out.projected = tape_.add(tape_.matmul(full, p(branch + ".fc.w")), p(branch + ".fc.b"));
    out.common = tape_.l2_normalize(out.projected);
    return out;
  }

  Tape<Scalar>& tape_;
  EncoderConfig cfg_;
  std::vector<std::string> names_;
  std::vector<Value> values_;
  std::map<std::string, Value> by_name_;
  Value ones_h_{};
};

// --- Plain inference wrappers -------------------------------------------------

template <typename Scalar>
struct AttentionResult {
  Tensor<Scalar> attended;  // A·H, n × 2h
  Tensor<Scalar> weights;   // A, n × n, rows sum to 1
};

// Scaled dot-product self-attention with learned query/key projections. The
// tape-based encoder records the same computation; this standalone form also
// returns the weight matrix.
template <typename Scalar>
AttentionResult<Scalar> self_attention(const Tensor<Scalar>& H, const Tensor<Scalar>& wq,
                                       const Tensor<Scalar>& wk) {
  if (H.rank() != 2 || wq.rank() != 2 || wk.rank() != 2 || H.cols() != wq.rows() ||
      H.cols() != wk.rows() || wq.cols() != wk.cols()) {
    throw DataError("self_attention shape mismatch: H " + H.shape_str() + ", wq " +
                    wq.shape_str() + ", wk " + wk.shape_str());
  }
  const std::int64_t n = H.rows();
  const EigenRowMat<Scalar> q = emap(H) * emap(wq);
  const EigenRowMat<Scalar> k = emap(H) * emap(wk);
  EigenRowMat<Scalar> logits =
      (q * k.transpose()) * Scalar(1.0 / std::sqrt(static_cast<double>(wq.cols())));

  AttentionResult<Scalar> out;
  out.weights = Tensor<Scalar>({n, n});
  for (std::int64_t r = 0; r < n; ++r) {
    Scalar mx = logits(r, 0);
    for (std::int64_t c = 1; c < n; ++c) mx = std::max(mx, logits(r, c));
    Scalar total = 0;
    for (std::int64_t c = 0; c < n; ++c) {
      const Scalar e = std::exp(logits(r, c) - mx);
      out.weights.at(r, c) = e;
      total += e;
    }
    for (std::int64_t c = 0; c < n; ++c) out.weights.at(r, c) /= total;
  }
  out.attended = Tensor<Scalar>({n, H.cols()});
  emap_mut(out.attended) = emap(out.weights) * emap(H);
  return out;
}

struct LevelEncodings {
  Tensor64 phi1, phi2, phi3;
};

// Unit-norm (or all-zero, for degenerate projections) row vector of width d.
using CommonSpaceVector = Tensor64;

struct TokenSequence {
  std::vector<int> tokens;  // embedding-table row indices
  std::string text;         // original sentence, kept for error messages
};

inline TokenSequence make_token_sequence(const std::string& sentence, const EmbeddingTable& table) {
  TokenSequence seq;
  seq.text = sentence;
  seq.tokens = table.token_indices(sentence);
  return seq;
}

inline std::pair<LevelEncodings, CommonSpaceVector> encode_video(
    const FeatureSequence& shot, const EncoderParams<double>& params) {
  Tape64 tape;
  TapeEncoder<double> enc(tape, params, /*trainable=*/false);
  const EncodedValues v = enc.encode_video(shot.frames);
  return {{tape.value(v.phi1), tape.value(v.phi2), tape.value(v.phi3)}, tape.value(v.common)};
}

inline std::pair<LevelEncodings, CommonSpaceVector> encode_text(
    const TokenSequence& sentence, const EmbeddingTable& table,
    const EncoderParams<double>& params) {
  if (sentence.tokens.empty()) {
    throw DataError("sentence \"" + sentence.text + "\" has no in-vocabulary tokens");
  }
  Tape64 tape;
  TapeEncoder<double> enc(tape, params, /*trainable=*/false);
  const EncodedValues v = enc.encode_text(sentence.tokens, table.vectors());
  return {{tape.value(v.phi1), tape.value(v.phi2), tape.value(v.phi3)}, tape.value(v.common)};
}

// Cosine similarity; either argument being the zero vector yields 0.
inline double similarity(const Tensor64& a, const Tensor64& b) {
  if (a.numel() != b.numel()) {
    throw DataError("similarity requires equal dimensions, got " + a.shape_str() + " vs " +
                    b.shape_str());
  }
  double dot = 0, na = 0, nb = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace denc
