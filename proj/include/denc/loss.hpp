#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "denc/common.hpp"
#include "denc/tape.hpp"
#include "denc/tensor.hpp"

namespace denc {

// Batch similarity: entry (i, j) is the cosine similarity of video i and text
// j. Implemented by row-normalizing both stacks and multiplying, so tests can
// cross-check it against pairwise similarity() calls.
inline Tensor64 similarity_matrix(const std::vector<Tensor64>& videos,
                                  const std::vector<Tensor64>& texts) {
  if (videos.empty() || videos.size() != texts.size()) {
    throw DataError("similarity_matrix needs equal, nonempty batches (got " +
                    std::to_string(videos.size()) + " videos, " + std::to_string(texts.size()) +
                    " texts)");
  }
  const std::int64_t b = static_cast<std::int64_t>(videos.size());
  const std::int64_t d = videos[0].numel();
  for (const auto& v : videos) {
    if (v.numel() != d) throw DataError("similarity_matrix dimension mismatch in video batch");
  }
  for (const auto& t : texts) {
    if (t.numel() != d) throw DataError("similarity_matrix dimension mismatch in text batch");
  }

  auto normalized = [d](const std::vector<Tensor64>& items) {
    Tensor64 stack({static_cast<std::int64_t>(items.size()), d});
    for (std::size_t r = 0; r < items.size(); ++r) {
      double norm = 0;
      for (std::int64_t c = 0; c < d; ++c) norm += items[r][c] * items[r][c];
      norm = std::sqrt(norm);
      for (std::int64_t c = 0; c < d; ++c) {
        stack.at(static_cast<std::int64_t>(r), c) = norm == 0.0 ? 0.0 : items[r][c] / norm;
      }
    }
    return stack;
  };

  const Tensor64 v = normalized(videos);
  const Tensor64 t = normalized(texts);
  Tensor64 out({b, b});
  emap_mut(out) = emap(v) * emap(t).transpose();
  return out;
}

// Hardest-negative marginal ranking loss:
//   loss = Σ_i ( max_{j≠i}[α + S(i,j) − S(i,i)]₊ + max_{j≠i}[α + S(j,i) − S(i,i)]₊ )
// This plain form is the reference for the differentiable tape op of the same
// name; the two are checked against each other in tests.
inline double ranking_loss(const Tensor64& s, double margin) {
  if (s.rank() != 2 || s.rows() != s.cols()) {
    throw DataError("ranking loss needs a square similarity matrix, got " + s.shape_str());
  }
  if (s.rows() < 2) throw DataError("ranking loss needs batch size >= 2");

  const std::int64_t b = s.rows();
  double loss = 0;
  for (std::int64_t i = 0; i < b; ++i) {
    double worst_row = -std::numeric_limits<double>::infinity();
    double worst_col = worst_row;
    for (std::int64_t j = 0; j < b; ++j) {
      if (j == i) continue;
      worst_row = std::max(worst_row, s.at(i, j));
      worst_col = std::max(worst_col, s.at(j, i));
    }
    loss += std::max(0.0, margin + worst_row - s.at(i, i));
    loss += std::max(0.0, margin + worst_col - s.at(i, i));
  }
  return loss;
}

// Graph form of the batch similarity for training: the inputs must be
// L2-normalized 1×d rows (encoder outputs), so cosine reduces to a dot
// product and S = V·Tᵀ.
template <typename Scalar>
Value similarity_matrix_on_tape(Tape<Scalar>& tape, const std::vector<Value>& videos,
                                const std::vector<Value>& texts) {
  if (videos.empty() || videos.size() != texts.size()) {
    throw DataError("similarity_matrix needs equal, nonempty batches");
  }
  const Value v = videos.size() == 1 ? videos[0] : tape.stack_rows(videos);
  const Value t = texts.size() == 1 ? texts[0] : tape.stack_rows(texts);
  return tape.matmul_nt(v, t);
}

}  // namespace denc
