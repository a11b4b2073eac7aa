#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "denc/tensor.hpp"

namespace denc {

class Rng;

// Word-vector table consumed by the textual encoder. Vectors are fixed inputs
// (never trained); one row per word, dense indices 0..size()-1. The same
// indices double as the bag-of-words one-hot positions.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> words, Tensor64 vectors);

  std::optional<int> index_of(const std::string& word) const;
  bool contains(const std::string& word) const { return index_.count(word) > 0; }
  const std::string& word(int index) const { return words_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& words() const { return words_; }

  const Tensor64& vectors() const { return vectors_; }
  std::size_t size() const { return words_.size(); }
  std::int64_t dim() const { return vectors_.shape().empty() ? 0 : vectors_.shape()[1]; }

  // Tokenizes a sentence and maps each token to its row index, silently
  // dropping out-of-vocabulary tokens. May return an empty list.
  std::vector<int> token_indices(const std::string& sentence) const;

 private:
  std::vector<std::string> words_;    // index → word
  std::map<std::string, int> index_;  // word → index
  Tensor64 vectors_;                  // |V| × E
};

// Text format: one `word v1 v2 ... vE` record per line, optionally preceded by
// a `count dim` header line. Throws DataError with the offending line number.
EmbeddingTable load_embeddings(const std::string& path);

// Fuses two tables into one: union of the vocabularies, per-word vectors
// concatenated, missing halves zero-filled. Word order is first-table order
// followed by second-table-only words in their file order.
EmbeddingTable merge_embeddings(const EmbeddingTable& first, const EmbeddingTable& second);

// Writes the table with a `count dim` header; values round-trip exactly.
void save_embeddings(const std::string& path, const EmbeddingTable& table);

// Seeded table with rows drawn from N(0, 1/E) so typical row norms are ~1.
EmbeddingTable random_embedding_table(const std::vector<std::string>& words, std::int64_t dim,
                                      Rng& rng);

}  // namespace denc
