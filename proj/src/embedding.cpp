#include "denc/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "denc/common.hpp"
#include "denc/rng.hpp"
#include "denc/text.hpp"

namespace denc {
namespace {

std::vector<std::string> whitespace_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (in >> field) fields.push_back(field);
  return fields;
}

bool parse_count(const std::string& token, std::uint64_t& out) {
  if (token.empty()) return false;
  std::uint64_t value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = value;
  return true;
}

double parse_value(const std::string& token, const std::string& path, std::size_t line_no) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(token, &consumed);
    if (consumed != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw DataError(path + " line " + std::to_string(line_no) + ": cannot parse value '" + token +
                    "'");
  }
}

std::string format_value(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, Tensor64 vectors)
    : words_(std::move(words)), vectors_(std::move(vectors)) {
  if (vectors_.shape().size() != 2 ||
      vectors_.shape()[0] != static_cast<std::int64_t>(words_.size())) {
    throw DataError("embedding table needs one vector row per word");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    auto [it, inserted] = index_.emplace(words_[i], static_cast<int>(i));
    if (!inserted) throw DataError("duplicate word '" + words_[i] + "' in embedding table");
  }
}

std::optional<int> EmbeddingTable::index_of(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> EmbeddingTable::token_indices(const std::string& sentence) const {
  std::vector<int> indices;
  for (const std::string& token : tokenize(sentence)) {
    if (auto idx = index_of(token)) indices.push_back(*idx);
  }
  return indices;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);

  std::vector<std::string> words;
  std::vector<double> values;
  std::int64_t dim = -1;
  bool saw_header = false;
  std::uint64_t header_count = 0, header_dim = 0;
  bool first_record = true;

  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> first_seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> fields = whitespace_fields(line);
    if (fields.empty()) continue;

    if (first_record && fields.size() == 2 && parse_count(fields[0], header_count) &&
        parse_count(fields[1], header_dim)) {
      saw_header = true;
      first_record = false;
      if (header_dim == 0) {
        throw DataError(path + " line " + std::to_string(line_no) + ": embedding dim must be > 0");
      }
      dim = static_cast<std::int64_t>(header_dim);
      continue;
    }
    first_record = false;

    if (fields.size() < 2) {
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": expected a word followed by vector values");
    }
    const std::string& word = fields[0];
    auto [it, inserted] = first_seen.emplace(word, line_no);
    if (!inserted) {
      throw DataError(path + " line " + std::to_string(line_no) + ": duplicate word '" + word +
                      "' (first on line " + std::to_string(it->second) + ")");
    }

    const std::int64_t row_dim = static_cast<std::int64_t>(fields.size()) - 1;
    if (dim < 0) {
      dim = row_dim;
    } else if (row_dim != dim) {
      throw DataError(path + " line " + std::to_string(line_no) + ": word '" + word + "' has " +
                      std::to_string(row_dim) + " values, expected " + std::to_string(dim));
    }
    words.push_back(word);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      values.push_back(parse_value(fields[i], path, line_no));
    }
  }

  if (words.empty()) throw DataError(path + ": embedding file contains no vectors");
  if (saw_header && header_count != words.size()) {
    throw DataError(path + ": header announces " + std::to_string(header_count) +
                    " vectors, file contains " + std::to_string(words.size()));
  }

  Tensor64 vectors({static_cast<std::int64_t>(words.size()), dim}, std::move(values));
  return EmbeddingTable(std::move(words), std::move(vectors));
}

EmbeddingTable merge_embeddings(const EmbeddingTable& first, const EmbeddingTable& second) {
  std::vector<std::string> words = first.words();
  for (const std::string& w : second.words()) {
    if (!first.contains(w)) words.push_back(w);
  }

  const std::int64_t d1 = first.dim(), d2 = second.dim();
  Tensor64 vectors = Tensor64::zeros(static_cast<std::int64_t>(words.size()), d1 + d2);
  for (std::size_t row = 0; row < words.size(); ++row) {
    const std::string& w = words[row];
    if (auto i = first.index_of(w)) {
      for (std::int64_t c = 0; c < d1; ++c) {
        vectors.at(static_cast<std::int64_t>(row), c) = first.vectors().at(*i, c);
      }
    }
    if (auto i = second.index_of(w)) {
      for (std::int64_t c = 0; c < d2; ++c) {
        vectors.at(static_cast<std::int64_t>(row), d1 + c) = second.vectors().at(*i, c);
      }
    }
  }
  return EmbeddingTable(std::move(words), std::move(vectors));
}

void save_embeddings(const std::string& path, const EmbeddingTable& table) {
  AtomicFile file(path);
  std::ostream& out = file.stream();
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t row = 0; row < table.size(); ++row) {
    out << table.word(static_cast<int>(row));
    for (std::int64_t c = 0; c < table.dim(); ++c) {
      out << ' ' << format_value(table.vectors().at(static_cast<std::int64_t>(row), c));
    }
    out << '\n';
  }
  file.commit();
}

EmbeddingTable random_embedding_table(const std::vector<std::string>& words, std::int64_t dim,
                                      Rng& rng) {
  if (dim < 1) throw ConfigError("embedding dim must be >= 1");
  Tensor64 vectors({static_cast<std::int64_t>(words.size()), dim});
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::int64_t i = 0; i < vectors.numel(); ++i) vectors[i] = rng.normal() * scale;
  return EmbeddingTable(words, std::move(vectors));
}

}  // namespace denc
