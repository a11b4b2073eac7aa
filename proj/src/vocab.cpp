#include "denc/vocab.hpp"

#include <algorithm>
#include <cstdint>

#include "denc/common.hpp"
#include "denc/text.hpp"

namespace denc {

Vocabulary::Vocabulary(std::vector<std::string> words, int min_frequency)
    : words_(std::move(words)), min_frequency_(min_frequency) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    auto [it, inserted] = index_.emplace(words_[i], static_cast<int>(i));
    if (!inserted) throw DataError("duplicate vocabulary word '" + words_[i] + "'");
  }
}

std::optional<int> Vocabulary::index_of(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(const std::vector<std::string>& captions, int min_frequency) {
  if (min_frequency < 1) {
    throw ConfigError("vocabulary min_frequency must be >= 1, got " +
                      std::to_string(min_frequency));
  }
  if (captions.empty()) throw DataError("cannot build a vocabulary from an empty caption set");

  std::map<std::string, std::uint64_t> counts;
  for (const std::string& caption : captions) {
    for (const std::string& token : tokenize(caption)) ++counts[token];
  }

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [word, count] : counts) {
    if (count >= static_cast<std::uint64_t>(min_frequency)) kept.emplace_back(word, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [word, count] : kept) words.push_back(std::move(word));
  return Vocabulary(std::move(words), min_frequency);
}

}  // namespace denc
