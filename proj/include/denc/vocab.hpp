#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace denc {

// Dense word→index mapping built from a caption corpus. Index order is
// descending frequency with lexicographic tie-breaks, so equal corpora always
// produce identical vocabularies.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> words, int min_frequency);

  std::optional<int> index_of(const std::string& word) const;
  bool contains(const std::string& word) const { return index_.count(word) > 0; }
  const std::string& word(int index) const { return words_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  int min_frequency() const { return min_frequency_; }

 private:
  std::vector<std::string> words_;      // index → word
  std::map<std::string, int> index_;    // word → index
  int min_frequency_ = 1;
};

// Tokenizes every caption and keeps words occurring at least min_frequency
// times. Throws ConfigError for min_frequency < 1 and DataError for an empty
// caption set.
Vocabulary build_vocabulary(const std::vector<std::string>& captions, int min_frequency);

inline constexpr int kDefaultVocabularyMinFrequency = 5;

}  // namespace denc
