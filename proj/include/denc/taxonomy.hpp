#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace denc {

enum class Category : int { kEconomic, kSocial, kDemographic, kEnvironmental, kPolitical };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::kEconomic, Category::kSocial, Category::kDemographic, Category::kEnvironmental,
    Category::kPolitical};

const char* category_name(Category c);
Category parse_category(const std::string& name);  // throws DataError on unknown names

// One node of the node taxonomy: two levels, level-2 nodes point at a
// level-1 parent of the same category.
struct Concept {
  std::string id;
  std::string label;
  Category category = Category::kEconomic;
  int level = 1;
  std::optional<std::string> parent_id;
  std::string definition;
  std::vector<std::string> augmentations;
};

// A node expanded into query sentences: the label first, then each
// augmentation sentence in file order.
struct AugmentedQuery {
  std::string concept_id;
  std::vector<std::string> sentences;
};

// Validated node hierarchy. Immutable after load; safe to share across
// worker threads.
class ConceptTree {
 public:
  // Parses the tab-separated taxonomy format:
  //   id<TAB>label<TAB>category<TAB>level<TAB>parent_id-or-"-"<TAB>definition<TAB>aug1|aug2|...
  // '#'-prefixed lines are comments. All structural invariants are checked.
  static ConceptTree load(std::istream& in);
  static ConceptTree load_string(const std::string& content);
  static ConceptTree load_file(const std::string& path);

  void serialize(std::ostream& out) const;

  AugmentedQuery expand_query(const std::string& concept_id) const;
  std::vector<Concept> ancestors(const std::string& concept_id) const;

  bool has(const std::string& id) const { return concepts_.count(id) > 0; }
  const Concept& get(const std::string& id) const;

  std::size_t size() const { return order_.size(); }
  std::size_t level1_count() const;
  const std::vector<std::string>& level1_ids(Category c) const;
  const std::vector<std::string>& ids_in_order() const { return order_; }

 private:
  void insert(Concept node, std::size_t line_no);
  void validate_structure() const;

  std::map<std::string, Concept> concepts_;
  std::vector<std::string> order_;  // file order, preserved by serialize()
  std::map<Category, std::vector<std::string>> level1_by_category_;
};

}  // namespace denc
