#include "denc/taxonomy.hpp"

#include <fstream>
#include <sstream>

#include "denc/common.hpp"
#include "denc/text.hpp"

namespace denc {
namespace {

constexpr std::array<const char*, 5> kCategoryNames = {"economic", "social", "demographic",
                                                       "environmental", "political"};

[[noreturn]] void fail(std::size_t line_no, const std::string& message) {
  throw DataError("taxonomy line " + std::to_string(line_no) + ": " + message);
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

}  // namespace

const char* category_name(Category c) { return kCategoryNames[static_cast<int>(c)]; }

Category parse_category(const std::string& name) {
  for (Category c : kAllCategories) {
    if (name == category_name(c)) return c;
  }
  throw DataError("unknown category '" + name + "' (expected one of " +
                  join({kCategoryNames.begin(), kCategoryNames.end()}, ' ') + ")");
}

ConceptTree ConceptTree::load(std::istream& in) {
  ConceptTree tree;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;

    // The augmentation field is optional so that editors stripping trailing
    // tabs do not corrupt records without augmentations.
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 6 && fields.size() != 7) {
      fail(line_no, "expected 6 or 7 tab-separated fields, found " + std::to_string(fields.size()));
    }

    Concept node;
    node.id = trim(fields[0]);
    node.label = trim(fields[1]);
    if (node.id.empty()) fail(line_no, "empty concept id");
    if (node.label.empty()) fail(line_no, "empty label for concept '" + node.id + "'");

    try {
      node.category = parse_category(trim(fields[2]));
    } catch (const DataError& e) {
      fail(line_no, e.what());
    }

    const std::string level_text = trim(fields[3]);
    if (level_text == "1") {
      node.level = 1;
    } else if (level_text == "2") {
      node.level = 2;
    } else {
      fail(line_no, "level must be 1 or 2, found '" + level_text + "'");
    }

    const std::string parent_text = trim(fields[4]);
    if (node.level == 1) {
      if (parent_text != "-") {
        fail(line_no, "level-1 concept '" + node.id + "' must use '-' for its parent field");
      }
    } else {
      if (parent_text == "-" || parent_text.empty()) {
        fail(line_no, "level-2 concept '" + node.id + "' must name a parent");
      }
      node.parent_id = parent_text;
    }

    node.definition = trim(fields[5]);
    if (fields.size() == 7) {
      for (const std::string& piece : split(fields[6], '|')) {
        const std::string aug = trim(piece);
        if (!aug.empty()) node.augmentations.push_back(aug);
      }
    }

    tree.insert(std::move(node), line_no);
  }
  tree.validate_structure();
  return tree;
}

ConceptTree ConceptTree::load_string(const std::string& content) {
  std::istringstream in(content);
  return load(in);
}

ConceptTree ConceptTree::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open taxonomy file: " + path);
  return load(in);
}

void ConceptTree::insert(Concept node, std::size_t line_no) {
  if (concepts_.count(node.id) > 0) {
    fail(line_no, "duplicate concept id '" + node.id + "'");
  }
  order_.push_back(node.id);
  if (node.level == 1) {
    level1_by_category_[node.category].push_back(node.id);
  }
  concepts_.emplace(node.id, std::move(node));
}

void ConceptTree::validate_structure() const {
  for (const std::string& id : order_) {
    const Concept& node = concepts_.at(id);
    if (!node.parent_id) continue;
    auto it = concepts_.find(*node.parent_id);
    if (it == concepts_.end()) {
      throw DataError("concept '" + id + "' names unknown parent '" + *node.parent_id + "'");
    }
    const Concept& parent = it->second;
    if (parent.level != 1) {
      throw DataError("concept '" + id + "' has parent '" + parent.id +
                      "', which is not a level-1 concept");
    }
    if (parent.category != node.category) {
      throw DataError("concept '" + id + "' (" + category_name(node.category) +
                      ") has parent '" + parent.id + "' in a different category (" +
                      category_name(parent.category) + ")");
    }
  }
}

void ConceptTree::serialize(std::ostream& out) const {
  for (const std::string& id : order_) {
    const Concept& c = concepts_.at(id);
    out << c.id << '\t' << c.label << '\t' << category_name(c.category) << '\t' << c.level << '\t'
        << (c.parent_id ? *c.parent_id : std::string("-")) << '\t' << c.definition;
    if (!c.augmentations.empty()) out << '\t' << join(c.augmentations, '|');
    out << '\n';
  }
}

AugmentedQuery ConceptTree::expand_query(const std::string& concept_id) const {
  const Concept& c = get(concept_id);
  AugmentedQuery query;
  query.concept_id = c.id;
  query.sentences.push_back(c.label);
  for (const std::string& aug : c.augmentations) query.sentences.push_back(aug);
  return query;
}

std::vector<Concept> ConceptTree::ancestors(const std::string& concept_id) const {
  std::vector<Concept> chain;
  const Concept* current = &get(concept_id);
  while (current->parent_id) {
    current = &get(*current->parent_id);
    chain.push_back(*current);
  }
  return chain;
}

const Concept& ConceptTree::get(const std::string& id) const {
  auto it = concepts_.find(id);
  if (it == concepts_.end()) throw DataError("unknown concept id '" + id + "'");
  return it->second;
}

std::size_t ConceptTree::level1_count() const {
  std::size_t n = 0;
  for (const auto& [category, ids] : level1_by_category_) n += ids.size();
  return n;
}

const std::vector<std::string>& ConceptTree::level1_ids(Category c) const {
  static const std::vector<std::string> kEmpty;
  auto it = level1_by_category_.find(c);
  return it == level1_by_category_.end() ? kEmpty : it->second;
}

}  // namespace denc
