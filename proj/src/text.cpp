#include "denc/text.hpp"

#include <cctype>

namespace denc {

namespace {

bool is_ascii(unsigned char c) { return c < 0x80; }

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_ascii(c) && (std::isspace(c) || std::ispunct(c))) {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
    } else {
      current.push_back(is_ascii(c) ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

std::string slugify(const std::string& label) {
  std::string out;
  bool pending_hyphen = false;
  for (unsigned char c : label) {
    if (is_ascii(c) && (std::isspace(c) || c == '/')) {
      pending_hyphen = !out.empty();
    } else {
      if (pending_hyphen) {
        out.push_back('-');
        pending_hyphen = false;
      }
      out.push_back(is_ascii(c) ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace denc
