#pragma once

#include <string>
#include <vector>

namespace denc {

// Caption/query tokenization: ASCII lowercase, punctuation replaced by
// whitespace, split on whitespace. Non-ASCII bytes pass through untouched.
std::vector<std::string> tokenize(const std::string& text);

// Stable identifier from a human-readable label: lowercase, runs of
// whitespace and slashes collapse to single hyphens.
std::string slugify(const std::string& label);

std::string trim(const std::string& s);

std::vector<std::string> split(const std::string& s, char sep);

}  // namespace denc
