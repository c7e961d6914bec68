#pragma once

// Minimal INI reader: `[section]` headers, `key = value` lines, `#` or `;`
// comments, either on their own line or after whitespace. Keys and values are trimmed; every entry keeps
// the line it came from so validation messages can point back at the file.

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace scma::ini {

struct Entry {
  std::string section;  // empty for keys before the first header
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Issue {
  std::size_t line = 0;
  std::string message;
  std::string field;  // "section.key" when the line named one
};

struct Document {
  std::vector<Entry> entries;
  std::vector<Issue> issues;  // syntax problems; parsing continues past them
};

Document parse(std::istream& in);
Document parse_string(const std::string& text);

}  // namespace scma::ini
