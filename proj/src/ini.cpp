#include "scma/ini.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <utility>

namespace scma::ini {

namespace {

std::string trim(const std::string& s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto first = std::find_if_not(s.begin(), s.end(), is_space);
  auto last = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
  return first < last ? std::string(first, last) : std::string();
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// A comment marker counts at the start of the line or after whitespace, so
// values such as "a#b" survive.
std::string strip_comment(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == '#' || s[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(s[i - 1])) != 0)) {
      return s.substr(0, i);
    }
  }
  return s;
}

}  // namespace

Document parse(std::istream& in) {
  Document doc;
  std::string section;
  std::set<std::pair<std::string, std::string>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (line_no == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        doc.issues.push_back({line_no, "malformed section header '" + line + "'", ""});
        continue;
      }
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      doc.issues.push_back({line_no, "expected 'key = value', got '" + line + "'", ""});
      continue;
    }
    Entry e{section, lower(trim(line.substr(0, eq))), trim(line.substr(eq + 1)), line_no};
    if (e.key.empty()) {
      doc.issues.push_back({line_no, "missing key before '='", ""});
      continue;
    }
    if (!seen.insert({e.section, e.key}).second) {
      doc.issues.push_back({line_no, "duplicate key, first set earlier in the file",
                            e.section.empty() ? e.key : e.section + "." + e.key});
      continue;
    }
    doc.entries.push_back(std::move(e));
  }
  return doc;
}

Document parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

}  // namespace scma::ini
