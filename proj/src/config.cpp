#include "stab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace stab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_line(int lineno, const std::string& what) {
  raise(ErrorCode::ConfigError,
        "config line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0, order = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // strip comments outside quotes
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      else if (line[i] == '#' && !quoted) { line.erase(i); break; }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad_line(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) bad_line(lineno, "empty section name");
      cfg.sections_[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) bad_line(lineno, "expected 'key = value'");
    if (section.empty()) bad_line(lineno, "key before any [section]");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) bad_line(lineno, "empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    else if (!value.empty() && value.front() == '"')
      bad_line(lineno, "unterminated string");
    if (cfg.sections_[section].count(key))
      bad_line(lineno, "duplicate key '" + key + "' in [" + section + "]");
    cfg.sections_[section][key] = Entry{value, order++};
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorCode::IoError, "cannot read config file '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return parse(os.str());
}

bool ConfigFile::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) != 0;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key) const {
  auto it = sections_.find(section);
  if (it == sections_.end() || !it->second.count(key))
    raise(ErrorCode::ConfigError,
          "config: missing required key '" + key + "' in [" + section + "]");
  return it->second.at(key).value;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = get_string(section, key);
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end != raw.c_str() + raw.size() || raw.empty())
    raise(ErrorCode::ConfigError,
          "config: [" + section + "] " + key + " = '" + raw + "' is not a number");
  return v;
}

long ConfigFile::get_int(const std::string& section, const std::string& key,
                         long fallback) const {
  const double v = get_double(section, key, double(fallback));
  const long n = static_cast<long>(v);
  if (double(n) != v)
    raise(ErrorCode::ConfigError,
          "config: [" + section + "] " + key + " must be an integer");
  return n;
}

std::uint64_t ConfigFile::get_uint(const std::string& section, const std::string& key,
                                   std::uint64_t fallback) const {
  const long v = get_int(section, key, 0);
  if (!has(section, key)) return fallback;
  if (v < 0)
    raise(ErrorCode::ConfigError,
          "config: [" + section + "] " + key + " must be non-negative");
  return std::uint64_t(v);
}

std::vector<std::string> ConfigFile::keys(const std::string& section) const {
  std::vector<std::pair<int, std::string>> ordered;
  auto it = sections_.find(section);
  if (it != sections_.end())
    for (const auto& [k, e] : it->second) ordered.emplace_back(e.order, k);
  std::sort(ordered.begin(), ordered.end());
  std::vector<std::string> out;
  for (auto& [o, k] : ordered) out.push_back(std::move(k));
  return out;
}

}  // namespace stab
