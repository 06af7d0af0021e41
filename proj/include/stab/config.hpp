#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stab/errors.hpp"

namespace stab {

// Minimal key-value config: [section] headers, key = value lines, # comments.
// Values are numbers, bare words or double-quoted strings; quoting is only
// needed when a value contains spaces or '#'.
class ConfigFile {
public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile parse_file(const std::string& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_int(const std::string& section, const std::string& key,
               long fallback) const;
  std::uint64_t get_uint(const std::string& section, const std::string& key,
                         std::uint64_t fallback) const;

  // keys of one section, in file order
  std::vector<std::string> keys(const std::string& section) const;

private:
  struct Entry {
    std::string value;
    int order = 0;
  };
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace stab
