#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace tonemap {

// Flat "key = value" text. '#' starts a comment; blank lines are ignored.
// Duplicate keys and lines without '=' raise ConfigError with the line number.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

double config_double(const std::string& key, const std::string& value);
int64_t config_int(const std::string& key, const std::string& value);
bool config_bool(const std::string& key, const std::string& value);

}  // namespace tonemap
