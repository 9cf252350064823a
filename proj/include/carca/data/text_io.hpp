#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

// Small helpers shared by the TSV readers.
namespace carca::data {

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline bool is_skippable_line(std::string_view line) {
  line = strip_cr(line);
  const auto first = line.find_first_not_of(" \t");
  return first == std::string_view::npos || line[first] == '#';
}

std::vector<std::string_view> split(std::string_view s, char sep);
std::optional<std::int64_t> parse_integer(std::string_view s);
std::optional<double> parse_real(std::string_view s);

}  // namespace carca::data
