#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <system_error>

namespace swarmfab {

// Fixed-point text with `decimals` digits. Values that round to zero print
// without a sign so byte-stable outputs do not flip on -0.0.
inline std::string fixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

// Shortest fixed-point text that parses back to exactly `v`.
inline std::string shortest_fixed(double v) {
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (ec != std::errc{}) return fixed(v, 17);
  return std::string(buf, end);
}

}  // namespace swarmfab
