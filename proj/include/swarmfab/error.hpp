#pragma once

#include <stdexcept>
#include <string>

namespace swarmfab {

// Base for every error raised by the library. Each module derives its own
// type carrying a kind enum so callers can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swarmfab
