#pragma once

#include <stdexcept>
#include <string>

namespace svv {

// Malformed or inconsistent experiment configuration (CLI exit code 2).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A model assumption is violated (e.g. step condition, sandwich geometry);
// the computation is well-posed only when these hold (CLI exit code 3).
class assumption_error : public std::runtime_error {
 public:
  explicit assumption_error(const std::string& what) : std::runtime_error(what) {}
};

// A numeric procedure failed at runtime (degenerate bracket, singular solve,
// zero denominator); inputs were plausible but the computation broke down
// (CLI exit code 4).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace svv
