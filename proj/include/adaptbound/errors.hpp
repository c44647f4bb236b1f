#pragma once

#include <stdexcept>
#include <string>

namespace adaptbound {

// A caller-supplied value violates an operation's precondition. The message
// names the violated condition (e.g. "d >= m").
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A stochastic model produced an outcome outside its declared range.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw PreconditionError(what);
}

}  // namespace adaptbound
