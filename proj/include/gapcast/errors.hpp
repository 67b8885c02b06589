#pragma once

#include <stdexcept>
#include <string>

namespace gapcast {

/* Raised for malformed input data, infeasible estimation requests, and
   failed I/O. Every throw site attaches enough context (unit names, row
   numbers, bounds) for the message to stand on its own. */
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

}  // namespace gapcast
