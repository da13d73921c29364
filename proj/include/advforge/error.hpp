// Error types shared by every module. ValidationError marks contract
// violations (bad shapes, bad arguments, malformed inputs); RuntimeError
// marks environment failures (I/O, corrupt artifacts). The CLI maps them to
// exit codes 1 and 2 respectively.
#pragma once

#include <stdexcept>
#include <string>

namespace advforge {

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace advforge
