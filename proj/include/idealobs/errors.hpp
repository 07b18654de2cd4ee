#pragma once

#include <stdexcept>
#include <string>

namespace idealobs {

/// Error classes surfaced by the library. The CLI maps each to its own exit code.
enum class ErrorKind {
  Io,
  BadMagic,
  Truncated,
  BadHeader,
  NonFinite,
  GridMismatch,
  DimensionMismatch,
  InvalidArgument,
  SizeMismatch,
  VersionMismatch,
  UnsupportedActivation,
  UnsupportedLayer,
  ChainStart,
  Evaluation,
  Config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit code for an error kind (always nonzero).
int exit_code(ErrorKind kind);

}  // namespace idealobs
