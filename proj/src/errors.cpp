#include "idealobs/errors.hpp"

namespace idealobs {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::BadHeader: return "bad-header";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::SizeMismatch: return "size-mismatch";
    case ErrorKind::VersionMismatch: return "version-mismatch";
    case ErrorKind::UnsupportedActivation: return "unsupported-activation";
    case ErrorKind::UnsupportedLayer: return "unsupported-layer";
    case ErrorKind::ChainStart: return "chain-start";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument: return 2;
    case ErrorKind::Io: return 3;
    case ErrorKind::BadMagic:
    case ErrorKind::Truncated:
    case ErrorKind::BadHeader:
    case ErrorKind::NonFinite: return 4;
    case ErrorKind::SizeMismatch:
    case ErrorKind::VersionMismatch:
    case ErrorKind::UnsupportedActivation:
    case ErrorKind::UnsupportedLayer: return 5;
    case ErrorKind::GridMismatch:
    case ErrorKind::DimensionMismatch: return 6;
    case ErrorKind::ChainStart:
    case ErrorKind::Evaluation: return 7;
  }
  return 1;
}

}  // namespace idealobs
