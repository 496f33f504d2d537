#pragma once

#include <stdexcept>
#include <string>

#include "g3d/config.hpp"

G3D_NAMESPACE_BEGIN

enum class ErrorCode {
  kInvalidArgument,
  kResourceLimit,
  kNonFinite,
  kShapeMismatch,
  kIo,
  kBadMagic,
  kTruncated,
  kVersionMismatch,
  kSizeMismatch,
  kMissingFile,
  kConfig,
  kProvider,
  kDivergence,
  kNotOnTape,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

G3D_NAMESPACE_END
