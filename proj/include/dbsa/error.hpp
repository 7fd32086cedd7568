#pragma once

#include <stdexcept>
#include <string>

namespace dbsa {

// Error categories. The numeric values are mirrored by dbsa_status in dbsa.h.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Domain = 2,         // coordinate or cell outside its valid range
  Capacity = 3,       // requested precision/resolution exceeds what the grid can hold
  Configuration = 4,  // incompatible structures or parameters
  Schema = 5,         // unknown attribute
  Parse = 6,
  Io = 7,
  Shape = 8,          // canvas dimension mismatch
  Structure = 9,      // invalid polygon
  Unsupported = 10,
  Format = 11,        // corrupt or foreign index file
  Internal = 99,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dbsa
