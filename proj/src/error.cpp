#include "dbsa/error.hpp"

namespace dbsa {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Capacity: return "capacity error";
    case ErrorCode::Configuration: return "configuration error";
    case ErrorCode::Schema: return "schema error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Shape: return "shape error";
    case ErrorCode::Structure: return "invalid geometry";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Format: return "format error";
    case ErrorCode::Internal: return "internal error";
  }
  return "unknown error";
}

}  // namespace dbsa
