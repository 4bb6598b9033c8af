#ifndef DRAIL_ERROR_HPP_
#define DRAIL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace drail {

enum class ErrorCode {
  kInvalidArgument,  // shape, range or precondition violation
  kNumeric,          // NaN / Inf encountered
  kFormat,           // bad magic, version or truncated file
  kIo,               // file could not be opened or written
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}
[[noreturn]] inline void throw_numeric(const std::string& what) {
  throw Error(ErrorCode::kNumeric, what);
}

}  // namespace drail

#endif  // DRAIL_ERROR_HPP_
