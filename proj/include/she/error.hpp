#pragma once

#include <stdexcept>
#include <string>

namespace she {

enum class Errc : int { ok = 0, validation = 1, numerical = 2, io = 3 };

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail_validation(const std::string& msg) { throw Error(Errc::validation, msg); }
[[noreturn]] inline void fail_numerical(const std::string& msg) { throw Error(Errc::numerical, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(Errc::io, msg); }

}  // namespace she
