#pragma once

#include <stdexcept>
#include <string>

namespace clipvrg {

enum class Errc {
  invalid_argument,
  precondition_violation,
  numerical_failure,
  invalid_state,
  attack_output_invalid,
  not_strongly_convex,
  not_fittable,
  parse_error,
  io_error,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::precondition_violation: return "precondition-violation";
    case Errc::numerical_failure: return "numerical-failure";
    case Errc::invalid_state: return "invalid-state";
    case Errc::attack_output_invalid: return "attack-output-invalid";
    case Errc::not_strongly_convex: return "not-strongly-convex";
    case Errc::not_fittable: return "not-fittable";
    case Errc::parse_error: return "parse-error";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace clipvrg
