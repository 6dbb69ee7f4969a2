#pragma once

#include <stdexcept>
#include <string>

namespace gridopt {

enum class Errc {
  io_error,
  missing_section,
  ragged_matrix,
  token_error,
  no_reference_bus,
  dangling_endpoint,
  unsupported_cost_model,
  invalid_impedance,
  bounds_crossed,
  foreign_variable,
  unsupported_on_off_form,
  option_error,
  internal_error,
};

const char* errc_name(Errc code) noexcept;

/// Error type thrown by every module; carries a machine-readable code and a
/// human-readable message with file/line or component context.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg),
        code_(code),
        message_(msg) {}

  Errc code() const noexcept { return code_; }
  /// The message without the code-name prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace gridopt
