#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qunet {

enum class ErrorCode {
  dimension_mismatch,
  not_normalizable,
  digit_out_of_range,
  index_out_of_range,
  capacity_exceeded,
  non_unitary,
  incomplete_projector_family,
  zero_probability_branch,
  bad_dimension,
  bad_outcome,
  bad_sender_index,
  bad_receiver_index,
  config_invalid,
  round_regression,
  transcript_mismatch,
  access_violation,
  branch_explosion,
  no_consistent_convention,
  ambiguous_convention,
  parse_error,
  io_error,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// C API and the CLI can map it onto a status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace qunet
