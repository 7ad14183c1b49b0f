#include "qunet/error.hpp"

namespace qunet {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::not_normalizable: return "NotNormalizable";
    case ErrorCode::digit_out_of_range: return "DigitOutOfRange";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::capacity_exceeded: return "CapacityExceeded";
    case ErrorCode::non_unitary: return "NonUnitary";
    case ErrorCode::incomplete_projector_family: return "IncompleteProjectorFamily";
    case ErrorCode::zero_probability_branch: return "ZeroProbabilityBranch";
    case ErrorCode::bad_dimension: return "BadDimension";
    case ErrorCode::bad_outcome: return "BadOutcome";
    case ErrorCode::bad_sender_index: return "BadSenderIndex";
    case ErrorCode::bad_receiver_index: return "BadReceiverIndex";
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::round_regression: return "RoundRegression";
    case ErrorCode::transcript_mismatch: return "TranscriptMismatch";
    case ErrorCode::access_violation: return "AccessViolation";
    case ErrorCode::branch_explosion: return "BranchExplosion";
    case ErrorCode::no_consistent_convention: return "NoConsistentConvention";
    case ErrorCode::ambiguous_convention: return "AmbiguousConvention";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace qunet
