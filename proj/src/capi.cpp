#include "qunet/qunet.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "qunet/error.hpp"
#include "qunet/oracle.hpp"
#include "qunet/protocols.hpp"
#include "qunet/report.hpp"
#include "qunet/state_io.hpp"

struct qunet_config {
  qunet::ProtocolConfig config;
};

struct qunet_report {
  qunet::ProtocolReport report;
};

namespace {

thread_local std::string last_error;

qunet_status to_status(qunet::ErrorCode code) {
  using qunet::ErrorCode;
  switch (code) {
    case ErrorCode::dimension_mismatch: return QUNET_ERR_DIMENSION_MISMATCH;
    case ErrorCode::not_normalizable: return QUNET_ERR_NOT_NORMALIZABLE;
    case ErrorCode::digit_out_of_range: return QUNET_ERR_DIGIT_OUT_OF_RANGE;
    case ErrorCode::index_out_of_range: return QUNET_ERR_INDEX_OUT_OF_RANGE;
    case ErrorCode::capacity_exceeded: return QUNET_ERR_CAPACITY_EXCEEDED;
    case ErrorCode::non_unitary: return QUNET_ERR_NON_UNITARY;
    case ErrorCode::incomplete_projector_family: return QUNET_ERR_INCOMPLETE_PROJECTOR_FAMILY;
    case ErrorCode::zero_probability_branch: return QUNET_ERR_ZERO_PROBABILITY_BRANCH;
    case ErrorCode::bad_dimension: return QUNET_ERR_BAD_DIMENSION;
    case ErrorCode::bad_outcome: return QUNET_ERR_BAD_OUTCOME;
    case ErrorCode::bad_sender_index: return QUNET_ERR_BAD_SENDER_INDEX;
    case ErrorCode::bad_receiver_index: return QUNET_ERR_BAD_RECEIVER_INDEX;
    case ErrorCode::config_invalid: return QUNET_ERR_CONFIG_INVALID;
    case ErrorCode::round_regression: return QUNET_ERR_ROUND_REGRESSION;
    case ErrorCode::transcript_mismatch: return QUNET_ERR_TRANSCRIPT_MISMATCH;
    case ErrorCode::access_violation: return QUNET_ERR_ACCESS_VIOLATION;
    case ErrorCode::branch_explosion: return QUNET_ERR_BRANCH_EXPLOSION;
    case ErrorCode::no_consistent_convention: return QUNET_ERR_NO_CONSISTENT_CONVENTION;
    case ErrorCode::ambiguous_convention: return QUNET_ERR_AMBIGUOUS_CONVENTION;
    case ErrorCode::parse_error: return QUNET_ERR_PARSE;
    case ErrorCode::io_error: return QUNET_ERR_IO;
  }
  return QUNET_ERR_INTERNAL;
}

/// Runs `body`, translating exceptions into a status and the thread's last error.
template <typename F>
qunet_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return QUNET_OK;
  } catch (const qunet::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return QUNET_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return QUNET_ERR_CAPACITY_EXCEEDED;
  } catch (const std::exception& e) {
    last_error = e.what();
    return QUNET_ERR_INTERNAL;
  }
}

qunet_status null_argument(const char* what) {
  last_error = std::string(what) + " is null";
  return QUNET_ERR_NULL_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

qunet::ProtocolKind kind_of(qunet_protocol p) {
  switch (p) {
    case QUNET_MANY_TO_ONE: return qunet::ProtocolKind::many_to_one;
    case QUNET_ONE_TO_MANY: return qunet::ProtocolKind::one_to_many;
    case QUNET_MANY_TO_MANY: return qunet::ProtocolKind::many_to_many;
    case QUNET_TWO_WAY: return qunet::ProtocolKind::two_way;
  }
  qunet::fail(qunet::ErrorCode::config_invalid, "unknown protocol");
}

std::vector<std::vector<std::size_t>> parse_matrix(const std::string& text) {
  std::vector<std::vector<std::size_t>> out;
  std::stringstream rows(text);
  std::string row;
  while (std::getline(rows, row, ';')) {
    std::vector<std::size_t> dims;
    std::stringstream items(row);
    std::string item;
    while (std::getline(items, item, ',')) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
      if (item.empty() || *end != '\0' || item[0] == '-') {
        qunet::fail(qunet::ErrorCode::config_invalid, "bad dimension '" + item + "' in matrix '" + text + "'");
      }
      dims.push_back(static_cast<std::size_t>(v));
    }
    if (dims.empty()) qunet::fail(qunet::ErrorCode::config_invalid, "empty entry in matrix '" + text + "'");
    out.push_back(std::move(dims));
  }
  if (out.empty()) qunet::fail(qunet::ErrorCode::config_invalid, "empty dimension matrix");
  return out;
}

}  // namespace

extern "C" {

const char* qunet_last_error(void) { return last_error.c_str(); }

const char* qunet_status_string(qunet_status status) {
  switch (status) {
    case QUNET_OK: return "ok";
    case QUNET_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case QUNET_ERR_NOT_NORMALIZABLE: return "NotNormalizable";
    case QUNET_ERR_DIGIT_OUT_OF_RANGE: return "DigitOutOfRange";
    case QUNET_ERR_INDEX_OUT_OF_RANGE: return "IndexOutOfRange";
    case QUNET_ERR_CAPACITY_EXCEEDED: return "CapacityExceeded";
    case QUNET_ERR_NON_UNITARY: return "NonUnitary";
    case QUNET_ERR_INCOMPLETE_PROJECTOR_FAMILY: return "IncompleteProjectorFamily";
    case QUNET_ERR_ZERO_PROBABILITY_BRANCH: return "ZeroProbabilityBranch";
    case QUNET_ERR_BAD_DIMENSION: return "BadDimension";
    case QUNET_ERR_BAD_OUTCOME: return "BadOutcome";
    case QUNET_ERR_BAD_SENDER_INDEX: return "BadSenderIndex";
    case QUNET_ERR_BAD_RECEIVER_INDEX: return "BadReceiverIndex";
    case QUNET_ERR_CONFIG_INVALID: return "ConfigInvalid";
    case QUNET_ERR_ROUND_REGRESSION: return "RoundRegression";
    case QUNET_ERR_TRANSCRIPT_MISMATCH: return "TranscriptMismatch";
    case QUNET_ERR_ACCESS_VIOLATION: return "AccessViolation";
    case QUNET_ERR_BRANCH_EXPLOSION: return "BranchExplosion";
    case QUNET_ERR_NO_CONSISTENT_CONVENTION: return "NoConsistentConvention";
    case QUNET_ERR_AMBIGUOUS_CONVENTION: return "AmbiguousConvention";
    case QUNET_ERR_PARSE: return "ParseError";
    case QUNET_ERR_IO: return "IoError";
    case QUNET_ERR_NULL_ARGUMENT: return "NullArgument";
    case QUNET_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

void qunet_string_free(char* s) { std::free(s); }

qunet_status qunet_config_create(qunet_protocol protocol, qunet_config** out) {
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<qunet_config>();
    c->config.kind = kind_of(protocol);
    *out = c.release();
  });
}

qunet_status qunet_config_create_named(const char* protocol, qunet_config** out) {
  if (out == nullptr) return null_argument("out");
  if (protocol == nullptr) return null_argument("protocol");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<qunet_config>();
    c->config.kind = qunet::parse_protocol_kind(protocol);
    *out = c.release();
  });
}

void qunet_config_destroy(qunet_config* config) { delete config; }

qunet_status qunet_config_set_dims(qunet_config* config, const size_t* dims, size_t count) {
  if (config == nullptr) return null_argument("config");
  if (dims == nullptr && count > 0) return null_argument("dims");
  return guarded([&] { config->config.dims.assign(dims, dims + count); });
}

qunet_status qunet_config_set_recv_dims(qunet_config* config, const size_t* dims, size_t count) {
  if (config == nullptr) return null_argument("config");
  if (dims == nullptr && count > 0) return null_argument("dims");
  return guarded([&] { config->config.recv_dims.assign(dims, dims + count); });
}

qunet_status qunet_config_set_seed(qunet_config* config, uint64_t seed) {
  if (config == nullptr) return null_argument("config");
  return guarded([&] { config->config.seed = seed; });
}

qunet_status qunet_config_set_mode(qunet_config* config, const char* mode) {
  if (config == nullptr) return null_argument("config");
  if (mode == nullptr) return null_argument("mode");
  return guarded([&] { config->config.mode = qunet::parse_mode(mode); });
}

qunet_status qunet_config_set_max_dimension(qunet_config* config, size_t max_dimension) {
  if (config == nullptr) return null_argument("config");
  return guarded([&] {
    if (max_dimension < 2) qunet::fail(qunet::ErrorCode::config_invalid, "capacity must be at least 2");
    config->config.max_dimension = max_dimension;
  });
}

qunet_status qunet_config_add_input(qunet_config* config, const double* re_im, size_t dim) {
  if (config == nullptr) return null_argument("config");
  if (re_im == nullptr) return null_argument("re_im");
  return guarded([&] {
    std::vector<qunet::Complex> amps(dim);
    for (std::size_t i = 0; i < dim; ++i) amps[i] = {re_im[2 * i], re_im[2 * i + 1]};
    config->config.inputs.push_back(qunet::make_state(qunet::SiteSpec{dim}, std::move(amps)));
  });
}

qunet_status qunet_config_load_inputs(qunet_config* config, const char* path) {
  if (config == nullptr) return null_argument("config");
  if (path == nullptr) return null_argument("path");
  return guarded([&] { config->config.inputs = qunet::parse_states(qunet::read_text_file(path)); });
}

qunet_status qunet_run(const qunet_config* config, qunet_report** out) {
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  if (config == nullptr) return null_argument("config");
  return guarded([&] {
    auto r = std::make_unique<qunet_report>();
    r->report = qunet::run_protocol(config->config);
    *out = r.release();
  });
}

void qunet_report_destroy(qunet_report* report) { delete report; }

size_t qunet_report_branch_count(const qunet_report* report) { return report ? report->report.branches.size() : 0; }

size_t qunet_report_measurement_count(const qunet_report* report) {
  return report ? report->report.measurement_count : 0;
}

double qunet_report_min_fidelity(const qunet_report* report) { return report ? report->report.min_fidelity : 0.0; }

double qunet_report_probability_sum(const qunet_report* report) {
  return report ? report->report.probability_sum : 0.0;
}

qunet_status qunet_report_branch(const qunet_report* report, size_t index, double* probability, double* fidelity) {
  if (report == nullptr) return null_argument("report");
  return guarded([&] {
    if (index >= report->report.branches.size()) {
      qunet::fail(qunet::ErrorCode::index_out_of_range, "branch " + std::to_string(index) + " of " +
                                                            std::to_string(report->report.branches.size()));
    }
    const auto& b = report->report.branches[index];
    if (probability) *probability = b.probability;
    if (fidelity) *fidelity = b.fidelity;
  });
}

qunet_status qunet_report_to_json(const qunet_report* report, char** out) {
  if (report == nullptr) return null_argument("report");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = copy_string(qunet::report_to_string(report->report)); });
}

qunet_status qunet_report_transcript(const qunet_report* report, char** out) {
  if (report == nullptr) return null_argument("report");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = copy_string(qunet::to_jsonl(report->report.transcript)); });
}

qunet_status qunet_verify(const char* dims_matrix, uint64_t seed, int inject_fault, char** summary_json, int* passed) {
  if (summary_json == nullptr) return null_argument("summary_json");
  if (passed == nullptr) return null_argument("passed");
  *summary_json = nullptr;
  *passed = 0;
  return guarded([&] {
    qunet::oracle::VerifyOptions opt;
    if (dims_matrix != nullptr) opt.dims_matrix = parse_matrix(dims_matrix);
    opt.seed = seed;
    opt.inject_fault = inject_fault != 0;
    const qunet::oracle::VerifySummary s = qunet::oracle::verify_suite(opt);
    *summary_json = copy_string(s.to_json().dump(2) + "\n");
    *passed = s.passed() ? 1 : 0;
  });
}

qunet_status qunet_verify_replay(const qunet_config* config, const char* transcript_jsonl, char** summary_json,
                                 int* passed) {
  if (config == nullptr) return null_argument("config");
  if (transcript_jsonl == nullptr) return null_argument("transcript_jsonl");
  if (summary_json == nullptr) return null_argument("summary_json");
  if (passed == nullptr) return null_argument("passed");
  *summary_json = nullptr;
  *passed = 0;
  return guarded([&] {
    const qunet::Transcript t = qunet::transcript_from_jsonl(transcript_jsonl);
    const qunet::ReplayResult first = qunet::replay(t, config->config);
    const qunet::ReplayResult second = qunet::replay(t, config->config);
    const double deviation = qunet::max_amplitude_difference(first.final_state, second.final_state);
    const bool ok = deviation <= 1e-12 && first.outcomes == second.outcomes &&
                    first.fidelity >= 1.0 - qunet::oracle::kFidelityTolerance;
    nlohmann::json j{{"passed", ok},
                     {"messages", t.size()},
                     {"outcomes", first.outcomes},
                     {"fidelity", first.fidelity},
                     {"max_deviation", deviation},
                     {"final_state", qunet::to_json(first.final_state)}};
    *summary_json = copy_string(j.dump(2) + "\n");
    *passed = ok ? 1 : 0;
  });
}

qunet_status qunet_pin_phases(char** log) {
  if (log == nullptr) return null_argument("log");
  *log = nullptr;
  return guarded([&] {
    const qunet::oracle::PinResult r = qunet::oracle::pin_phases(qunet::oracle::default_pin_cases());
    std::string text;
    for (const std::string& line : r.log) text += line + "\n";
    text += "resolved: " + qunet::gates::to_string(r.convention) + "\n";
    *log = copy_string(text);
  });
}

qunet_status qunet_bell_table(size_t d, char** out) {
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    if (d < 2 || d > 16) {
      qunet::fail(qunet::ErrorCode::bad_dimension, "Bell tables cover 2 <= d <= 16, got " + std::to_string(d));
    }
    std::vector<qunet::StateVector> states;
    std::vector<std::string> comments;
    for (std::size_t m = 0; m < d; ++m) {
      for (std::size_t n = 0; n < d; ++n) {
        states.push_back(qunet::gates::bell_state(d, {m, n}));
        comments.push_back("m=" + std::to_string(m) + " n=" + std::to_string(n));
      }
    }
    *out = copy_string(qunet::format_states(states, comments));
  });
}

}  // extern "C"
