#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qunet/gates.hpp"
#include "qunet/protocols.hpp"
#include "qunet/qudit_core.hpp"

/// Brute-force checks that share nothing with the protocol executor but the
/// operators themselves: every leg of every party lives in one register from
/// the start and measurements go through validated projector families.  Bell
/// pairs are contracted out of the register once measured.
namespace qunet::oracle {

inline constexpr std::size_t kMaxBranches = 1'000'000;
inline constexpr std::size_t kMaxDenseDimension = 4096;
inline constexpr double kFidelityTolerance = 1e-9;

struct BranchRecord {
  std::vector<std::size_t> outcome;
  double probability = 0.0;
  double fidelity = 0.0;
  std::vector<double> receiver_fidelities;
};

/// Number of outcome tuples the protocol can produce.
std::size_t predicted_branch_count(const ProtocolConfig& config);

/// Every nonzero-probability branch in outcome order.  Inputs are resolved
/// exactly as run_protocol resolves them.  BranchExplosion above kMaxBranches.
std::vector<BranchRecord> enumerate_branches(const ProtocolConfig& config);

/// Walks branches until `visit` returns false.
void visit_branches(const ProtocolConfig& config, const std::function<bool(const BranchRecord&)>& visit);

// ------------------------------------------------------------ phase pinning

struct PinCase {
  ProtocolKind kind;
  std::vector<std::size_t> dims;
};

/// many-to-one and one-to-many over (2,2), (2,3), (3,2).
std::vector<PinCase> default_pin_cases();

struct PinResult {
  gates::PhaseConvention convention;
  std::vector<std::string> log;  // one line per candidate
};

/// The single candidate under which every branch of every case reaches
/// fidelity 1.  NoConsistentConvention if none survives, AmbiguousConvention
/// if several do.
PinResult pin_phases(std::span<const PinCase> cases, std::span<const gates::PhaseConvention> candidates,
                     std::uint64_t seed = 20240611);
PinResult pin_phases(std::span<const PinCase> cases);
PinResult pin_phases(ProtocolKind kind, const SiteSpec& spec);

// --------------------------------------------------------- dense crosscheck

struct SiteOperator {
  std::vector<std::size_t> sites;
  LocalOperator op;
};

/// Full-register matrix element of `op` embedded on `sites`.
Complex embedded_element(const SiteSpec& spec, std::span<const std::size_t> sites, const LocalOperator& op,
                         std::size_t row, std::size_t col);

/// Applies `op` through its full-register matrix.  CapacityExceeded above kMaxDenseDimension.
std::vector<Complex> dense_apply(const StateVector& state, std::span<const std::size_t> sites, const LocalOperator& op);

/// Runs `ops` through both the dense and the fast path; max |difference|
/// over every intermediate state.
double dense_crosscheck(const StateVector& state, std::span<const SiteOperator> ops);

struct CrosscheckReport {
  double max_deviation = 0.0;
  std::size_t checked = 0;   // operators and measurements compared
  std::size_t skipped = 0;   // blocks above kMaxDenseDimension
};

/// Replays one trajectory of `config` (sample or branch mode) and compares
/// every operator and measurement of the fast path against the dense path.
CrosscheckReport crosscheck_run(const ProtocolConfig& config);

// ------------------------------------------------------------------- verify

struct VerifyOptions {
  std::vector<std::vector<std::size_t>> dims_matrix{{2, 2}, {2, 3}, {3, 2}};
  std::uint64_t seed = 1;
  /// Runs the protocols with a wrong sender phase sign; verify must fail.
  bool inject_fault = false;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifySummary {
  std::vector<PropertyResult> properties;

  bool passed() const;
  /// Name of the first failing property, empty when all pass.
  std::string first_failure() const;
  nlohmann::json to_json() const;
};

VerifySummary verify_suite(const VerifyOptions& options);

}  // namespace qunet::oracle
