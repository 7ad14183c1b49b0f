#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qunet/gates.hpp"
#include "qunet/network.hpp"
#include "qunet/qudit_core.hpp"

namespace qunet {

enum class ProtocolKind { many_to_one, one_to_many, many_to_many, two_way };

/// "many-to-one", "one-to-many", "many-to-many", "two-way".
std::string_view to_string(ProtocolKind k);
/// Accepts the names above with '-' or '_'.
ProtocolKind parse_protocol_kind(std::string_view name);

struct ExecutionMode {
  enum class Kind { enumerate, sample, branch } kind = Kind::enumerate;
  /// branch: one outcome per measurement in schedule order.  Bell outcomes
  /// are flat indices m * d + n, projector outcomes their family index.
  std::vector<std::size_t> outcomes;

  static ExecutionMode enumerate() { return {}; }
  static ExecutionMode sample() { return {Kind::sample, {}}; }
  static ExecutionMode branch(std::vector<std::size_t> o) { return {Kind::branch, std::move(o)}; }

  friend bool operator==(const ExecutionMode&, const ExecutionMode&) = default;
};

/// "enumerate", "sample" or "branch=o1,o2,...".
std::string to_string(const ExecutionMode& m);
ExecutionMode parse_mode(std::string_view text);

struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::many_to_one;
  /// Senders' digits; for two_way (d_1, d_2) = (Bob's qudit, Alice's qudit).
  std::vector<std::size_t> dims;
  /// many_to_many receivers' digits; empty means the same as `dims`.
  std::vector<std::size_t> recv_dims;
  /// Explicit inputs, one per sender (two_way: Bob's, then Alice's).  When
  /// empty they are drawn from `seed`.
  std::vector<StateVector> inputs;
  std::optional<std::uint64_t> seed;
  ExecutionMode mode;
  std::size_t max_dimension = kDefaultMaxDimension;
  gates::PhaseConvention convention = gates::kResolvedConvention;
  bool audit = true;
};

/// Raises ConfigInvalid (or BadDimension / CapacityExceeded from SiteSpec).
void validate(const ProtocolConfig& config);
SiteSpec sender_spec(const ProtocolConfig& config);
SiteSpec receiver_spec(const ProtocolConfig& config);
/// Single-site specs of the inputs, in config order.
std::vector<SiteSpec> input_specs(const ProtocolConfig& config);
/// The config's explicit inputs, or fresh random ones drawn from `rng`.
std::vector<StateVector> resolve_inputs(const ProtocolConfig& config, Rng& rng);

/// sum over digit tuples of prod_i a^(i)_{k_i} |sum_i k_i p_i>, as one qudit.
StateVector expected_encoded_state(std::span<const StateVector> inputs, const SiteSpec& spec);

struct ResourceUsage {
  std::size_t shared_qudits = 0;  // legs of the initial entangled resource
  std::size_t qudit_dim = 0;
  std::size_t xor_ancillas = 0;   // legs grown locally from the resource
};

struct ProtocolPlan {
  std::vector<Step> steps;
  std::vector<std::size_t> order;
  World initial;
  std::vector<std::string> receiver_legs;
  std::vector<PartyId> receivers;  // owner of each receiver leg
  ResourceUsage resources;
  /// Target state over receiver_legs, and each receiver's own target when the
  /// receivers' digits match the senders'.
  std::vector<Complex> expected_joint;
  std::vector<std::vector<Complex>> expected_each;
};

ProtocolPlan build_plan(const ProtocolConfig& config, std::span<const StateVector> inputs);

struct BranchRecord {
  std::vector<std::size_t> outcome;
  double probability = 0.0;
  double fidelity = 0.0;
  std::vector<double> receiver_fidelities;
  std::optional<StateVector> final_state;  // not kept in enumerate mode
};

struct ProtocolReport {
  ProtocolConfig config;  // with inputs resolved
  std::vector<std::string> receiver_legs;
  std::vector<PartyId> receivers;
  ResourceUsage resources;
  std::size_t measurement_count = 0;
  Transcript transcript;  // single-trajectory modes only
  std::vector<BranchRecord> branches;
  double min_fidelity = 1.0;
  double probability_sum = 0.0;
};

struct RunHooks {
  std::function<void(const ApplyEvent&)> on_apply;
  std::function<void(const MeasureEvent&)> on_measure;
};

/// Enumerate mode refuses plans with more outcome tuples than this (BranchExplosion).
inline constexpr std::size_t kMaxEnumeratedBranches = 1'000'000;

ProtocolReport run_protocol(const ProtocolConfig& config, const RunHooks& hooks = {});
ProtocolReport run_many_to_one(const ProtocolConfig& config);
ProtocolReport run_one_to_many(const ProtocolConfig& config);
ProtocolReport run_many_to_many(const ProtocolConfig& config);
ProtocolReport run_two_way_channel(const ProtocolConfig& config);

struct ReplayResult {
  std::vector<std::size_t> outcomes;
  StateVector final_state;
  double fidelity = 0.0;
};

/// Re-runs `config` with every measurement forced to the outcome recorded in
/// `transcript`.  A transcript that does not fit the config (wrong length,
/// senders, rounds or an outcome that is impossible) raises TranscriptMismatch.
ReplayResult replay(const Transcript& transcript, const ProtocolConfig& config);

}  // namespace qunet
