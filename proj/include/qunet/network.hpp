#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qunet/qudit_core.hpp"

/// Parties, the classical message bus and the step executor.
///
/// A protocol is a list of steps owned by parties.  Measurement results are
/// private to the measuring party until a send step delivers them; the
/// executor refuses any read of a result the acting party does not hold.
namespace qunet {

enum class Role { sender, receiver };

struct PartyId {
  Role role = Role::sender;
  std::size_t index = 1;

  friend auto operator<=>(const PartyId&, const PartyId&) = default;
};

/// "Bob<i>" for senders, "Alice<i>" for receivers.
std::string to_string(const PartyId& p);

struct Payload {
  enum class Kind { bell, projector } kind = Kind::bell;
  std::size_t m = 0;
  std::size_t n = 0;  // bell only

  friend bool operator==(const Payload&, const Payload&) = default;
};

struct ClassicalMessage {
  PartyId from;
  std::vector<PartyId> to;
  std::size_t round = 0;
  Payload payload;

  friend bool operator==(const ClassicalMessage&, const ClassicalMessage&) = default;
};

/// Append-only message log; rounds strictly increase.
class Transcript {
 public:
  const std::vector<ClassicalMessage>& messages() const noexcept { return messages_; }
  std::size_t size() const noexcept { return messages_.size(); }
  bool empty() const noexcept { return messages_.empty(); }

  void append(ClassicalMessage message);

  friend bool operator==(const Transcript&, const Transcript&) = default;

 private:
  std::vector<ClassicalMessage> messages_;
};

Transcript deliver(Transcript transcript, ClassicalMessage message);

nlohmann::json to_json(const PartyId& p);
nlohmann::json to_json(const ClassicalMessage& m);
nlohmann::json to_json(const Transcript& t);
ClassicalMessage message_from_json(const nlohmann::json& j);

/// One message per line.
std::string to_jsonl(const Transcript& t);
Transcript transcript_from_jsonl(std::string_view text);

// ------------------------------------------------------------------- world

/// The joint state as a product of independent blocks.  Each site of a block
/// is a named leg; blocks are merged only when an operation spans them.
class World {
 public:
  struct Block {
    StateVector state;
    std::vector<std::string> legs;
  };

  World() = default;
  explicit World(std::size_t max_dimension) : max_dimension_(max_dimension) {}

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  std::size_t max_dimension() const noexcept { return max_dimension_; }
  bool has_leg(std::string_view leg) const;

  void add_block(StateVector state, std::vector<std::string> legs);
  /// Merges the blocks holding `legs` into one and returns its index together
  /// with the site position of each leg.
  std::size_t gather(std::span<const std::string> legs, std::vector<std::size_t>& sites);
  Block& block(std::size_t b) { return blocks_.at(b); }
  void replace_block(std::size_t b, StateVector state, std::vector<std::string> legs);
  void remove_block(std::size_t b);

  /// Every remaining block merged, legs permuted into `order`.
  StateVector joint_state(std::span<const std::string> order) const;

 private:
  std::vector<Block> blocks_;
  std::size_t max_dimension_ = kDefaultMaxDimension;
};

// ------------------------------------------------------------------- steps

enum class StepKind { prepare_input, local_unitary, bell_measure, projective_measure, send };
std::string_view to_string(StepKind k);

inline constexpr std::size_t kNoStep = std::numeric_limits<std::size_t>::max();

class StepContext;

struct Step {
  StepKind kind = StepKind::local_unitary;
  PartyId actor;
  std::string label;
  /// Measurement steps whose results this step uses.
  std::vector<std::size_t> reads;
  /// Program-order predecessors (same party or shared quantum data).
  std::vector<std::size_t> after;
  /// send: recipients and the measurement it forwards.
  std::vector<PartyId> recipients;
  std::size_t carries = kNoStep;
  /// Measurements: the measured legs (two for Bell, one for projectors).
  /// Bell measurements discard both legs; projective ones keep theirs.
  std::vector<std::string> legs;
  std::shared_ptr<const ProjectorFamily> projectors;
  /// bell_measure: local dimension d; the outcome index is m * d + n.
  std::size_t outcome_radix = 0;

  std::function<void(StepContext&)> apply;  // prepare_input, local_unitary

  bool is_measurement() const noexcept {
    return kind == StepKind::bell_measure || kind == StepKind::projective_measure;
  }
};

/// Deterministic topological order: among ready steps the lowest index runs
/// first.  A result read without a send that delivers it to the reader, a
/// dangling dependency or a cycle raises ConfigInvalid.
std::vector<std::size_t> schedule(const std::vector<Step>& steps);

/// Called for every local operator applied during execution.
struct ApplyEvent {
  const Step* step;
  const StateVector* before;
  std::vector<std::size_t> sites;
  const LocalOperator* op;
  const StateVector* after;
};
/// Called for every measurement branch taken during execution.
struct MeasureEvent {
  const Step* step;
  const StateVector* before;  // merged block the measurement acted on
  std::vector<std::size_t> sites;
  std::size_t outcome;
  double probability;
  const StateVector* after;  // the same block afterwards
};

class StepContext {
 public:
  World& world() { return *world_; }
  const Step& step() const { return *step_; }

  /// Result of measurement step `id`; raises AccessViolation unless the step
  /// declared the read and the acting party holds the result.
  std::size_t result(std::size_t id) const;

  void apply(std::span<const std::string> legs, const LocalOperator& op);
  void apply(std::initializer_list<std::string> legs, const LocalOperator& op);

 private:
  friend class Executor;
  World* world_ = nullptr;
  const Step* step_ = nullptr;
  const std::vector<std::size_t>* results_ = nullptr;
  const char* knows_ = nullptr;  // the actor's row of the knowledge table
  bool audit_ = true;
  const std::function<void(const ApplyEvent&)>* on_apply_ = nullptr;
  std::vector<std::size_t>* sites_ = nullptr;  // scratch owned by the executor
};

struct Leaf {
  std::vector<std::size_t> outcomes;  // one per measurement, in schedule order
  double probability = 1.0;
  World world;
  Transcript transcript;
};

struct ExecutionOptions {
  enum class Kind { enumerate, sample, branch } kind = Kind::enumerate;
  Rng* rng = nullptr;                 // sample
  std::vector<std::size_t> forced;    // branch: one outcome per measurement
  bool audit = true;
  bool record_transcript = true;      // ignored (off) in enumerate mode
  std::function<void(const ApplyEvent&)> on_apply;
  std::function<void(const MeasureEvent&)> on_measure;
};

/// Runs `steps` in `order` from `initial`, calling `on_leaf` once per
/// completed trajectory (every nonzero-probability branch in enumerate mode,
/// exactly one otherwise).
class Executor {
 public:
  Executor(const std::vector<Step>& steps, std::vector<std::size_t> order, ExecutionOptions options);

  void run(World initial, const std::function<void(Leaf&&)>& on_leaf);

  std::size_t measurement_count() const noexcept { return measurements_; }

 private:
  struct State {
    World world;
    std::vector<std::size_t> results;
    std::vector<char> knows;  // [party * steps + step]
    std::vector<std::size_t> outcomes;
    double probability = 1.0;
    Transcript transcript;
  };

  void run_from(std::size_t pos, State state, const std::function<void(Leaf&&)>& on_leaf);
  void measure(std::size_t pos, State state, const std::function<void(Leaf&&)>& on_leaf);
  std::size_t party_slot(const PartyId& p) const;

  const std::vector<Step>& steps_;
  std::vector<std::size_t> order_;
  ExecutionOptions options_;
  std::vector<PartyId> parties_;
  std::size_t measurements_ = 0;
  std::vector<std::size_t> scratch_sites_;
};

}  // namespace qunet
