#include "qunet/protocols.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <memory>
#include <numeric>
#include <tuple>

#include "qunet/error.hpp"

namespace qunet {

std::string_view to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::many_to_one: return "many-to-one";
    case ProtocolKind::one_to_many: return "one-to-many";
    case ProtocolKind::many_to_many: return "many-to-many";
    case ProtocolKind::two_way: return "two-way";
  }
  return "unknown";
}

ProtocolKind parse_protocol_kind(std::string_view name) {
  std::string norm(name);
  std::replace(norm.begin(), norm.end(), '_', '-');
  for (ProtocolKind k : {ProtocolKind::many_to_one, ProtocolKind::one_to_many, ProtocolKind::many_to_many,
                         ProtocolKind::two_way}) {
    if (norm == to_string(k)) return k;
  }
  fail(ErrorCode::config_invalid, "unknown protocol '" + std::string(name) + "'");
}

std::string to_string(const ExecutionMode& m) {
  switch (m.kind) {
    case ExecutionMode::Kind::enumerate: return "enumerate";
    case ExecutionMode::Kind::sample: return "sample";
    case ExecutionMode::Kind::branch: {
      std::string out = "branch=";
      for (std::size_t i = 0; i < m.outcomes.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(m.outcomes[i]);
      }
      return out;
    }
  }
  return "unknown";
}

ExecutionMode parse_mode(std::string_view text) {
  if (text == "enumerate") return ExecutionMode::enumerate();
  if (text == "sample") return ExecutionMode::sample();
  constexpr std::string_view prefix = "branch=";
  if (text.substr(0, prefix.size()) != prefix) fail(ErrorCode::config_invalid, "unknown mode '" + std::string(text) + "'");
  std::string_view rest = text.substr(prefix.size());
  // Parentheses and separators are accepted so "(0,1),2" reads like "0,1,2".
  std::vector<std::size_t> outcomes;
  std::size_t i = 0;
  while (i < rest.size()) {
    const char c = rest[i];
    if (c == '(' || c == ')' || c == ',' || c == ' ') {
      ++i;
      continue;
    }
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(rest.data() + i, rest.data() + rest.size(), value);
    if (ec != std::errc()) fail(ErrorCode::config_invalid, "bad branch tuple '" + std::string(rest) + "'");
    outcomes.push_back(value);
    i = static_cast<std::size_t>(ptr - rest.data());
  }
  if (outcomes.empty()) fail(ErrorCode::config_invalid, "empty branch tuple");
  return ExecutionMode::branch(std::move(outcomes));
}

// ------------------------------------------------------------ configuration

SiteSpec sender_spec(const ProtocolConfig& config) {
  if (config.dims.empty()) fail(ErrorCode::config_invalid, "no dimensions given");
  return SiteSpec(config.dims, config.max_dimension);
}

SiteSpec receiver_spec(const ProtocolConfig& config) {
  if (config.kind == ProtocolKind::many_to_many && !config.recv_dims.empty()) {
    return SiteSpec(config.recv_dims, config.max_dimension);
  }
  return sender_spec(config);
}

std::vector<SiteSpec> input_specs(const ProtocolConfig& config) {
  std::vector<SiteSpec> out;
  for (std::size_t d : config.dims) out.push_back(SiteSpec{d});
  return out;
}

void validate(const ProtocolConfig& config) {
  const SiteSpec f = sender_spec(config);
  if (config.kind == ProtocolKind::two_way && config.dims.size() != 2) {
    fail(ErrorCode::config_invalid, "two-way needs exactly two dimensions (Bob's, Alice's)");
  }
  if (!config.recv_dims.empty()) {
    if (config.kind != ProtocolKind::many_to_many) {
      fail(ErrorCode::config_invalid, "receiver dimensions only apply to many-to-many");
    }
    const SiteSpec r = receiver_spec(config);
    if (r.total() != f.total()) {
      fail(ErrorCode::config_invalid, "receiver dimensions multiply to " + std::to_string(r.total()) +
                                          ", senders' to " + std::to_string(f.total()));
    }
  }
  const auto specs = input_specs(config);
  if (!config.inputs.empty()) {
    if (config.inputs.size() != specs.size()) {
      fail(ErrorCode::config_invalid, "expected " + std::to_string(specs.size()) + " input states, got " +
                                          std::to_string(config.inputs.size()));
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (!(config.inputs[i].spec() == specs[i])) {
        fail(ErrorCode::config_invalid, "input " + std::to_string(i + 1) + " has the wrong dimension");
      }
    }
  } else if (!config.seed) {
    fail(ErrorCode::config_invalid, "give input states or a seed");
  }
  if (config.mode.kind == ExecutionMode::Kind::sample && !config.seed) {
    fail(ErrorCode::config_invalid, "sample mode needs a seed");
  }
}

std::vector<StateVector> resolve_inputs(const ProtocolConfig& config, Rng& rng) {
  if (!config.inputs.empty()) return config.inputs;
  std::vector<StateVector> out;
  for (const SiteSpec& s : input_specs(config)) out.push_back(random_state(s, rng));
  return out;
}

StateVector expected_encoded_state(std::span<const StateVector> inputs, const SiteSpec& spec) {
  if (inputs.size() != spec.sites()) fail(ErrorCode::dimension_mismatch, "one input per digit required");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].spec().sites() != 1 || inputs[i].size() != spec.dim(i)) {
      fail(ErrorCode::dimension_mismatch, "input " + std::to_string(i + 1) + " does not match its digit");
    }
  }
  std::vector<Complex> amps(spec.total());
  for (std::size_t k = 0; k < spec.total(); ++k) {
    Complex a = 1.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) a *= inputs[i][spec.digit(k, i)];
    amps[k] = a;
  }
  return StateVector::trusted(SiteSpec{spec.total()}, std::move(amps));
}

// --------------------------------------------------------------- plan build

namespace {

using gates::BellOutcome;

LocalOperator checked(LocalOperator op) {
  if (!op.is_unitary(1e-10)) fail(ErrorCode::non_unitary, "generated operator is not unitary within 1e-10");
  return op;
}

/// Outcome-dependent operators are rebuilt on every branch otherwise.
class OpCache {
 public:
  template <typename Make>
  const LocalOperator& get(int kind, std::size_t a, std::size_t b, std::size_t c, Make make) {
    const auto key = std::make_tuple(kind, a, b, c);
    auto it = ops_.find(key);
    if (it == ops_.end()) it = ops_.emplace(key, checked(make())).first;
    return it->second;
  }

 private:
  std::map<std::tuple<int, std::size_t, std::size_t, std::size_t>, LocalOperator> ops_;
};

enum OpKind { kBobCorrection, kAliceCorrection, kRelabel, kPeerPhase };

class PlanBuilder {
 public:
  /// Logical party -> physical party; the two-way channel merges roles.
  using Physical = std::function<PartyId(PartyId)>;

  explicit PlanBuilder(Physical physical) : physical_(std::move(physical)) {}

  std::size_t add(Step step) {
    step.actor = physical_(step.actor);
    std::vector<PartyId> to;
    for (const PartyId& r : step.recipients) {
      const PartyId p = physical_(r);
      if (p != step.actor && std::find(to.begin(), to.end(), p) == to.end()) to.push_back(p);
    }
    step.recipients = std::move(to);
    if (step.kind == StepKind::send && step.recipients.empty()) return kNoStep;
    const std::size_t id = steps_.size();
    auto it = last_.find(step.actor);
    if (it != last_.end()) step.after.push_back(it->second);
    last_[step.actor] = id;
    steps_.push_back(std::move(step));
    return id;
  }

  std::vector<Step> take() { return std::move(steps_); }

 private:
  Physical physical_;
  std::vector<Step> steps_;
  std::map<PartyId, std::size_t> last_;
};

PartyId bob(std::size_t i) { return {Role::sender, i}; }
PartyId alice(std::size_t i) { return {Role::receiver, i}; }

Step unitary(PartyId actor, std::string label, std::vector<std::size_t> reads, std::function<void(StepContext&)> f) {
  Step s;
  s.kind = StepKind::local_unitary;
  s.actor = actor;
  s.label = std::move(label);
  s.reads = std::move(reads);
  s.apply = std::move(f);
  return s;
}

Step prepare(PartyId actor, std::string label, StateVector state, std::string leg) {
  Step s;
  s.kind = StepKind::prepare_input;
  s.actor = actor;
  s.label = std::move(label);
  s.apply = [state = std::move(state), leg = std::move(leg)](StepContext& ctx) {
    ctx.world().add_block(state, {leg});
  };
  return s;
}

Step bell_step(PartyId actor, std::string label, std::string a, std::string b, std::size_t d) {
  Step s;
  s.kind = StepKind::bell_measure;
  s.actor = actor;
  s.label = std::move(label);
  s.legs = {std::move(a), std::move(b)};
  s.outcome_radix = d;
  return s;
}

Step send_step(PartyId actor, std::string label, std::size_t carries, std::vector<PartyId> to) {
  Step s;
  s.kind = StepKind::send;
  s.actor = actor;
  s.label = std::move(label);
  s.carries = carries;
  s.recipients = std::move(to);
  return s;
}

struct Context {
  gates::PhaseConvention conv;
  std::shared_ptr<OpCache> cache = std::make_shared<OpCache>();
};

/// Senders' half: every Bob spreads, corrects his leg for earlier Bobs'
/// results, Bell-measures and broadcasts; then the receivers undo the shifts
/// (the first receiver also the phases).
void add_senders(PlanBuilder& pb, const Context& cx, const SiteSpec& f, std::span<const StateVector> inputs,
                 const std::vector<std::string>& input_legs, const std::vector<std::string>& send_legs,
                 const std::vector<std::string>& recv_legs) {
  const std::size_t n = f.sites();
  const std::size_t d = f.total();
  std::vector<std::size_t> bells;
  std::vector<PartyId> receivers;
  for (std::size_t r = 0; r < recv_legs.size(); ++r) receivers.push_back(alice(r + 1));

  for (std::size_t i = 0; i < n; ++i) {
    const PartyId me = bob(i + 1);
    const std::string x = input_legs[i];
    const std::string leg = send_legs[i];
    pb.add(prepare(me, "prepare input " + std::to_string(i + 1), gates::embed_digit(f, i, inputs[i]), x));
    if (n > 1) {
      pb.add(unitary(me, "spread", {}, [x, op = checked(gates::spread_op(f, i))](StepContext& ctx) { ctx.apply({x}, op); }));
    }
    if (i > 0) {
      pb.add(unitary(me, "correct for earlier senders", bells, [=, prior = bells](StepContext& ctx) {
        for (std::size_t j = 0; j < prior.size(); ++j) {
          const std::size_t m = ctx.result(prior[j]) / d;
          ctx.apply({leg}, cx.cache->get(kBobCorrection, j, m, 0,
                                         [&] { return gates::bob_correction(f, j, m, cx.conv); }));
        }
      }));
    }
    const std::size_t b = pb.add(bell_step(me, "Bell measurement", x, leg, d));
    bells.push_back(b);
    std::vector<PartyId> to = receivers;
    for (std::size_t j = i + 1; j < n; ++j) to.push_back(bob(j + 1));
    pb.add(send_step(me, "broadcast Bell result", b, std::move(to)));
  }

  for (std::size_t r = 0; r < recv_legs.size(); ++r) {
    const std::string leg = recv_legs[r];
    if (r == 0) {
      pb.add(unitary(alice(1), "correct for every sender", bells, [=](StepContext& ctx) {
        for (std::size_t j = 0; j < bells.size(); ++j) {
          const std::size_t o = ctx.result(bells[j]);
          ctx.apply({leg}, cx.cache->get(kAliceCorrection, j, o, 0, [&] {
            return gates::alice_correction(f, j, gates::bell_from_index(d, o), cx.conv);
          }));
        }
      }));
    } else {
      pb.add(unitary(alice(r + 1), "undo sender shifts", bells, [=](StepContext& ctx) {
        for (std::size_t j = 0; j < bells.size(); ++j) {
          const std::size_t m = ctx.result(bells[j]) / d;
          ctx.apply({leg}, cx.cache->get(kBobCorrection, j, m, 0,
                                         [&] { return gates::bob_correction(f, j, m, cx.conv); }));
        }
      }));
    }
  }
}

/// Receivers' half: the legs hold sum_k c_k |k>^(x)M.  Each Alice in turn
/// spreads, projects out the complementary digits, relabels and broadcasts;
/// her peers cancel the phase her outcome left on their digits.
void add_receivers(PlanBuilder& pb, const Context& cx, const SiteSpec& f, const std::vector<std::string>& legs) {
  const std::size_t n = f.sites();
  if (n < 2) return;
  for (std::size_t i = 0; i < n; ++i) {
    const PartyId me = alice(i + 1);
    const std::string leg = legs[i];
    pb.add(unitary(me, "spread", {}, [leg, op = checked(gates::receiver_spread_op(f, i))](StepContext& ctx) {
      ctx.apply({leg}, op);
    }));
    Step measure;
    measure.kind = StepKind::projective_measure;
    measure.actor = me;
    measure.label = "projective measurement";
    measure.legs = {leg};
    measure.projectors = std::make_shared<const ProjectorFamily>(gates::receiver_projectors(f, i));
    const std::size_t p = pb.add(std::move(measure));
    pb.add(unitary(me, "relabel", {p}, [=](StepContext& ctx) {
      const std::size_t o = ctx.result(p);
      ctx.apply({leg}, cx.cache->get(kRelabel, i, o, 0, [&] { return gates::receiver_relabel(f, i, o); }));
    }));
    std::vector<PartyId> peers;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) peers.push_back(alice(j + 1));
    }
    pb.add(send_step(me, "broadcast projector result", p, peers));
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const std::string peer_leg = legs[j];
      const bool relabelled = j < i;
      pb.add(unitary(alice(j + 1), "cancel peer phase", {p}, [=](StepContext& ctx) {
        const std::size_t o = ctx.result(p);
        ctx.apply({peer_leg}, cx.cache->get(kPeerPhase, j * n + i, o, relabelled ? 1 : 0, [&] {
          return gates::receiver_phase_correction(f, j, i, o, relabelled, cx.conv);
        }));
      }));
    }
  }
}

std::vector<std::string> numbered(const std::string& prefix, std::size_t count, std::size_t first = 1) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(first + i));
  return out;
}

std::vector<Complex> padded(const StateVector& s, std::size_t d) {
  std::vector<Complex> v(d);
  std::copy(s.amplitudes().begin(), s.amplitudes().end(), v.begin());
  return v;
}

/// The receivers' target: the senders' encoded amplitudes read on the
/// receivers' digits, each digit held in its own d-level leg.
std::vector<Complex> spread_over_legs(const StateVector& encoded, const SiteSpec& recv) {
  const std::size_t d = recv.total();
  std::size_t joint = 1;
  for (std::size_t i = 0; i < recv.sites(); ++i) joint *= d;
  std::vector<Complex> out(joint);
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t idx = 0;
    std::size_t place = 1;
    for (std::size_t i = 0; i < recv.sites(); ++i) {
      idx += recv.digit(k, i) * place;
      place *= d;
    }
    out[idx] = encoded[k];
  }
  return out;
}

World world_with(StateVector state, std::vector<std::string> legs, std::size_t max_dimension) {
  World w(max_dimension);
  w.add_block(std::move(state), std::move(legs));
  return w;
}

}  // namespace

ProtocolPlan build_plan(const ProtocolConfig& config, std::span<const StateVector> inputs) {
  validate(config);
  const SiteSpec f = sender_spec(config);
  const SiteSpec fr = receiver_spec(config);
  const std::size_t d = f.total();
  const std::size_t cap = config.max_dimension;
  Context cx{config.convention};
  ProtocolPlan plan;
  plan.resources.qudit_dim = d;
  PlanBuilder::Physical identity = [](PartyId p) { return p; };

  switch (config.kind) {
    case ProtocolKind::many_to_one: {
      const std::size_t n = f.sites();
      auto legs = numbered("R", n);
      legs.push_back("A");
      plan.initial = world_with(gates::resource_state(d, n + 1, cap), legs, cap);
      PlanBuilder pb(identity);
      add_senders(pb, cx, f, inputs, numbered("X", n), numbered("R", n), {"A"});
      plan.steps = pb.take();
      plan.receiver_legs = {"A"};
      plan.receivers = {alice(1)};
      const StateVector e = expected_encoded_state(inputs, f);
      plan.expected_joint.assign(e.amplitudes().begin(), e.amplitudes().end());
      plan.expected_each = {plan.expected_joint};
      plan.resources.shared_qudits = n + 1;
      break;
    }
    case ProtocolKind::one_to_many: {
      const std::size_t n = f.sites();
      const auto recv = numbered("A", n);
      std::vector<std::string> legs{"R0"};
      legs.insert(legs.end(), recv.begin(), recv.end());
      plan.initial = world_with(gates::resource_state(d, n + 1, cap), legs, cap);
      PlanBuilder pb(identity);
      pb.add(prepare(bob(1), "prepare joint encoding", expected_encoded_state(inputs, f), "X"));
      const std::size_t b = pb.add(bell_step(bob(1), "Bell measurement", "X", "R0", d));
      std::vector<PartyId> all;
      for (std::size_t i = 0; i < n; ++i) all.push_back(alice(i + 1));
      pb.add(send_step(bob(1), "broadcast Bell result", b, all));
      for (std::size_t i = 0; i < n; ++i) {
        const std::string leg = recv[i];
        if (i == 0) {
          pb.add(unitary(alice(1), "correct for the sender", {b}, [=](StepContext& ctx) {
            const std::size_t o = ctx.result(b);
            ctx.apply({leg}, cx.cache->get(kAliceCorrection, 0, o, 0, [&] {
              return gates::alice_correction(f, 0, gates::bell_from_index(d, o), cx.conv);
            }));
          }));
        } else {
          pb.add(unitary(alice(i + 1), "undo sender shift", {b}, [=](StepContext& ctx) {
            const std::size_t m = ctx.result(b) / d;
            ctx.apply({leg}, cx.cache->get(kBobCorrection, 0, m, 0,
                                           [&] { return gates::bob_correction(f, 0, m, cx.conv); }));
          }));
        }
      }
      add_receivers(pb, cx, f, recv);
      plan.steps = pb.take();
      plan.receiver_legs = recv;
      for (std::size_t i = 0; i < n; ++i) plan.receivers.push_back(alice(i + 1));
      plan.expected_joint = spread_over_legs(expected_encoded_state(inputs, f), f);
      for (const StateVector& s : inputs) plan.expected_each.push_back(padded(s, d));
      plan.resources.shared_qudits = n + 1;
      break;
    }
    case ProtocolKind::many_to_many: {
      const std::size_t ns = f.sites();
      const std::size_t nr = fr.sites();
      const auto send = numbered("R", ns);
      const auto recv = numbered("A", nr);
      std::vector<std::string> legs = send;
      legs.insert(legs.end(), recv.begin(), recv.end());
      plan.initial = world_with(gates::resource_state(d, ns + nr, cap), legs, cap);
      PlanBuilder pb(identity);
      add_senders(pb, cx, f, inputs, numbered("X", ns), send, recv);
      add_receivers(pb, cx, fr, recv);
      plan.steps = pb.take();
      plan.receiver_legs = recv;
      for (std::size_t i = 0; i < nr; ++i) plan.receivers.push_back(alice(i + 1));
      plan.expected_joint = spread_over_legs(expected_encoded_state(inputs, f), fr);
      if (fr == f) {
        for (const StateVector& s : inputs) plan.expected_each.push_back(padded(s, d));
      }
      plan.resources.shared_qudits = ns + nr;
      break;
    }
    case ProtocolKind::two_way: {
      // Bob sends digit 0 and receives digit 1; Alice the reverse.  Logical
      // parties: Bob1 and Alice2 are Bob, Bob2 and Alice1 are Alice.
      const PartyId phys_bob = bob(1);
      const PartyId phys_alice = alice(1);
      PlanBuilder pb([=](PartyId p) {
        const bool is_bob = (p.role == Role::sender && p.index == 1) || (p.role == Role::receiver && p.index == 2);
        return is_bob ? phys_bob : phys_alice;
      });
      plan.initial = world_with(gates::resource_state(d, 2, cap), {"B", "A"}, cap);
      const StateVector zero = basis_state(SiteSpec{d}, {0});
      const LocalOperator cx_gate = gates::xor_gate(d);
      pb.add(prepare(bob(1), "prepare ancilla", zero, "B+"));
      pb.add(unitary(bob(1), "XOR onto ancilla", {}, [=](StepContext& ctx) { ctx.apply({"B", "B+"}, cx_gate); }));
      pb.add(prepare(bob(2), "prepare ancilla", zero, "A+"));
      pb.add(unitary(bob(2), "XOR onto ancilla", {}, [=](StepContext& ctx) { ctx.apply({"A", "A+"}, cx_gate); }));
      const std::vector<std::string> recv{"A+", "B+"};
      add_senders(pb, cx, f, inputs, {"XB", "XA"}, {"B", "A"}, recv);
      add_receivers(pb, cx, f, recv);
      plan.steps = pb.take();
      plan.receiver_legs = recv;
      plan.receivers = {phys_alice, phys_bob};
      plan.expected_joint = spread_over_legs(expected_encoded_state(inputs, f), f);
      for (const StateVector& s : inputs) plan.expected_each.push_back(padded(s, d));
      plan.resources.shared_qudits = 2;
      plan.resources.xor_ancillas = 2;
      break;
    }
  }
  plan.order = schedule(plan.steps);
  return plan;
}

// --------------------------------------------------------------------- run

namespace {

ExecutionOptions options_for(const ProtocolConfig& config, Rng& rng, const RunHooks& hooks) {
  ExecutionOptions opt;
  switch (config.mode.kind) {
    case ExecutionMode::Kind::enumerate: opt.kind = ExecutionOptions::Kind::enumerate; break;
    case ExecutionMode::Kind::sample:
      opt.kind = ExecutionOptions::Kind::sample;
      opt.rng = &rng;
      break;
    case ExecutionMode::Kind::branch:
      opt.kind = ExecutionOptions::Kind::branch;
      opt.forced = config.mode.outcomes;
      break;
  }
  opt.audit = config.audit;
  opt.on_apply = hooks.on_apply;
  opt.on_measure = hooks.on_measure;
  return opt;
}

double ray_fidelity(const StateVector& state, std::span<const std::size_t> sites, std::span<const Complex> ray) {
  return std::min(1.0, contract(state, sites, ray).weight);
}

struct Evaluation {
  double fidelity = 0.0;
  std::vector<double> each;
  std::optional<StateVector> merged;  // only when the world was not already one block in receiver order
  const StateVector* in_place = nullptr;

  const StateVector& joint() const { return merged ? *merged : *in_place; }
};

/// The returned evaluation may point into `world`.
Evaluation evaluate(const ProtocolPlan& plan, const World& world) {
  Evaluation ev;
  if (world.blocks().size() == 1 && world.blocks().front().legs == plan.receiver_legs) {
    ev.in_place = &world.blocks().front().state;
  } else {
    ev.merged = world.joint_state(plan.receiver_legs);
  }
  const StateVector& joint = ev.joint();
  if (joint.size() != plan.expected_joint.size()) fail(ErrorCode::dimension_mismatch, "unexpected final register");
  Complex overlap{};
  for (std::size_t j = 0; j < joint.size(); ++j) overlap += std::conj(plan.expected_joint[j]) * joint[j];
  ev.fidelity = std::min(1.0, std::norm(overlap));
  if (plan.receiver_legs.size() == 1) {
    ev.each.push_back(ev.fidelity);
    return ev;
  }
  for (std::size_t i = 0; i < plan.expected_each.size(); ++i) {
    const std::size_t site[1] = {i};
    ev.each.push_back(ray_fidelity(joint, site, plan.expected_each[i]));
  }
  return ev;
}

}  // namespace

ProtocolReport run_protocol(const ProtocolConfig& config, const RunHooks& hooks) {
  validate(config);
  Rng rng(config.seed.value_or(0));
  ProtocolReport report;
  report.config = config;
  report.config.inputs = resolve_inputs(config, rng);
  const ProtocolPlan plan = build_plan(report.config, report.config.inputs);
  report.receiver_legs = plan.receiver_legs;
  report.receivers = plan.receivers;
  report.resources = plan.resources;

  if (config.mode.kind == ExecutionMode::Kind::enumerate) {
    double branches = 1.0;
    for (const Step& step : plan.steps) {
      if (step.kind == StepKind::bell_measure) branches *= double(step.outcome_radix * step.outcome_radix);
      if (step.kind == StepKind::projective_measure) branches *= double(step.projectors->size());
    }
    if (branches > double(kMaxEnumeratedBranches)) {
      fail(ErrorCode::branch_explosion, "enumerating " + std::to_string(static_cast<unsigned long long>(branches)) +
                                            " branches exceeds the limit of " + std::to_string(kMaxEnumeratedBranches));
    }
  }

  Executor exec(plan.steps, plan.order, options_for(config, rng, hooks));
  report.measurement_count = exec.measurement_count();
  const bool keep_states = config.mode.kind != ExecutionMode::Kind::enumerate;
  exec.run(plan.initial, [&](Leaf&& leaf) {
    Evaluation ev = evaluate(plan, leaf.world);
    BranchRecord rec;
    rec.outcome = std::move(leaf.outcomes);
    rec.probability = leaf.probability;
    rec.fidelity = ev.fidelity;
    rec.receiver_fidelities = std::move(ev.each);
    if (keep_states) {
      rec.final_state = ev.joint();
      report.transcript = std::move(leaf.transcript);
    }
    report.branches.push_back(std::move(rec));
  });

  report.min_fidelity = 1.0;
  report.probability_sum = 0.0;
  for (const BranchRecord& b : report.branches) {
    report.min_fidelity = std::min(report.min_fidelity, b.fidelity);
    report.probability_sum += b.probability;
  }
  if (report.branches.empty()) report.min_fidelity = 0.0;
  return report;
}

namespace {

ProtocolReport run_kind(const ProtocolConfig& config, ProtocolKind kind) {
  if (config.kind != kind) {
    fail(ErrorCode::config_invalid, "config is for " + std::string(to_string(config.kind)) + ", not " +
                                        std::string(to_string(kind)));
  }
  return run_protocol(config);
}

}  // namespace

ProtocolReport run_many_to_one(const ProtocolConfig& c) { return run_kind(c, ProtocolKind::many_to_one); }
ProtocolReport run_one_to_many(const ProtocolConfig& c) { return run_kind(c, ProtocolKind::one_to_many); }
ProtocolReport run_many_to_many(const ProtocolConfig& c) { return run_kind(c, ProtocolKind::many_to_many); }
ProtocolReport run_two_way_channel(const ProtocolConfig& c) { return run_kind(c, ProtocolKind::two_way); }

ReplayResult replay(const Transcript& transcript, const ProtocolConfig& config) {
  validate(config);
  Rng rng(config.seed.value_or(0));
  const std::vector<StateVector> inputs = resolve_inputs(config, rng);
  ProtocolConfig forced = config;
  forced.inputs = inputs;
  const ProtocolPlan plan = build_plan(forced, inputs);

  std::vector<std::size_t> outcomes;
  for (const ClassicalMessage& m : transcript.messages()) {
    if (m.payload.kind == Payload::Kind::bell) {
      const std::size_t d = plan.resources.qudit_dim;
      if (m.payload.m >= d || m.payload.n >= d) {
        fail(ErrorCode::transcript_mismatch, "Bell result in round " + std::to_string(m.round) + " is outside [0, d)");
      }
      outcomes.push_back(m.payload.m * d + m.payload.n);
    } else {
      outcomes.push_back(m.payload.m);
    }
  }

  ExecutionOptions opt;
  opt.kind = ExecutionOptions::Kind::branch;
  opt.forced = outcomes;
  opt.audit = config.audit;
  ReplayResult result{{}, StateVector::trusted(SiteSpec{2}, {1.0, 0.0}), 0.0};
  try {
    Executor exec(plan.steps, plan.order, opt);
    exec.run(plan.initial, [&](Leaf&& leaf) {
      if (!(leaf.transcript == transcript)) {
        fail(ErrorCode::transcript_mismatch, "recorded messages do not match the protocol's schedule");
      }
      Evaluation ev = evaluate(plan, leaf.world);
      result.outcomes = std::move(leaf.outcomes);
      result.final_state = ev.joint();
      result.fidelity = ev.fidelity;
    });
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::config_invalid:
      case ErrorCode::bad_outcome:
      case ErrorCode::zero_probability_branch:
        fail(ErrorCode::transcript_mismatch, e.what());
      default:
        throw;
    }
  }
  return result;
}

}  // namespace qunet
