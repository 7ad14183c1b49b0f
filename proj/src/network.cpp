#include "qunet/network.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

#include "qunet/error.hpp"
#include "qunet/gates.hpp"

namespace qunet {

std::string to_string(const PartyId& p) {
  return (p.role == Role::sender ? "Bob" : "Alice") + std::to_string(p.index);
}

// -------------------------------------------------------------- transcript

void Transcript::append(ClassicalMessage message) {
  if (message.to.empty()) fail(ErrorCode::config_invalid, "message from " + to_string(message.from) + " has no recipients");
  if (!messages_.empty() && message.round <= messages_.back().round) {
    fail(ErrorCode::round_regression, "round " + std::to_string(message.round) + " does not follow round " +
                                          std::to_string(messages_.back().round));
  }
  messages_.push_back(std::move(message));
}

Transcript deliver(Transcript transcript, ClassicalMessage message) {
  transcript.append(std::move(message));
  return transcript;
}

nlohmann::json to_json(const PartyId& p) {
  return {{"role", p.role == Role::sender ? "sender" : "receiver"}, {"index", p.index}};
}

nlohmann::json to_json(const ClassicalMessage& m) {
  nlohmann::json to = nlohmann::json::array();
  for (const PartyId& p : m.to) to.push_back(to_json(p));
  nlohmann::json payload;
  if (m.payload.kind == Payload::Kind::bell) {
    payload = {{"kind", "bell"}, {"m", m.payload.m}, {"n", m.payload.n}};
  } else {
    payload = {{"kind", "projector"}, {"m", m.payload.m}};
  }
  return {{"from", to_json(m.from)}, {"to", std::move(to)}, {"round", m.round}, {"payload", std::move(payload)}};
}

nlohmann::json to_json(const Transcript& t) {
  nlohmann::json out = nlohmann::json::array();
  for (const ClassicalMessage& m : t.messages()) out.push_back(to_json(m));
  return out;
}

namespace {

PartyId party_from_json(const nlohmann::json& j) {
  const std::string role = j.at("role").get<std::string>();
  if (role != "sender" && role != "receiver") fail(ErrorCode::parse_error, "unknown role '" + role + "'");
  const auto index = j.at("index").get<std::size_t>();
  if (index == 0) fail(ErrorCode::parse_error, "party indices start at 1");
  return {role == "sender" ? Role::sender : Role::receiver, index};
}

}  // namespace

ClassicalMessage message_from_json(const nlohmann::json& j) {
  try {
    ClassicalMessage m;
    m.from = party_from_json(j.at("from"));
    for (const auto& r : j.at("to")) m.to.push_back(party_from_json(r));
    m.round = j.at("round").get<std::size_t>();
    const auto& payload = j.at("payload");
    const std::string kind = payload.at("kind").get<std::string>();
    if (kind == "bell") {
      m.payload = {Payload::Kind::bell, payload.at("m").get<std::size_t>(), payload.at("n").get<std::size_t>()};
    } else if (kind == "projector") {
      m.payload = {Payload::Kind::projector, payload.at("m").get<std::size_t>(), 0};
    } else {
      fail(ErrorCode::parse_error, "unknown payload kind '" + kind + "'");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed message: ") + e.what());
  }
}

std::string to_jsonl(const Transcript& t) {
  std::string out;
  for (const ClassicalMessage& m : t.messages()) {
    out += to_json(m).dump();
    out += '\n';
  }
  return out;
}

Transcript transcript_from_jsonl(std::string_view text) {
  Transcript t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
    }
    t.append(message_from_json(j));
  }
  return t;
}

// ------------------------------------------------------------------- world

namespace {

std::size_t find_leg(const std::vector<std::string>& legs, std::string_view leg) {
  const auto it = std::find(legs.begin(), legs.end(), leg);
  return it == legs.end() ? kNoStep : static_cast<std::size_t>(it - legs.begin());
}

}  // namespace

bool World::has_leg(std::string_view leg) const {
  return std::any_of(blocks_.begin(), blocks_.end(),
                     [&](const Block& b) { return find_leg(b.legs, leg) != kNoStep; });
}

void World::add_block(StateVector state, std::vector<std::string> legs) {
  if (legs.size() != state.spec().sites()) fail(ErrorCode::dimension_mismatch, "one leg name per site required");
  for (const std::string& leg : legs) {
    if (has_leg(leg)) fail(ErrorCode::config_invalid, "leg '" + leg + "' already exists");
  }
  blocks_.push_back({std::move(state), std::move(legs)});
}

std::size_t World::gather(std::span<const std::string> legs, std::vector<std::size_t>& sites) {
  sites.clear();
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (const std::string& leg : legs) {
      const std::size_t s = find_leg(blocks_[b].legs, leg);
      if (s == kNoStep) break;
      sites.push_back(s);
    }
    if (sites.size() == legs.size()) return b;
    if (!sites.empty()) break;
  }
  std::vector<std::size_t> involved;
  for (const std::string& leg : legs) {
    std::size_t found = kNoStep;
    for (std::size_t b = 0; b < blocks_.size() && found == kNoStep; ++b) {
      if (find_leg(blocks_[b].legs, leg) != kNoStep) found = b;
    }
    if (found == kNoStep) fail(ErrorCode::config_invalid, "no leg named '" + leg + "'");
    if (std::find(involved.begin(), involved.end(), found) == involved.end()) involved.push_back(found);
  }
  const std::size_t target = involved.front();
  if (involved.size() > 1) {
    Block merged = blocks_[target];
    for (std::size_t i = 1; i < involved.size(); ++i) {
      const Block& other = blocks_[involved[i]];
      merged.state = tensor(merged.state, other.state, max_dimension_);
      merged.legs.insert(merged.legs.end(), other.legs.begin(), other.legs.end());
    }
    blocks_[target] = std::move(merged);
    std::vector<std::size_t> drop(involved.begin() + 1, involved.end());
    std::sort(drop.rbegin(), drop.rend());
    for (std::size_t b : drop) blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(b));
  }
  const std::size_t index = static_cast<std::size_t>(
      std::count_if(involved.begin() + 1, involved.end(), [&](std::size_t b) { return b < target; }));
  const std::size_t final_index = target - index;
  sites.clear();
  for (const std::string& leg : legs) sites.push_back(find_leg(blocks_[final_index].legs, leg));
  return final_index;
}

void World::replace_block(std::size_t b, StateVector state, std::vector<std::string> legs) {
  blocks_.at(b) = {std::move(state), std::move(legs)};
}

void World::remove_block(std::size_t b) {
  if (b >= blocks_.size()) fail(ErrorCode::index_out_of_range, "no such block");
  blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(b));
}

StateVector World::joint_state(std::span<const std::string> order) const {
  if (blocks_.empty()) fail(ErrorCode::config_invalid, "the world holds no state");
  StateVector joint = blocks_.front().state;
  std::vector<std::string> legs = blocks_.front().legs;
  for (std::size_t b = 1; b < blocks_.size(); ++b) {
    joint = tensor(joint, blocks_[b].state, max_dimension_);
    legs.insert(legs.end(), blocks_[b].legs.begin(), blocks_[b].legs.end());
  }
  if (order.size() != legs.size()) fail(ErrorCode::dimension_mismatch, "leg order does not cover the world");
  std::vector<std::size_t> sites;
  for (const std::string& leg : order) {
    const std::size_t s = find_leg(legs, leg);
    if (s == kNoStep) fail(ErrorCode::config_invalid, "no leg named '" + leg + "'");
    sites.push_back(s);
  }
  const BlockLayout lay = block_layout(joint.spec(), sites);
  std::vector<Complex> amps(joint.size());
  for (std::size_t j = 0; j < lay.local.size(); ++j) amps[j] = joint[lay.local[j]];
  return StateVector::trusted(joint.spec().select(sites), std::move(amps));
}

// ------------------------------------------------------------------- steps

std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::prepare_input: return "prepare_input";
    case StepKind::local_unitary: return "local_unitary";
    case StepKind::bell_measure: return "bell_measure";
    case StepKind::projective_measure: return "projective_measure";
    case StepKind::send: return "send";
  }
  return "unknown";
}

std::vector<std::size_t> schedule(const std::vector<Step>& steps) {
  const std::size_t count = steps.size();
  std::vector<std::vector<std::size_t>> deps(count);
  auto check_index = [&](std::size_t s, std::size_t ref) {
    if (ref >= count) fail(ErrorCode::config_invalid, "step '" + steps[s].label + "' refers to a missing step");
    if (ref == s) fail(ErrorCode::config_invalid, "step '" + steps[s].label + "' depends on itself");
  };
  for (std::size_t s = 0; s < count; ++s) {
    const Step& step = steps[s];
    for (std::size_t a : step.after) {
      check_index(s, a);
      deps[s].push_back(a);
    }
    for (std::size_t r : step.reads) {
      check_index(s, r);
      if (!steps[r].is_measurement()) {
        fail(ErrorCode::config_invalid, "step '" + step.label + "' reads a step that measures nothing");
      }
      if (steps[r].actor == step.actor) {
        deps[s].push_back(r);
        continue;
      }
      std::size_t via = kNoStep;
      for (std::size_t t = 0; t < count && via == kNoStep; ++t) {
        const Step& send = steps[t];
        if (send.kind == StepKind::send && send.carries == r &&
            std::find(send.recipients.begin(), send.recipients.end(), step.actor) != send.recipients.end()) {
          via = t;
        }
      }
      if (via == kNoStep) {
        fail(ErrorCode::config_invalid,
             "no message delivers the result of '" + steps[r].label + "' to " + to_string(step.actor));
      }
      deps[s].push_back(via);
    }
    if (step.kind == StepKind::send) {
      check_index(s, step.carries);
      if (!steps[step.carries].is_measurement() || steps[step.carries].actor != step.actor) {
        fail(ErrorCode::config_invalid, "send '" + step.label + "' forwards a result its party does not own");
      }
      if (step.recipients.empty()) fail(ErrorCode::config_invalid, "send '" + step.label + "' has no recipients");
      deps[s].push_back(step.carries);
    }
  }

  std::vector<std::size_t> pending(count, 0);
  std::vector<std::vector<std::size_t>> users(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::sort(deps[s].begin(), deps[s].end());
    deps[s].erase(std::unique(deps[s].begin(), deps[s].end()), deps[s].end());
    pending[s] = deps[s].size();
    for (std::size_t d : deps[s]) users[d].push_back(s);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t s = 0; s < count; ++s) {
    if (pending[s] == 0) ready.push(s);
  }
  std::vector<std::size_t> order;
  order.reserve(count);
  while (!ready.empty()) {
    const std::size_t s = ready.top();
    ready.pop();
    order.push_back(s);
    for (std::size_t u : users[s]) {
      if (--pending[u] == 0) ready.push(u);
    }
  }
  if (order.size() != count) fail(ErrorCode::config_invalid, "step dependencies form a cycle");
  return order;
}

// ----------------------------------------------------------------- context

std::size_t StepContext::result(std::size_t id) const {
  if (audit_) {
    if (std::find(step_->reads.begin(), step_->reads.end(), id) == step_->reads.end()) {
      fail(ErrorCode::access_violation, "step '" + step_->label + "' reads an undeclared result");
    }
    if (id >= results_->size() || !knows_[id]) {
      fail(ErrorCode::access_violation, to_string(step_->actor) + " reads a result not in its inbox");
    }
  }
  if (id >= results_->size() || (*results_)[id] == kNoStep) {
    fail(ErrorCode::access_violation, "result read before it was measured");
  }
  return (*results_)[id];
}

void StepContext::apply(std::span<const std::string> legs, const LocalOperator& op) {
  std::vector<std::size_t>& sites = *sites_;
  const std::size_t b = world_->gather(legs, sites);
  World::Block& block = world_->block(b);
  StateVector after = apply_on_sites(block.state, sites, op);
  if (on_apply_ && *on_apply_) (*on_apply_)(ApplyEvent{step_, &block.state, sites, &op, &after});
  block.state = std::move(after);
}

void StepContext::apply(std::initializer_list<std::string> legs, const LocalOperator& op) {
  apply(std::span<const std::string>(legs.begin(), legs.size()), op);
}

// ---------------------------------------------------------------- executor

Executor::Executor(const std::vector<Step>& steps, std::vector<std::size_t> order, ExecutionOptions options)
    : steps_(steps), order_(std::move(order)), options_(std::move(options)) {
  if (order_.size() != steps_.size()) fail(ErrorCode::config_invalid, "order does not cover every step");
  for (const Step& s : steps_) {
    parties_.push_back(s.actor);
    parties_.insert(parties_.end(), s.recipients.begin(), s.recipients.end());
    if (s.is_measurement()) ++measurements_;
  }
  std::sort(parties_.begin(), parties_.end());
  parties_.erase(std::unique(parties_.begin(), parties_.end()), parties_.end());
  if (options_.kind == ExecutionOptions::Kind::sample && options_.rng == nullptr) {
    fail(ErrorCode::config_invalid, "sample mode needs a generator");
  }
  if (options_.kind == ExecutionOptions::Kind::branch && options_.forced.size() != measurements_) {
    fail(ErrorCode::config_invalid, "branch tuple has " + std::to_string(options_.forced.size()) +
                                        " outcomes, the protocol makes " + std::to_string(measurements_) +
                                        " measurements");
  }
  if (options_.kind == ExecutionOptions::Kind::enumerate) options_.record_transcript = false;
}

std::size_t Executor::party_slot(const PartyId& p) const {
  return static_cast<std::size_t>(std::lower_bound(parties_.begin(), parties_.end(), p) - parties_.begin());
}

void Executor::run(World initial, const std::function<void(Leaf&&)>& on_leaf) {
  State state;
  state.world = std::move(initial);
  state.results.assign(steps_.size(), kNoStep);
  state.knows.assign(parties_.size() * steps_.size(), 0);
  state.outcomes.reserve(measurements_);
  scratch_sites_.reserve(8);
  run_from(0, std::move(state), on_leaf);
}

void Executor::run_from(std::size_t pos, State state, const std::function<void(Leaf&&)>& on_leaf) {
  for (; pos < order_.size(); ++pos) {
    const std::size_t id = order_[pos];
    const Step& step = steps_[id];
    if (step.is_measurement()) {
      measure(pos, std::move(state), on_leaf);
      return;
    }
    if (step.kind == StepKind::send) {
      const std::size_t from = party_slot(step.actor);
      if (options_.audit && !state.knows[from * steps_.size() + step.carries]) {
        fail(ErrorCode::access_violation, to_string(step.actor) + " sends a result it does not hold");
      }
      for (const PartyId& r : step.recipients) state.knows[party_slot(r) * steps_.size() + step.carries] = 1;
      if (options_.record_transcript) {
        const Step& source = steps_[step.carries];
        const std::size_t value = state.results[step.carries];
        Payload payload;
        if (source.kind == StepKind::bell_measure) {
          payload = {Payload::Kind::bell, value / source.outcome_radix, value % source.outcome_radix};
        } else {
          payload = {Payload::Kind::projector, value, 0};
        }
        state.transcript.append({step.actor, step.recipients, pos, payload});
      }
      continue;
    }
    StepContext ctx;
    ctx.world_ = &state.world;
    ctx.step_ = &step;
    ctx.results_ = &state.results;
    ctx.knows_ = state.knows.data() + party_slot(step.actor) * steps_.size();
    ctx.audit_ = options_.audit;
    ctx.on_apply_ = &options_.on_apply;
    ctx.sites_ = &scratch_sites_;
    step.apply(ctx);
  }
  on_leaf(Leaf{std::move(state.outcomes), state.probability, std::move(state.world), std::move(state.transcript)});
}

void Executor::measure(std::size_t pos, State state, const std::function<void(Leaf&&)>& on_leaf) {
  const std::size_t id = order_[pos];
  const Step& step = steps_[id];
  std::vector<std::size_t> sites;
  const std::size_t b = state.world.gather(step.legs, sites);
  // The measured block leaves the world; each branch adds back its own post-measurement block.
  const World::Block block = std::move(state.world.block(b));
  state.world.remove_block(b);

  std::vector<double> probs;
  std::vector<std::vector<Complex>> bell_rests;
  SiteSpec bell_rest_spec;
  std::vector<std::string> bell_rest_legs;
  if (step.kind == StepKind::bell_measure) {
    if (sites.size() != 2) fail(ErrorCode::config_invalid, "a Bell measurement acts on two legs");
    if (block.state.spec().dim(sites[0]) != step.outcome_radix) {
      fail(ErrorCode::dimension_mismatch, "Bell measurement radix does not match its legs");
    }
    gates::BellSplit split = gates::bell_split(block.state, sites[0], sites[1]);
    bell_rest_spec = std::move(split.rest_spec);
    for (std::size_t s = 0; s < block.legs.size(); ++s) {
      if (s != sites[0] && s != sites[1]) bell_rest_legs.push_back(block.legs[s]);
    }
    for (gates::BellBranch& br : split.branches) {
      probs.push_back(br.probability);
      bell_rests.push_back(std::move(br.rest));
    }
  } else {
    if (!step.projectors) fail(ErrorCode::config_invalid, "projective measurement without projectors");
    probs = outcome_probabilities(block.state, sites, *step.projectors);
  }

  std::vector<std::size_t> chosen;
  const std::size_t k = state.outcomes.size();
  switch (options_.kind) {
    case ExecutionOptions::Kind::enumerate:
      for (std::size_t o = 0; o < probs.size(); ++o) {
        if (probs[o] >= kZeroProbability) chosen.push_back(o);
      }
      break;
    case ExecutionOptions::Kind::sample:
      chosen.push_back(sample_index(probs, options_.rng->uniform()));
      break;
    case ExecutionOptions::Kind::branch: {
      const std::size_t o = options_.forced.at(k);
      if (o >= probs.size()) {
        fail(ErrorCode::bad_outcome, "outcome " + std::to_string(o) + " of '" + step.label + "' is outside [0, " +
                                         std::to_string(probs.size()) + ")");
      }
      if (probs[o] < kZeroProbability) {
        fail(ErrorCode::zero_probability_branch, "outcome " + std::to_string(o) + " of '" + step.label +
                                                     "' has zero probability");
      }
      chosen.push_back(o);
      break;
    }
  }

  const std::size_t slot = party_slot(step.actor);
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const std::size_t o = chosen[i];
    const bool last = i + 1 == chosen.size();
    State next = last ? std::move(state) : state;
    if (step.kind == StepKind::bell_measure) {
      std::vector<Complex> rest = last ? std::move(bell_rests[o]) : bell_rests[o];
      next.world.add_block(StateVector::trusted(bell_rest_spec, std::move(rest)), bell_rest_legs);
    } else {
      MeasurementResult r = measure_with_projectors(block.state, sites, *step.projectors, MeasureMode::branch(o));
      next.world.add_block(std::move(r.post), block.legs);
    }
    if (options_.on_measure) {
      options_.on_measure(MeasureEvent{&step, &block.state, sites, o, probs[o], &next.world.blocks().back().state});
    }
    next.results[id] = o;
    next.knows[slot * steps_.size() + id] = 1;
    next.outcomes.push_back(o);
    next.probability *= probs[o];
    run_from(pos + 1, std::move(next), on_leaf);
  }
}

}  // namespace qunet
