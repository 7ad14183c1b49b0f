#include "qunet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "qunet/error.hpp"
#include "qunet/report.hpp"

namespace qunet::oracle {

namespace {

using gates::BellOutcome;
using gates::PhaseConvention;

// ------------------------------------------------------------------ scripts

/// One entry of a full-register program.  Unitaries may depend on earlier
/// measurement outcomes (indexed in measurement order).
struct Action {
  enum class Kind { unitary, measure } kind = Kind::unitary;
  std::vector<std::size_t> sites;
  std::function<LocalOperator(std::span<const std::size_t>)> op;
  std::shared_ptr<const ProjectorFamily> family;
  /// Rank-one measurements only: contract the measured sites out afterwards.
  bool discard = false;
};

struct Script {
  StateVector initial = StateVector::trusted(SiteSpec{2}, {1.0, 0.0});
  std::vector<Action> actions;
  std::size_t measurements = 0;
  std::vector<std::size_t> receiver_sites;
  std::vector<Complex> expected_joint;
  std::vector<std::vector<Complex>> expected_each;
};

void add_unitary(Script& s, std::size_t site, std::function<LocalOperator(std::span<const std::size_t>)> op) {
  s.actions.push_back({Action::Kind::unitary, {site}, std::move(op), nullptr});
}

std::size_t add_measure(Script& s, std::vector<std::size_t> sites, std::shared_ptr<const ProjectorFamily> family,
                        bool discard = false) {
  s.actions.push_back({Action::Kind::measure, std::move(sites), {}, std::move(family), discard});
  return s.measurements++;
}

/// Rewrites register sites into positions in the shrinking register.
void compact(Script& s) {
  std::vector<std::size_t> live(s.initial.spec().sites());
  std::iota(live.begin(), live.end(), 0);
  auto position = [&](std::size_t site) {
    const auto it = std::find(live.begin(), live.end(), site);
    if (it == live.end()) fail(ErrorCode::index_out_of_range, "site used after it was measured out");
    return static_cast<std::size_t>(it - live.begin());
  };
  for (Action& a : s.actions) {
    const std::vector<std::size_t> original = a.sites;
    for (std::size_t& site : a.sites) site = position(site);
    if (a.discard) {
      for (std::size_t site : original) live.erase(std::find(live.begin(), live.end(), site));
    }
  }
  for (std::size_t& site : s.receiver_sites) site = position(site);
}

StateVector ghz(std::size_t d, std::size_t legs) {
  std::size_t total = 1;
  std::size_t diagonal = 0;
  for (std::size_t i = 0; i < legs; ++i) {
    diagonal += total;
    total *= d;
  }
  std::vector<Complex> amps(total);
  for (std::size_t k = 0; k < d; ++k) amps[k * diagonal] = 1.0 / std::sqrt(static_cast<double>(d));
  return StateVector::trusted(SiteSpec(std::vector<std::size_t>(legs, d)), std::move(amps));
}

/// The input on digit `digit` of a d-level qudit, other digits zero.
StateVector on_digit(const SiteSpec& f, std::size_t digit, const StateVector& input) {
  std::vector<Complex> amps(f.total());
  for (std::size_t x = 0; x < input.size(); ++x) amps[x * f.stride(digit)] = input[x];
  return StateVector::trusted(SiteSpec{f.total()}, std::move(amps));
}

std::vector<Complex> encoded(std::span<const StateVector> inputs, const SiteSpec& f) {
  std::vector<Complex> amps(f.total(), 1.0);
  for (std::size_t k = 0; k < f.total(); ++k) {
    for (std::size_t i = 0; i < f.sites(); ++i) amps[k] *= inputs[i][f.digit(k, i)];
  }
  return amps;
}

/// The encoded value k spread over one d-level leg per receiver digit.
std::vector<Complex> per_leg(std::span<const Complex> enc, const SiteSpec& recv) {
  const std::size_t d = recv.total();
  std::vector<std::size_t> legs(recv.sites(), d);
  const SiteSpec joint(legs);
  std::vector<Complex> out(joint.total());
  std::vector<std::size_t> digits(recv.sites());
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < recv.sites(); ++i) digits[i] = recv.digit(k, i);
    out[joint.encode(digits)] = enc[k];
  }
  return out;
}

std::vector<Complex> padded(const StateVector& s, std::size_t d) {
  std::vector<Complex> v(d);
  for (std::size_t i = 0; i < s.size(); ++i) v[i] = s[i];
  return v;
}

StateVector product(const std::vector<StateVector>& parts, std::size_t cap) {
  StateVector out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = tensor(out, parts[i], cap);
  return out;
}

/// Senders in order: spread, correct own leg for earlier results, Bell
/// measure.  Then the receivers' shift (and, for the first, phase) corrections.
void sender_actions(Script& s, const SiteSpec& f, const PhaseConvention& conv, const std::vector<std::size_t>& x,
                    const std::vector<std::size_t>& r, const std::vector<std::size_t>& recv) {
  const std::size_t n = f.sites();
  const std::size_t d = f.total();
  auto family = std::make_shared<const ProjectorFamily>(gates::bell_projectors(d));
  std::vector<std::size_t> bells;
  for (std::size_t i = 0; i < n; ++i) {
    if (n > 1) add_unitary(s, x[i], [f, i](auto) { return gates::spread_op(f, i); });
    for (std::size_t j = 0; j < bells.size(); ++j) {
      const std::size_t mj = bells[j];
      add_unitary(s, r[i], [f, j, mj, d, conv](std::span<const std::size_t> o) {
        return gates::bob_correction(f, j, o[mj] / d, conv);
      });
    }
    bells.push_back(add_measure(s, {x[i], r[i]}, family, true));
  }
  for (std::size_t a = 0; a < recv.size(); ++a) {
    for (std::size_t j = 0; j < bells.size(); ++j) {
      const std::size_t mj = bells[j];
      if (a == 0) {
        add_unitary(s, recv[a], [f, j, mj, d, conv](std::span<const std::size_t> o) {
          return gates::alice_correction(f, j, gates::bell_from_index(d, o[mj]), conv);
        });
      } else {
        add_unitary(s, recv[a], [f, j, mj, d, conv](std::span<const std::size_t> o) {
          return gates::bob_correction(f, j, o[mj] / d, conv);
        });
      }
    }
  }
}

/// Receivers in order: spread, project, relabel; peers cancel the phase.
void receiver_actions(Script& s, const SiteSpec& f, const PhaseConvention& conv, const std::vector<std::size_t>& legs) {
  const std::size_t n = f.sites();
  if (n < 2) return;
  for (std::size_t i = 0; i < n; ++i) {
    add_unitary(s, legs[i], [f, i](auto) { return gates::receiver_spread_op(f, i); });
    const std::size_t p =
        add_measure(s, {legs[i]}, std::make_shared<const ProjectorFamily>(gates::receiver_projectors(f, i)));
    add_unitary(s, legs[i], [f, i, p](std::span<const std::size_t> o) { return gates::receiver_relabel(f, i, o[p]); });
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      add_unitary(s, legs[j], [f, i, j, p, conv](std::span<const std::size_t> o) {
        return gates::receiver_phase_correction(f, j, i, o[p], j < i, conv);
      });
    }
  }
}

std::vector<std::size_t> range(std::size_t first, std::size_t count) {
  std::vector<std::size_t> v(count);
  std::iota(v.begin(), v.end(), first);
  return v;
}

Script build_script(const ProtocolConfig& config, std::span<const StateVector> inputs) {
  const SiteSpec f = sender_spec(config);
  const SiteSpec fr = receiver_spec(config);
  const std::size_t d = f.total();
  const std::size_t cap = config.max_dimension;
  const PhaseConvention& conv = config.convention;
  const std::vector<Complex> enc = encoded(inputs, f);
  Script s;

  switch (config.kind) {
    case ProtocolKind::many_to_one:
    case ProtocolKind::many_to_many: {
      // X_1..X_N, R_1..R_N, then the receivers' legs.
      const std::size_t n = f.sites();
      const std::size_t nr = config.kind == ProtocolKind::many_to_one ? 1 : fr.sites();
      std::vector<StateVector> parts;
      for (std::size_t i = 0; i < n; ++i) parts.push_back(on_digit(f, i, inputs[i]));
      parts.push_back(ghz(d, n + nr));
      s.initial = product(parts, cap);
      const auto recv = range(2 * n, nr);
      sender_actions(s, f, conv, range(0, n), range(n, n), recv);
      if (config.kind == ProtocolKind::many_to_many) receiver_actions(s, fr, conv, recv);
      s.receiver_sites = recv;
      if (config.kind == ProtocolKind::many_to_one) {
        s.expected_joint = enc;
        s.expected_each = {enc};
      } else {
        s.expected_joint = per_leg(enc, fr);
        if (fr == f) {
          for (const StateVector& in : inputs) s.expected_each.push_back(padded(in, d));
        }
      }
      break;
    }
    case ProtocolKind::one_to_many: {
      // X, R0, A_1..A_N.
      const std::size_t n = f.sites();
      s.initial = product({StateVector::trusted(SiteSpec{d}, enc), ghz(d, n + 1)}, cap);
      const std::size_t b =
          add_measure(s, {0, 1}, std::make_shared<const ProjectorFamily>(gates::bell_projectors(d)), true);
      const auto recv = range(2, n);
      for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
          add_unitary(s, recv[i], [f, b, d, conv](std::span<const std::size_t> o) {
            return gates::alice_correction(f, 0, gates::bell_from_index(d, o[b]), conv);
          });
        } else {
          add_unitary(s, recv[i], [f, b, d, conv](std::span<const std::size_t> o) {
            return gates::bob_correction(f, 0, o[b] / d, conv);
          });
        }
      }
      receiver_actions(s, f, conv, recv);
      s.receiver_sites = recv;
      s.expected_joint = per_leg(enc, f);
      for (const StateVector& in : inputs) s.expected_each.push_back(padded(in, d));
      break;
    }
    case ProtocolKind::two_way: {
      // XB, XA, B, A, B+, A+.  Bob sends digit 0 and ends up holding B+;
      // Alice sends digit 1 and ends up holding A+.
      std::vector<Complex> ground(d);
      ground[0] = 1.0;
      const StateVector zero = StateVector::trusted(SiteSpec{d}, ground);
      s.initial = product({on_digit(f, 0, inputs[0]), on_digit(f, 1, inputs[1]), ghz(d, 2), zero, zero}, cap);
      const LocalOperator cx = gates::xor_gate(d);
      s.actions.push_back({Action::Kind::unitary, {2, 4}, [cx](auto) { return cx; }, nullptr});
      s.actions.push_back({Action::Kind::unitary, {3, 5}, [cx](auto) { return cx; }, nullptr});
      const std::vector<std::size_t> recv{5, 4};
      sender_actions(s, f, conv, {0, 1}, {2, 3}, recv);
      receiver_actions(s, f, conv, recv);
      s.receiver_sites = recv;
      s.expected_joint = per_leg(enc, f);
      for (const StateVector& in : inputs) s.expected_each.push_back(padded(in, d));
      break;
    }
  }
  compact(s);
  return s;
}

struct Walk {
  const Script& script;
  const std::function<bool(const BranchRecord&)>& visit;
  std::vector<std::size_t> outcomes;
  bool stopped = false;

  void leaf(const StateVector& state, double probability) {
    BranchRecord rec;
    rec.outcome = outcomes;
    rec.probability = probability;
    rec.fidelity = std::min(1.0, contract(state, script.receiver_sites, script.expected_joint).weight);
    if (script.receiver_sites.size() == 1) {
      rec.receiver_fidelities = {rec.fidelity};
    } else {
      for (std::size_t i = 0; i < script.expected_each.size(); ++i) {
        const std::size_t site[1] = {script.receiver_sites[i]};
        rec.receiver_fidelities.push_back(std::min(1.0, contract(state, site, script.expected_each[i]).weight));
      }
    }
    if (!visit(rec)) stopped = true;
  }

  void run(std::size_t a, StateVector state, double probability) {
    for (; a < script.actions.size(); ++a) {
      const Action& act = script.actions[a];
      if (act.kind == Action::Kind::unitary) {
        state = apply_on_sites(state, act.sites, act.op(outcomes), Check::verify);
        continue;
      }
      const std::vector<double> probs = outcome_probabilities(state, act.sites, *act.family);
      for (std::size_t o = 0; o < probs.size() && !stopped; ++o) {
        if (probs[o] < kZeroProbability) continue;
        outcomes.push_back(o);
        if (act.discard) {
          Contraction c = contract(state, act.sites, (*act.family)[o].ray());
          const double scale = 1.0 / std::sqrt(c.weight);
          for (Complex& amp : c.amps) amp *= scale;
          run(a + 1, StateVector::trusted(std::move(c.rest), std::move(c.amps)), probability * probs[o]);
        } else {
          MeasurementResult r = measure_with_projectors(state, act.sites, *act.family, MeasureMode::branch(o));
          run(a + 1, std::move(r.post), probability * probs[o]);
        }
        outcomes.pop_back();
      }
      return;
    }
    leaf(state, probability);
  }
};

}  // namespace

std::size_t predicted_branch_count(const ProtocolConfig& config) {
  validate(config);
  const SiteSpec f = sender_spec(config);
  const SiteSpec fr = receiver_spec(config);
  const std::size_t d = f.total();
  auto projector_outcomes = [d](const SiteSpec& s) {
    if (s.sites() < 2) return std::size_t{1};
    std::size_t n = 1;
    for (std::size_t di : s.dims()) n *= d / di;
    return n;
  };
  std::size_t bell = 1;
  switch (config.kind) {
    case ProtocolKind::many_to_one:
      for (std::size_t i = 0; i < f.sites(); ++i) bell *= d * d;
      return bell;
    case ProtocolKind::one_to_many:
      return d * d * projector_outcomes(f);
    case ProtocolKind::many_to_many:
      for (std::size_t i = 0; i < f.sites(); ++i) bell *= d * d;
      return bell * projector_outcomes(fr);
    case ProtocolKind::two_way:
      return d * d * d * d * projector_outcomes(f);
  }
  return 0;
}

void visit_branches(const ProtocolConfig& config, const std::function<bool(const BranchRecord&)>& visit) {
  validate(config);
  const std::size_t count = predicted_branch_count(config);
  if (count > kMaxBranches) {
    fail(ErrorCode::branch_explosion, std::to_string(count) + " branches exceed the limit of " +
                                          std::to_string(kMaxBranches));
  }
  Rng rng(config.seed.value_or(0));
  const std::vector<StateVector> inputs = resolve_inputs(config, rng);
  const Script script = build_script(config, inputs);
  Walk walk{script, visit, {}, false};
  walk.run(0, script.initial, 1.0);
}

std::vector<BranchRecord> enumerate_branches(const ProtocolConfig& config) {
  std::vector<BranchRecord> out;
  visit_branches(config, [&](const BranchRecord& r) {
    out.push_back(r);
    return true;
  });
  return out;
}

// ------------------------------------------------------------ phase pinning

std::vector<PinCase> default_pin_cases() {
  std::vector<PinCase> out;
  for (ProtocolKind k : {ProtocolKind::many_to_one, ProtocolKind::one_to_many}) {
    for (std::vector<std::size_t> dims : {std::vector<std::size_t>{2, 2}, {2, 3}, {3, 2}}) out.push_back({k, dims});
  }
  return out;
}

PinResult pin_phases(std::span<const PinCase> cases, std::span<const gates::PhaseConvention> candidates,
                     std::uint64_t seed) {
  PinResult result;
  std::vector<PhaseConvention> survivors;
  for (const PhaseConvention& conv : candidates) {
    std::string verdict = "survives";
    for (std::size_t c = 0; c < cases.size() && verdict == "survives"; ++c) {
      ProtocolConfig config;
      config.kind = cases[c].kind;
      config.dims = cases[c].dims;
      config.seed = seed + c;
      config.convention = conv;
      visit_branches(config, [&](const BranchRecord& r) {
        if (r.fidelity >= 1.0 - kFidelityTolerance) return true;
        std::ostringstream why;
        why << "fails " << to_string(config.kind) << " (";
        for (std::size_t i = 0; i < config.dims.size(); ++i) why << (i ? "," : "") << config.dims[i];
        why << ") at branch (";
        for (std::size_t i = 0; i < r.outcome.size(); ++i) why << (i ? "," : "") << r.outcome[i];
        why << ") with fidelity " << r.fidelity;
        verdict = why.str();
        return false;
      });
    }
    if (verdict == "survives") survivors.push_back(conv);
    result.log.push_back(gates::to_string(conv) + ": " + verdict);
  }
  if (survivors.empty()) fail(ErrorCode::no_consistent_convention, "no candidate convention reaches fidelity 1 on every branch");
  if (survivors.size() > 1) {
    std::string names;
    for (const PhaseConvention& c : survivors) names += "\n  " + gates::to_string(c);
    fail(ErrorCode::ambiguous_convention, std::to_string(survivors.size()) + " conventions survive:" + names);
  }
  result.convention = survivors.front();
  return result;
}

PinResult pin_phases(std::span<const PinCase> cases) {
  const auto candidates = gates::candidate_conventions();
  return pin_phases(cases, candidates);
}

PinResult pin_phases(ProtocolKind kind, const SiteSpec& spec) {
  const PinCase one[1] = {{kind, spec.dims()}};
  return pin_phases(one);
}

// --------------------------------------------------------- dense crosscheck

namespace {

/// For every flat index: the index with the selected sites zeroed (the
/// "rest" key) and the local index within the selected block.
struct Split {
  std::vector<std::size_t> rest;
  std::vector<std::size_t> local;
};

Split split_indices(const SiteSpec& spec, std::span<const std::size_t> sites) {
  Split s;
  s.rest.resize(spec.total());
  s.local.resize(spec.total());
  for (std::size_t i = 0; i < spec.total(); ++i) {
    std::size_t rest = i;
    std::size_t local = 0;
    std::size_t place = 1;
    for (std::size_t site : sites) {
      const std::size_t digit = spec.digit(i, site);
      rest -= digit * spec.stride(site);
      local += digit * place;
      place *= spec.dim(site);
    }
    s.rest[i] = rest;
    s.local[i] = local;
  }
  return s;
}

void check_sites(const SiteSpec& spec, std::span<const std::size_t> sites, const LocalOperator& op) {
  std::size_t block = 1;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i] >= spec.sites()) fail(ErrorCode::index_out_of_range, "site out of range");
    if (std::find(sites.begin(), sites.begin() + static_cast<std::ptrdiff_t>(i), sites[i]) != sites.begin() + static_cast<std::ptrdiff_t>(i)) {
      fail(ErrorCode::index_out_of_range, "site listed twice");
    }
    block *= spec.dim(sites[i]);
  }
  if (block != op.dim()) fail(ErrorCode::dimension_mismatch, "operator dimension does not match its sites");
}

void check_dense_size(const SiteSpec& spec) {
  if (spec.total() > kMaxDenseDimension) {
    fail(ErrorCode::capacity_exceeded, "dense path limited to dimension " + std::to_string(kMaxDenseDimension) +
                                           ", register has " + std::to_string(spec.total()));
  }
}

std::vector<Complex> dense_apply_raw(std::span<const Complex> state, const SiteSpec& spec,
                                     std::span<const std::size_t> sites, const LocalOperator& op) {
  const Split s = split_indices(spec, sites);
  const std::vector<Complex> m = op.to_dense();
  const std::size_t dim = op.dim();
  const std::size_t total = spec.total();
  std::vector<Complex> out(total);
  for (std::size_t r = 0; r < total; ++r) {
    Complex acc{};
    for (std::size_t c = 0; c < total; ++c) {
      const Complex e = s.rest[r] == s.rest[c] ? m[s.local[r] * dim + s.local[c]] : Complex{};
      acc += e * state[c];
    }
    out[r] = acc;
  }
  return out;
}

double max_diff(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) fail(ErrorCode::dimension_mismatch, "compared vectors differ in length");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

Complex embedded_element(const SiteSpec& spec, std::span<const std::size_t> sites, const LocalOperator& op,
                         std::size_t row, std::size_t col) {
  check_sites(spec, sites, op);
  if (row >= spec.total() || col >= spec.total()) fail(ErrorCode::index_out_of_range, "matrix index out of range");
  std::size_t lr = 0;
  std::size_t lc = 0;
  std::size_t place = 1;
  std::size_t rest_r = row;
  std::size_t rest_c = col;
  for (std::size_t site : sites) {
    const std::size_t dr = spec.digit(row, site);
    const std::size_t dc = spec.digit(col, site);
    lr += dr * place;
    lc += dc * place;
    rest_r -= dr * spec.stride(site);
    rest_c -= dc * spec.stride(site);
    place *= spec.dim(site);
  }
  return rest_r == rest_c ? op.element(lr, lc) : Complex{};
}

std::vector<Complex> dense_apply(const StateVector& state, std::span<const std::size_t> sites, const LocalOperator& op) {
  check_dense_size(state.spec());
  check_sites(state.spec(), sites, op);
  return dense_apply_raw(state.amplitudes(), state.spec(), sites, op);
}

double dense_crosscheck(const StateVector& state, std::span<const SiteOperator> ops) {
  check_dense_size(state.spec());
  double worst = 0.0;
  StateVector cur = state;
  for (const SiteOperator& so : ops) {
    const std::vector<Complex> dense = dense_apply(cur, so.sites, so.op);
    StateVector fast = apply_on_sites(cur, so.sites, so.op);
    worst = std::max(worst, max_diff(dense, fast.amplitudes()));
    cur = std::move(fast);
  }
  return worst;
}

CrosscheckReport crosscheck_run(const ProtocolConfig& config) {
  ProtocolConfig c = config;
  if (c.mode.kind == ExecutionMode::Kind::enumerate) {
    if (!c.seed) fail(ErrorCode::config_invalid, "crosscheck follows one trajectory; give a seed or a branch");
    c.mode = ExecutionMode::sample();
  }
  CrosscheckReport rep;
  RunHooks hooks;
  hooks.on_apply = [&](const ApplyEvent& e) {
    if (e.before->size() > kMaxDenseDimension) {
      ++rep.skipped;
      return;
    }
    const std::vector<Complex> dense = dense_apply(*e.before, e.sites, *e.op);
    rep.max_deviation = std::max(rep.max_deviation, max_diff(dense, e.after->amplitudes()));
    ++rep.checked;
  };
  hooks.on_measure = [&](const MeasureEvent& e) {
    const SiteSpec& spec = e.before->spec();
    std::vector<Complex> post;
    double p = 0.0;
    if (e.step->kind == StepKind::bell_measure) {
      // <psi_mn| on the measured pair, contracted against every other index.
      const std::size_t d = e.step->outcome_radix;
      const std::vector<Complex> ray = gates::bell_vector(d, gates::bell_from_index(d, e.outcome));
      const Split s = split_indices(spec, e.sites);
      std::vector<std::size_t> rest_keys;
      for (std::size_t i = 0; i < spec.total(); ++i) {
        if (s.local[i] == 0) rest_keys.push_back(s.rest[i]);
      }
      std::vector<Complex> rest(rest_keys.size());
      for (std::size_t i = 0; i < spec.total(); ++i) {
        const auto pos = std::lower_bound(rest_keys.begin(), rest_keys.end(), s.rest[i]) - rest_keys.begin();
        rest[static_cast<std::size_t>(pos)] += std::conj(ray[s.local[i]]) * (*e.before)[i];
      }
      for (const Complex& a : rest) p += std::norm(a);
      for (Complex& a : rest) a /= std::sqrt(p);
      post = std::move(rest);
    } else {
      if (e.before->size() > kMaxDenseDimension) {
        ++rep.skipped;
        return;
      }
      post = dense_apply(*e.before, e.sites, (*e.step->projectors)[e.outcome]);
      for (const Complex& a : post) p += std::norm(a);
      for (Complex& a : post) a /= std::sqrt(p);
    }
    rep.max_deviation = std::max(rep.max_deviation, std::abs(p - e.probability));
    rep.max_deviation = std::max(rep.max_deviation, max_diff(post, e.after->amplitudes()));
    ++rep.checked;
  };
  run_protocol(c, hooks);
  return rep;
}

// ------------------------------------------------------------------- verify

bool VerifySummary::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed; });
}

std::string VerifySummary::first_failure() const {
  for (const PropertyResult& p : properties) {
    if (!p.passed) return p.name;
  }
  return {};
}

nlohmann::json VerifySummary::to_json() const {
  nlohmann::json props = nlohmann::json::array();
  for (const PropertyResult& p : properties) props.push_back({{"name", p.name}, {"passed", p.passed}, {"detail", p.detail}});
  nlohmann::json j{{"passed", passed()}, {"properties", std::move(props)}};
  const std::string first = first_failure();
  j["first_failure"] = first.empty() ? nlohmann::json(nullptr) : nlohmann::json(first);
  return j;
}

namespace {

std::string dims_text(const std::vector<std::size_t>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + ")";
}

std::string label(ProtocolKind k, const std::vector<std::size_t>& dims) {
  return std::string(to_string(k)) + " " + dims_text(dims);
}

std::vector<ProtocolConfig> matrix_configs(const VerifyOptions& opt) {
  std::vector<ProtocolConfig> out;
  for (ProtocolKind k : {ProtocolKind::many_to_one, ProtocolKind::one_to_many, ProtocolKind::many_to_many,
                         ProtocolKind::two_way}) {
    for (const auto& dims : opt.dims_matrix) {
      if (k == ProtocolKind::two_way && dims.size() != 2) continue;
      ProtocolConfig c;
      c.kind = k;
      c.dims = dims;
      c.seed = opt.seed;
      out.push_back(std::move(c));
    }
  }
  return out;
}

/// Runs `body`, turning a thrown Error into a failed property.
PropertyResult property(std::string name, const std::function<std::string()>& body) {
  PropertyResult r{std::move(name), false, {}};
  try {
    r.detail = body();
    r.passed = r.detail.rfind("FAIL", 0) != 0;
  } catch (const std::exception& e) {
    r.detail = std::string("FAIL: ") + e.what();
  }
  return r;
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

std::string bell_orthonormality() {
  double gram = 0.0;
  double prob = 0.0;
  for (std::size_t d = 2; d <= 5; ++d) {
    std::vector<std::vector<Complex>> v;
    for (std::size_t i = 0; i < d * d; ++i) v.push_back(gates::bell_vector(d, gates::bell_from_index(d, i)));
    for (std::size_t a = 0; a < v.size(); ++a) {
      for (std::size_t b = 0; b < v.size(); ++b) {
        Complex ip{};
        for (std::size_t j = 0; j < v[a].size(); ++j) ip += std::conj(v[a][j]) * v[b][j];
        gram = std::max(gram, std::abs(ip - Complex(a == b ? 1.0 : 0.0)));
      }
    }
    // A random qudit measured jointly with one half of the maximally entangled pair.
    Rng rng(d);
    const StateVector joint = tensor(random_state(SiteSpec{d}, rng), gates::resource_state(d, 2));
    const std::size_t sites[2] = {0, 1};
    for (double p : outcome_probabilities(joint, sites, gates::bell_projectors(d))) {
      prob = std::max(prob, std::abs(p - 1.0 / static_cast<double>(d * d)));
    }
  }
  if (gram >= 1e-12 || prob >= 1e-12) return "FAIL: gram deviation " + fmt(gram) + ", probability deviation " + fmt(prob);
  return "d=2..5 gram deviation " + fmt(gram) + ", probability deviation " + fmt(prob);
}

std::string operator_unitarity(const VerifyOptions& opt) {
  double worst = 0.0;
  std::size_t ops = 0;
  std::size_t families = 0;
  auto check = [&](const LocalOperator& op) {
    worst = std::max(worst, op.unitarity_defect());
    ++ops;
  };
  for (const auto& dims : opt.dims_matrix) {
    const SiteSpec f(dims);
    const std::size_t d = f.total();
    check(gates::xor_gate(d));
    for (std::size_t i = 0; i < f.sites(); ++i) {
      check(gates::spread_op(f, i));
      check(gates::receiver_spread_op(f, i));
      for (std::size_t m = 0; m < d; ++m) {
        check(gates::bob_correction(f, i, m));
        for (std::size_t n = 0; n < d; ++n) check(gates::alice_correction(f, i, {m, n}));
      }
      ProjectorFamily fam(gates::receiver_projectors(f, i), 1e-10);
      ++families;
      for (std::size_t o = 0; o < fam.size(); ++o) {
        check(gates::receiver_relabel(f, i, o));
        for (std::size_t j = 0; j < f.sites(); ++j) {
          if (j == i) continue;
          check(gates::receiver_phase_correction(f, j, i, o, false));
          check(gates::receiver_phase_correction(f, j, i, o, true));
        }
      }
    }
    ProjectorFamily bell(gates::bell_projectors(d).projectors(), 1e-10);
    ++families;
  }
  if (worst >= 1e-10) return "FAIL: unitarity defect " + fmt(worst);
  return std::to_string(ops) + " operators (max defect " + fmt(worst) + "), " + std::to_string(families) +
         " complete projector families";
}

}  // namespace

VerifySummary verify_suite(const VerifyOptions& options) {
  VerifySummary summary;
  const std::vector<ProtocolConfig> configs = matrix_configs(options);

  // Main-path reports, shared by the properties below.
  std::vector<ProtocolReport> reports;
  std::string run_error;
  try {
    for (ProtocolConfig c : configs) {
      if (options.inject_fault) c.convention.sender_phase_sign = -c.convention.sender_phase_sign;
      reports.push_back(run_protocol(c));
    }
  } catch (const std::exception& e) {
    run_error = std::string("FAIL: ") + e.what();
  }

  summary.properties.push_back(property("bell_orthonormality", bell_orthonormality));
  summary.properties.push_back(property("operator_unitarity", [&] { return operator_unitarity(options); }));

  summary.properties.push_back(property("deterministic_success", [&]() -> std::string {
    if (!run_error.empty()) return run_error;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].min_fidelity < 1.0 - kFidelityTolerance) {
        return "FAIL: " + label(configs[i].kind, configs[i].dims) + " min fidelity " + fmt(reports[i].min_fidelity);
      }
    }
    return std::to_string(reports.size()) + " configurations, every branch at fidelity 1";
  }));

  summary.properties.push_back(property("probability_conservation", [&]() -> std::string {
    if (!run_error.empty()) return run_error;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const std::size_t expected = predicted_branch_count(configs[i]);
      if (std::abs(reports[i].probability_sum - 1.0) > 1e-9 || reports[i].branches.size() != expected) {
        return "FAIL: " + label(configs[i].kind, configs[i].dims) + " has " + std::to_string(reports[i].branches.size()) +
               " branches (expected " + std::to_string(expected) + "), probability sum " + fmt(reports[i].probability_sum);
      }
    }
    return "probability sums within 1e-9, branch counts as predicted";
  }));

  summary.properties.push_back(property("oracle_agreement", [&]() -> std::string {
    if (!run_error.empty()) return run_error;
    double worst = 0.0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      ProtocolConfig c = configs[i];
      c.convention = reports[i].config.convention;
      const auto oracle = enumerate_branches(c);
      const auto& main = reports[i].branches;
      if (oracle.size() != main.size()) {
        return "FAIL: " + label(c.kind, c.dims) + " oracle has " + std::to_string(oracle.size()) + " branches, main path " +
               std::to_string(main.size());
      }
      for (std::size_t b = 0; b < oracle.size(); ++b) {
        if (oracle[b].outcome != main[b].outcome) return "FAIL: " + label(c.kind, c.dims) + " branch order differs";
        worst = std::max({worst, std::abs(oracle[b].probability - main[b].probability),
                          std::abs(oracle[b].fidelity - main[b].fidelity)});
        if (oracle[b].receiver_fidelities.size() != main[b].receiver_fidelities.size()) {
          return "FAIL: " + label(c.kind, c.dims) + " receiver count differs";
        }
        for (std::size_t r = 0; r < oracle[b].receiver_fidelities.size(); ++r) {
          worst = std::max(worst, std::abs(oracle[b].receiver_fidelities[r] - main[b].receiver_fidelities[r]));
        }
      }
    }
    if (worst >= 1e-12) return "FAIL: max deviation " + fmt(worst);
    return "max deviation " + fmt(worst);
  }));

  summary.properties.push_back(property("dense_crosscheck", [&]() -> std::string {
    double worst = 0.0;
    std::size_t checked = 0;
    for (const ProtocolConfig& base : configs) {
      ProtocolConfig c = base;
      c.mode = ExecutionMode::sample();
      const CrosscheckReport r = crosscheck_run(c);
      worst = std::max(worst, r.max_deviation);
      checked += r.checked;
    }
    if (worst >= 1e-12) return "FAIL: max deviation " + fmt(worst);
    return std::to_string(checked) + " operations, max deviation " + fmt(worst);
  }));

  summary.properties.push_back(property("phase_pinning", [&]() -> std::string {
    const PinResult r = pin_phases(default_pin_cases());
    if (!(r.convention == gates::kResolvedConvention)) {
      return "FAIL: pinned " + gates::to_string(r.convention) + ", frozen " + gates::to_string(gates::kResolvedConvention);
    }
    return gates::to_string(r.convention);
  }));

  summary.properties.push_back(property("seed_reproducibility", [&]() -> std::string {
    for (const ProtocolConfig& base : configs) {
      ProtocolConfig c = base;
      c.mode = ExecutionMode::sample();
      if (report_to_string(run_protocol(c)) != report_to_string(run_protocol(c))) {
        return "FAIL: " + label(c.kind, c.dims) + " reports differ between identical runs";
      }
    }
    return "identical seeds give identical reports";
  }));

  summary.properties.push_back(property("replay_determinism", [&]() -> std::string {
    double worst = 0.0;
    for (const ProtocolConfig& base : configs) {
      ProtocolConfig c = base;
      c.mode = ExecutionMode::sample();
      const ProtocolReport rep = run_protocol(c);
      const Transcript t = transcript_from_jsonl(to_jsonl(rep.transcript));
      const ReplayResult r = replay(t, c);
      worst = std::max(worst, max_amplitude_difference(r.final_state, *rep.branches.front().final_state));
    }
    if (worst > 1e-12) return "FAIL: replayed states differ by " + fmt(worst);
    return "replayed final states within " + fmt(worst);
  }));

  return summary;
}

}  // namespace qunet::oracle
