// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "qunet/gates.hpp"
#include "qunet/oracle.hpp"
#include "qunet/protocols.hpp"
#include "qunet/report.hpp"

using namespace qunet;

namespace {

constexpr double kFidelityTol = 1e-9;
constexpr double kProbabilitySumTol = 1e-9;
constexpr double kGramTol = 1e-12;
constexpr double kBellProbabilityTol = 1e-12;
constexpr double kUnitarityTol = 1e-10;
constexpr double kProjectorTol = 1e-10;
constexpr double kCrosscheckTol = 1e-12;
constexpr double kReplayTol = 1e-12;

const std::vector<std::vector<std::size_t>> kDimsMatrix{{2, 2}, {2, 3}, {3, 2}, {2, 2, 2}, {2, 4}, {3, 3}};

struct Outcome {
  bool passed = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

ProtocolConfig make(ProtocolKind kind, std::vector<std::size_t> dims, std::uint64_t seed,
                    std::vector<std::size_t> recv = {}) {
  ProtocolConfig c;
  c.kind = kind;
  c.dims = std::move(dims);
  c.recv_dims = std::move(recv);
  c.seed = seed;
  return c;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

/// Runs every config in enumerate mode; worst fidelity over branches and
/// receivers, worst probability-sum deviation.
struct Sweep {
  double min_fidelity = 1.0;
  double worst_sum = 0.0;
  std::size_t runs = 0;
  std::size_t branches = 0;
  std::size_t resource_mismatches = 0;
};

Sweep sweep(const std::vector<ProtocolConfig>& configs, const std::function<bool(const ProtocolReport&)>& resources_ok) {
  Sweep s;
  for (const ProtocolConfig& c : configs) {
    const ProtocolReport r = run_protocol(c);
    ++s.runs;
    s.branches += r.branches.size();
    s.min_fidelity = std::min(s.min_fidelity, r.min_fidelity);
    for (const BranchRecord& b : r.branches) {
      for (double f : b.receiver_fidelities) s.min_fidelity = std::min(s.min_fidelity, f);
    }
    s.worst_sum = std::max(s.worst_sum, std::abs(r.probability_sum - 1.0));
    if (!resources_ok(r)) ++s.resource_mismatches;
  }
  return s;
}

Outcome judge(const Sweep& s, double seconds, double budget, const char* resource_note) {
  Outcome o;
  o.passed = s.min_fidelity >= 1.0 - kFidelityTol && s.worst_sum <= kProbabilitySumTol && s.resource_mismatches == 0 &&
             seconds < budget;
  o.detail = std::to_string(s.runs) + " runs, " + std::to_string(s.branches) + " branches, " +
             fmt("min fidelity %.15f, max |sum p - 1| %.1e", s.min_fidelity, s.worst_sum);
  if (*resource_note) o.detail += std::string(", ") + resource_note + (s.resource_mismatches ? " NOT met" : " met");
  o.detail += fmt(", %.2f s (budget %.0f s)", seconds, budget);
  return o;
}

bool any_resources(const ProtocolReport&) { return true; }

Outcome criterion_deterministic(ProtocolKind kind, double budget) {
  std::vector<ProtocolConfig> configs;
  for (const auto& dims : kDimsMatrix) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) configs.push_back(make(kind, dims, seed));
  }
  const auto t0 = Clock::now();
  const Sweep s = sweep(configs, any_resources);
  return judge(s, std::chrono::duration<double>(Clock::now() - t0).count(), budget, "");
}

Outcome criterion_many_to_many() {
  std::vector<ProtocolConfig> configs;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) configs.push_back(make(ProtocolKind::many_to_many, {2, 3}, seed, {2, 3}));
  const auto t0 = Clock::now();
  const Sweep s = sweep(configs, [](const ProtocolReport& r) {
    return r.resources.shared_qudits == 4 && r.resources.qudit_dim == 6 && r.resources.xor_ancillas == 0;
  });
  return judge(s, std::chrono::duration<double>(Clock::now() - t0).count(), 30.0, "exactly 4 shared 6-level qudits");
}

Outcome criterion_two_way() {
  std::vector<ProtocolConfig> configs;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) configs.push_back(make(ProtocolKind::two_way, {2, 3}, seed));
  const auto t0 = Clock::now();
  const Sweep s = sweep(configs, [](const ProtocolReport& r) {
    bool both = true;
    for (const BranchRecord& b : r.branches) both = both && b.receiver_fidelities.size() == 2;
    return both && r.resources.shared_qudits == 2 && r.resources.qudit_dim == 6 && r.resources.xor_ancillas == 2;
  });
  return judge(s, std::chrono::duration<double>(Clock::now() - t0).count(), 10.0,
               "one shared pair plus 2 XOR ancillas, both directions");
}

Outcome criterion_bell() {
  double gram = 0.0;
  double prob = 0.0;
  for (std::size_t d = 2; d <= 5; ++d) {
    for (std::size_t a = 0; a < d * d; ++a) {
      const auto va = gates::bell_vector(d, gates::bell_from_index(d, a));
      for (std::size_t b = 0; b < d * d; ++b) {
        const auto vb = gates::bell_vector(d, gates::bell_from_index(d, b));
        Complex ip{};
        for (std::size_t i = 0; i < va.size(); ++i) ip += std::conj(va[i]) * vb[i];
        gram = std::max(gram, std::abs(ip - Complex(a == b ? 1.0 : 0.0)));
      }
    }
    Rng rng(d);
    const StateVector reg = tensor(random_state(SiteSpec{d}, rng), gates::resource_state(d, 2));
    const std::size_t sites[] = {0, 1};
    for (double p : outcome_probabilities(reg, sites, gates::bell_projectors(d))) {
      prob = std::max(prob, std::abs(p - 1.0 / static_cast<double>(d * d)));
    }
  }
  return {gram < kGramTol && prob < kBellProbabilityTol,
          fmt("d=2..5: max Gram deviation %.1e, max |p - 1/d^2| %.1e", gram, prob)};
}

/// Every ordered factorization of every d in [2, max_d] into factors >= 2.
void factorizations(std::size_t rest, std::vector<std::size_t>& prefix, std::vector<std::vector<std::size_t>>& out) {
  if (rest == 1) {
    if (!prefix.empty()) out.push_back(prefix);
    return;
  }
  for (std::size_t f = 2; f <= rest; ++f) {
    if (rest % f) continue;
    prefix.push_back(f);
    factorizations(rest / f, prefix, out);
    prefix.pop_back();
  }
}

double projector_defect(const std::vector<LocalOperator>& family) {
  const std::size_t n = family.front().dim();
  std::vector<std::vector<Complex>> m;
  for (const LocalOperator& p : family) m.push_back(p.to_dense());
  double worst = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      Complex sum{};
      for (const auto& p : m) sum += p[r * n + c];
      worst = std::max(worst, std::abs(sum - Complex(r == c ? 1.0 : 0.0)));
    }
  }
  // P_a P_b = delta_ab P_a
  for (std::size_t a = 0; a < m.size(); ++a) {
    for (std::size_t b = 0; b < m.size(); ++b) {
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          Complex prod{};
          for (std::size_t k = 0; k < n; ++k) prod += m[a][r * n + k] * m[b][k * n + c];
          worst = std::max(worst, std::abs(prod - (a == b ? m[a][r * n + c] : Complex{})));
        }
      }
    }
  }
  return worst;
}

Outcome criterion_unitarity() {
  std::size_t operators = 0;
  std::size_t families = 0;
  double unitary = 0.0;
  double projector = 0.0;
  auto note = [&](const LocalOperator& op) {
    ++operators;
    unitary = std::max(unitary, op.unitarity_defect());
  };
  for (std::size_t d = 2; d <= 24; ++d) {
    std::vector<std::vector<std::size_t>> all;
    std::vector<std::size_t> prefix;
    factorizations(d, prefix, all);
    note(gates::mod_add_gate(d, 1));
    note(gates::phase_gate(d, 1));
    note(gates::xor_gate(d));
    for (const auto& dims : all) {
      const SiteSpec f(dims);
      for (std::size_t i = 0; i < f.sites(); ++i) {
        note(gates::spread_op(f, i));
        note(gates::receiver_spread_op(f, i));
        for (std::size_t m = 0; m < d; ++m) {
          note(gates::bob_correction(f, i, m));
          for (std::size_t n = 0; n < d; ++n) note(gates::alice_correction(f, i, {m, n}));
        }
        const std::size_t outcomes = gates::receiver_outcome_count(f, i);
        for (std::size_t o = 0; o < outcomes; ++o) {
          note(gates::receiver_relabel(f, i, o));
          for (std::size_t j = 0; j < f.sites(); ++j) {
            if (j == i) continue;
            note(gates::receiver_phase_correction(f, j, i, o, false));
            note(gates::receiver_phase_correction(f, j, i, o, true));
          }
        }
        ++families;
        projector = std::max(projector, projector_defect(gates::receiver_projectors(f, i)));
      }
    }
    if (d <= 5) {
      ++families;
      projector = std::max(projector, projector_defect(gates::bell_projectors(d).projectors()));
    }
  }
  return {unitary < kUnitarityTol && projector < kProjectorTol,
          std::to_string(operators) + " operators, max |U^dag U - I| " + fmt("%.1e; ", unitary) +
              std::to_string(families) + " projector families, max defect " + fmt("%.1e", projector)};
}

Outcome criterion_oracle() {
  double deviation = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t trajectories = 0;
  const std::vector<ProtocolConfig> base{make(ProtocolKind::many_to_one, {2, 2}, 3),
                                         make(ProtocolKind::many_to_one, {2, 2, 2}, 3),
                                         make(ProtocolKind::many_to_one, {4, 4}, 3),
                                         make(ProtocolKind::one_to_many, {2, 3}, 3),
                                         make(ProtocolKind::one_to_many, {2, 2, 2}, 3),
                                         make(ProtocolKind::many_to_many, {2, 3}, 3, {3, 2}),
                                         make(ProtocolKind::two_way, {2, 3}, 3)};
  for (ProtocolConfig c : base) {
    c.mode = ExecutionMode::sample();
    for (std::uint64_t s = 1; s <= 5; ++s) {
      c.seed = s;
      const oracle::CrosscheckReport r = oracle::crosscheck_run(c);
      deviation = std::max(deviation, r.max_deviation);
      checked += r.checked;
      skipped += r.skipped;
      ++trajectories;
    }
  }
  // Independent enumeration must agree with the executor on every probability.
  double prob_gap = 0.0;
  double sum_gap = 0.0;
  for (const ProtocolConfig& c : base) {
    // The oracle keeps every leg in one register: 16^5 and 8^7 amplitudes are
    // past its cap, so these two are covered by the trajectory sweep only.
    if (c.kind == ProtocolKind::many_to_one && c.dims.size() * c.dims.front() >= 6) continue;
    const ProtocolReport fast = run_protocol(c);
    const auto slow = oracle::enumerate_branches(c);
    if (slow.size() != fast.branches.size()) return {false, "oracle and executor enumerate different branch sets"};
    double sum = 0.0;
    for (std::size_t i = 0; i < slow.size(); ++i) {
      prob_gap = std::max(prob_gap, std::abs(slow[i].probability - fast.branches[i].probability));
      sum += slow[i].probability;
    }
    sum_gap = std::max({sum_gap, std::abs(sum - 1.0), std::abs(fast.probability_sum - 1.0)});
  }
  return {deviation < kCrosscheckTol && prob_gap < kCrosscheckTol && sum_gap < kProbabilitySumTol && checked > 0,
          std::to_string(trajectories) + " trajectories, " + std::to_string(checked) + " steps compared (" +
              std::to_string(skipped) + " above the dense limit), " +
              fmt("max deviation %.1e, max probability gap %.1e, max |sum p - 1| %.1e", deviation, prob_gap, sum_gap)};
}

Outcome criterion_phases() {
  const auto cases = oracle::default_pin_cases();
  const oracle::PinResult r = oracle::pin_phases(cases);
  std::size_t survivors = 0;
  for (const std::string& line : r.log) survivors += line.ends_with(": survives") ? 1 : 0;
  // Single-sender special case: the correction takes w^{-nk}|k+m> to |k>.
  double worst = 0.0;
  for (std::size_t d = 2; d <= 7; ++d) {
    for (std::size_t m = 0; m < d; ++m) {
      for (std::size_t n = 0; n < d; ++n) {
        const LocalOperator u = gates::alice_correction(SiteSpec{d}, 0, {m, n}, r.convention);
        for (std::size_t k = 0; k < d; ++k) {
          std::vector<Complex> in(d);
          std::vector<Complex> out(d);
          in[(k + m) % d] = gates::omega(d, -static_cast<std::int64_t>(n * k));
          u.apply_block(in, out);
          for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(out[j] - Complex(j == k ? 1.0 : 0.0)));
        }
      }
    }
  }
  return {survivors == 1 && r.convention == gates::kResolvedConvention && worst < 1e-12,
          std::to_string(survivors) + " of " + std::to_string(r.log.size()) + " candidates survive (" +
              to_string(r.convention) + "); single-sender correction deviation " + fmt("%.1e", worst)};
}

Outcome criterion_reproducibility() {
  std::size_t identical = 0;
  std::size_t total = 0;
  double worst = 0.0;
  bool outcomes_match = true;
  for (ProtocolKind kind : {ProtocolKind::many_to_one, ProtocolKind::one_to_many, ProtocolKind::many_to_many,
                            ProtocolKind::two_way}) {
    for (std::uint64_t seed : {1u, 2u, 99u}) {
      ProtocolConfig c = make(kind, {2, 3}, seed, kind == ProtocolKind::many_to_many ? std::vector<std::size_t>{3, 2}
                                                                                       : std::vector<std::size_t>{});
      for (ExecutionMode mode : {ExecutionMode::sample(), ExecutionMode::enumerate()}) {
        c.mode = mode;
        const ProtocolReport first = run_protocol(c);
        const ProtocolReport second = run_protocol(c);
        ++total;
        identical += report_to_string(first) == report_to_string(second) ? 1 : 0;
        if (mode.kind == ExecutionMode::Kind::sample) {
          const ReplayResult again = replay(first.transcript, c);
          outcomes_match = outcomes_match && again.outcomes == first.branches[0].outcome;
          worst = std::max(worst, max_amplitude_difference(again.final_state, *first.branches[0].final_state));
        }
      }
    }
  }
  return {identical == total && outcomes_match && worst <= kReplayTol,
          std::to_string(identical) + "/" + std::to_string(total) + " report pairs byte-identical; replay " +
              (outcomes_match ? "reproduces every outcome" : "CHANGED outcomes") + fmt(", max state deviation %.1e", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"many-to-one deterministic teleportation", [] { return criterion_deterministic(ProtocolKind::many_to_one, 10.0); }},
      {"one-to-many deterministic teleportation", [] { return criterion_deterministic(ProtocolKind::one_to_many, 30.0); }},
      {"many-to-many composition", criterion_many_to_many},
      {"two-way channel", criterion_two_way},
      {"Bell basis", criterion_bell},
      {"unitarity and completeness", criterion_unitarity},
      {"oracle agreement", criterion_oracle},
      {"phase pinning", criterion_phases},
      {"reproducibility", criterion_reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
