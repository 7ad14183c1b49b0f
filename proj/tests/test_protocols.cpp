#include <cmath>

#include "doctest.h"
#include "qunet/gates.hpp"
#include "qunet/protocols.hpp"
#include "support.hpp"

using namespace qunet;
using testing::error_of;

namespace {

constexpr double kFidelityTol = 1e-9;

StateVector ket(std::size_t d, std::size_t k) { return basis_state(SiteSpec{d}, {k}); }

ProtocolConfig config(ProtocolKind kind, std::vector<std::size_t> dims, std::vector<StateVector> inputs = {},
                      std::optional<std::uint64_t> seed = std::nullopt) {
  ProtocolConfig c;
  c.kind = kind;
  c.dims = std::move(dims);
  c.inputs = std::move(inputs);
  c.seed = seed;
  return c;
}

void check_all_branches_perfect(const ProtocolReport& r) {
  CHECK(r.min_fidelity >= 1.0 - kFidelityTol);
  CHECK(r.probability_sum == doctest::Approx(1.0).epsilon(1e-9));
  for (const BranchRecord& b : r.branches) {
    for (double f : b.receiver_fidelities) CHECK(f >= 1.0 - kFidelityTol);
  }
}

/// |<a|b>| for amplitude lists, insensitive to a global phase.
double overlap(std::span<const Complex> a, std::span<const Complex> b) {
  REQUIRE(a.size() == b.size());
  Complex ip{};
  for (std::size_t i = 0; i < a.size(); ++i) ip += std::conj(a[i]) * b[i];
  return std::abs(ip);
}

}  // namespace

TEST_CASE("protocol names and modes") {
  CHECK(parse_protocol_kind("many-to-one") == ProtocolKind::many_to_one);
  CHECK(parse_protocol_kind("two_way") == ProtocolKind::two_way);
  CHECK(to_string(ProtocolKind::many_to_many) == "many-to-many");
  CHECK(error_of([] { parse_protocol_kind("all-to-all"); }) == ErrorCode::config_invalid);

  CHECK(parse_mode("enumerate") == ExecutionMode::enumerate());
  CHECK(parse_mode("sample") == ExecutionMode::sample());
  CHECK(parse_mode("branch=3,0,1") == ExecutionMode::branch({3, 0, 1}));
  CHECK(parse_mode("branch=(3,0),1") == ExecutionMode::branch({3, 0, 1}));
  CHECK(to_string(ExecutionMode::branch({3, 0, 1})) == "branch=3,0,1");
  CHECK(error_of([] { parse_mode("branch="); }) == ErrorCode::config_invalid);
  CHECK(error_of([] { parse_mode("branch=1,x"); }) == ErrorCode::config_invalid);
  CHECK(error_of([] { parse_mode("everything"); }) == ErrorCode::config_invalid);
}

TEST_CASE("expected encoded state") {
  const std::vector<StateVector> zeros{ket(2, 0), ket(2, 0)};
  CHECK(expected_encoded_state(zeros, SiteSpec{2, 2})[0] == Complex(1.0));
  const std::vector<StateVector> one_two{ket(2, 1), ket(3, 2)};
  CHECK(expected_encoded_state(one_two, SiteSpec{2, 3})[5] == Complex(1.0));

  Rng rng(8);
  const std::vector<StateVector> in{random_state(SiteSpec{3}, rng), random_state(SiteSpec{2}, rng), random_state(SiteSpec{2}, rng)};
  const StateVector e = expected_encoded_state(in, SiteSpec{3, 2, 2});
  double worst = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t c = 0; c < 2; ++c) worst = std::max(worst, std::abs(e[a + 3 * b + 6 * c] - in[0][a] * in[1][b] * in[2][c]));
    }
  }
  CHECK(worst < 1e-15);
  CHECK(error_of([&] { expected_encoded_state(one_two, SiteSpec{2, 2}); }) == ErrorCode::dimension_mismatch);
  CHECK(error_of([&] { expected_encoded_state(one_two, SiteSpec{2, 3, 2}); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("configuration validation") {
  CHECK(error_of([] { run_protocol(config(ProtocolKind::many_to_one, {1, 2}, {}, 1)); }) == ErrorCode::bad_dimension);
  CHECK(error_of([] { run_protocol(config(ProtocolKind::many_to_one, {}, {}, 1)); }) == ErrorCode::config_invalid);
  CHECK(error_of([] { run_protocol(config(ProtocolKind::many_to_one, {2, 2})); }) == ErrorCode::config_invalid);
  CHECK(error_of([] { run_protocol(config(ProtocolKind::many_to_one, {2, 2}, {ket(2, 0)})); }) == ErrorCode::config_invalid);
  CHECK(error_of([] { run_protocol(config(ProtocolKind::many_to_one, {2, 2}, {ket(2, 0), ket(3, 0)})); }) ==
        ErrorCode::config_invalid);
  CHECK(error_of([] { run_protocol(config(ProtocolKind::two_way, {2, 3, 2}, {}, 1)); }) == ErrorCode::config_invalid);
  ProtocolConfig m2m = config(ProtocolKind::many_to_many, {2, 3}, {}, 1);
  m2m.recv_dims = {2, 2};
  CHECK(error_of([&] { run_protocol(m2m); }) == ErrorCode::config_invalid);
  ProtocolConfig stray = config(ProtocolKind::many_to_one, {2, 3}, {}, 1);
  stray.recv_dims = {6};
  CHECK(error_of([&] { run_protocol(stray); }) == ErrorCode::config_invalid);
  ProtocolConfig unseeded = config(ProtocolKind::many_to_one, {2}, {ket(2, 0)});
  unseeded.mode = ExecutionMode::sample();
  CHECK(error_of([&] { run_protocol(unseeded); }) == ErrorCode::config_invalid);
  ProtocolConfig small = config(ProtocolKind::many_to_one, {4, 4, 4}, {}, 1);
  small.max_dimension = 1000;
  CHECK(error_of([&] { run_protocol(small); }) == ErrorCode::capacity_exceeded);
}

TEST_CASE("many to one") {
  SUBCASE("zero inputs stay at index 0") {
    const ProtocolReport r = run_protocol(config(ProtocolKind::many_to_one, {2, 2}, {ket(2, 0), ket(2, 0)}));
    CHECK(r.branches.size() == 256);
    check_all_branches_perfect(r);
    ProtocolConfig c = config(ProtocolKind::many_to_one, {2, 2}, {ket(2, 0), ket(2, 0)}, 4);
    c.mode = ExecutionMode::sample();
    const ProtocolReport s = run_protocol(c);
    REQUIRE(s.branches.size() == 1);
    REQUIRE(s.branches[0].final_state);
    CHECK(std::abs((*s.branches[0].final_state)[0]) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("two random qubits land at (ac, bc, ad, bd)") {
    Rng rng(21);
    const StateVector x = random_state(SiteSpec{2}, rng);
    const StateVector y = random_state(SiteSpec{2}, rng);
    const std::vector<Complex> want{x[0] * y[0], x[1] * y[0], x[0] * y[1], x[1] * y[1]};
    for (std::size_t b1 : {0u, 5u, 15u}) {
      for (std::size_t b2 : {0u, 9u, 14u}) {
        ProtocolConfig c = config(ProtocolKind::many_to_one, {2, 2}, {x, y});
        c.mode = ExecutionMode::branch({b1, b2});
        const ProtocolReport r = run_protocol(c);
        REQUIRE(r.branches.size() == 1);
        REQUIRE(r.branches[0].final_state);
        CHECK(overlap(r.branches[0].final_state->amplitudes(), want) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.branches[0].probability == doctest::Approx(1.0 / 256).epsilon(1e-12));
      }
    }
  }
  SUBCASE("one sender is plain teleportation") {
    const ProtocolReport r = run_protocol(config(ProtocolKind::many_to_one, {2}, {}, 9));
    CHECK(r.branches.size() == 4);
    for (const BranchRecord& b : r.branches) CHECK(b.probability == doctest::Approx(0.25).epsilon(1e-12));
    check_all_branches_perfect(r);
    CHECK(r.resources.shared_qudits == 2);
    CHECK(r.measurement_count == 1);
  }
  SUBCASE("mixed dimensions") {
    for (const auto& dims : std::vector<std::vector<std::size_t>>{{2, 3}, {3, 2}, {2, 2, 2}}) {
      check_all_branches_perfect(run_protocol(config(ProtocolKind::many_to_one, dims, {}, 2)));
    }
  }
}

TEST_CASE("one to many") {
  SUBCASE("zero inputs") {
    const ProtocolReport r = run_protocol(config(ProtocolKind::one_to_many, {2, 2}, {ket(2, 0), ket(2, 0)}));
    CHECK(r.branches.size() == 64);
    check_all_branches_perfect(r);
  }
  SUBCASE("branch count is d^2 times every projector family size") {
    const ProtocolReport r = run_protocol(config(ProtocolKind::one_to_many, {2, 3}, {}, 6));
    CHECK(r.branches.size() == 36 * 3 * 2);
    CHECK(r.measurement_count == 3);
    check_all_branches_perfect(r);
    REQUIRE(r.receivers.size() == 2);
    for (const BranchRecord& b : r.branches) CHECK(b.receiver_fidelities.size() == 2);
  }
  SUBCASE("trivial outcomes need only relabelings") {
    ProtocolConfig c = config(ProtocolKind::one_to_many, {2, 3}, {}, 6);
    c.mode = ExecutionMode::branch({0, 0, 0});
    const ProtocolReport r = run_protocol(c);
    REQUIRE(r.branches.size() == 1);
    CHECK(r.branches[0].fidelity >= 1.0 - kFidelityTol);
  }
  SUBCASE("resources") {
    const ProtocolReport r = run_protocol(config(ProtocolKind::one_to_many, {2, 2, 3}, {}, 1));
    CHECK(r.resources.shared_qudits == 4);
    CHECK(r.resources.qudit_dim == 12);
    check_all_branches_perfect(r);
  }
}

TEST_CASE("many to many") {
  SUBCASE("basis inputs") {
    ProtocolConfig c = config(ProtocolKind::many_to_many, {2, 2}, {ket(2, 0), ket(2, 1)});
    c.recv_dims = {2, 2};
    const ProtocolReport r = run_protocol(c);
    check_all_branches_perfect(r);
    CHECK(r.resources.shared_qudits == 4);
  }
  SUBCASE("mixed dimensions on both sides") {
    ProtocolConfig c = config(ProtocolKind::many_to_many, {2, 3}, {}, 12);
    c.recv_dims = {2, 3};
    const ProtocolReport r = run_protocol(c);
    check_all_branches_perfect(r);
    CHECK(r.resources.shared_qudits == 4);
    CHECK(r.resources.qudit_dim == 6);
    CHECK(r.resources.xor_ancillas == 0);
  }
}

TEST_CASE("two-way channel") {
  SUBCASE("basis inputs cross over") {
    ProtocolConfig c = config(ProtocolKind::two_way, {2, 2}, {ket(2, 1), ket(2, 0)}, 3);
    c.mode = ExecutionMode::sample();
    const ProtocolReport r = run_protocol(c);
    REQUIRE(r.branches.size() == 1);
    REQUIRE(r.branches[0].receiver_fidelities.size() == 2);
    for (double f : r.branches[0].receiver_fidelities) CHECK(f >= 1.0 - kFidelityTol);
  }
  SUBCASE("one pair plus two XOR ancillas") {
    const ProtocolReport r = run_protocol(config(ProtocolKind::two_way, {2, 3}, {}, 1));
    check_all_branches_perfect(r);
    CHECK(r.resources.shared_qudits == 2);
    CHECK(r.resources.qudit_dim == 6);
    CHECK(r.resources.xor_ancillas == 2);
  }
}

TEST_CASE("XOR onto |0> grows the shared pair into a GHZ-like resource") {
  for (std::size_t d = 2; d <= 6; ++d) {
    StateVector s = tensor(gates::resource_state(d, 2), ket(d, 0));
    s = apply_on_sites(s, {1, 2}, gates::xor_gate(d));
    CHECK(testing::max_diff(s.amplitudes(), gates::resource_state(d, 3).amplitudes()) < 1e-15);
  }
}

TEST_CASE("sampling is reproducible") {
  ProtocolConfig c = config(ProtocolKind::one_to_many, {2, 3}, {}, 77);
  c.mode = ExecutionMode::sample();
  const ProtocolReport a = run_protocol(c);
  const ProtocolReport b = run_protocol(c);
  CHECK(a.branches[0].outcome == b.branches[0].outcome);
  CHECK(a.transcript == b.transcript);
  CHECK(testing::max_diff(a.branches[0].final_state->amplitudes(), b.branches[0].final_state->amplitudes()) == 0.0);
}

TEST_CASE("replay") {
  for (ProtocolKind kind : {ProtocolKind::many_to_one, ProtocolKind::one_to_many, ProtocolKind::many_to_many,
                            ProtocolKind::two_way}) {
    ProtocolConfig c = config(kind, {2, 3}, {}, 31);
    if (kind == ProtocolKind::many_to_many) c.recv_dims = {3, 2};
    c.mode = ExecutionMode::sample();
    const ProtocolReport r = run_protocol(c);
    const ReplayResult again = replay(r.transcript, c);
    CHECK(again.outcomes == r.branches[0].outcome);
    CHECK(testing::max_diff(again.final_state.amplitudes(), r.branches[0].final_state->amplitudes()) <= 1e-12);
    CHECK(again.fidelity >= 1.0 - kFidelityTol);

    // Different inputs: every outcome is still possible, only the state changes.
    ProtocolConfig other = c;
    other.seed = 32;
    CHECK(replay(r.transcript, other).fidelity >= 1.0 - kFidelityTol);
  }
}

TEST_CASE("tampered transcripts are rejected") {
  ProtocolConfig c = config(ProtocolKind::many_to_one, {2, 2}, {}, 5);
  c.mode = ExecutionMode::sample();
  const ProtocolReport r = run_protocol(c);
  REQUIRE(r.transcript.size() == 2);

  auto rebuilt = [&](auto edit) {
    Transcript t;
    for (std::size_t i = 0; i < r.transcript.size(); ++i) {
      ClassicalMessage m = r.transcript.messages()[i];
      edit(i, m);
      t.append(m);
    }
    return t;
  };
  const Transcript out_of_range = rebuilt([](std::size_t i, ClassicalMessage& m) { if (i == 0) m.payload.m = 4; });
  CHECK(error_of([&] { replay(out_of_range, c); }) == ErrorCode::transcript_mismatch);
  const Transcript wrong_sender = rebuilt([](std::size_t i, ClassicalMessage& m) { if (i == 1) m.from.index = 1; });
  CHECK(error_of([&] { replay(wrong_sender, c); }) == ErrorCode::transcript_mismatch);
  const Transcript wrong_kind =
      rebuilt([](std::size_t i, ClassicalMessage& m) { if (i == 0) m.payload.kind = Payload::Kind::projector; });
  CHECK(error_of([&] { replay(wrong_kind, c); }) == ErrorCode::transcript_mismatch);
  Transcript short_one;
  short_one.append(r.transcript.messages()[0]);
  CHECK(error_of([&] { replay(short_one, c); }) == ErrorCode::transcript_mismatch);
}

TEST_CASE("enumeration refuses oversized plans") {
  CHECK(error_of([] { run_protocol(config(ProtocolKind::many_to_one, {3, 3, 3}, {}, 1)); }) ==
        ErrorCode::branch_explosion);
  ProtocolConfig sampled = config(ProtocolKind::many_to_one, {3, 3, 3}, {}, 1);
  sampled.mode = ExecutionMode::sample();
  CHECK(error_of([&] { run_protocol(sampled); }) == ErrorCode::capacity_exceeded);
}
