#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qunet/qudit_core.hpp"

/// Operators used by the teleportation protocols.
///
/// A "factorization" is a SiteSpec whose sites are the digits d_1..d_N of a
/// single d-level qudit (d = d_1 * ... * d_N); digit positions are 0-based and
/// follow the same lowest-stride-first convention as registers.
namespace qunet::gates {

struct BellOutcome {
  std::size_t m = 0;
  std::size_t n = 0;

  friend bool operator==(const BellOutcome&, const BellOutcome&) = default;
};

/// Flat index m*d + n used when a Bell outcome is one entry of a projector family.
inline std::size_t bell_index(std::size_t d, BellOutcome o) { return o.m * d + o.n; }
inline BellOutcome bell_from_index(std::size_t d, std::size_t index) { return {index / d, index % d}; }

/// exp(2*pi*i*e/d) with the exponent reduced mod d first.
Complex omega(std::size_t d, std::int64_t e);

LocalOperator mod_add_gate(std::size_t d, std::size_t m);
LocalOperator phase_gate(std::size_t d, std::size_t n);
LocalOperator xor_gate(std::size_t d);

/// Amplitudes of (1/sqrt d) sum_l w^{nl} |l>|l+m> over two d-level sites.
std::vector<Complex> bell_vector(std::size_t d, BellOutcome outcome);
StateVector bell_state(std::size_t d, BellOutcome outcome);
/// The d^2 rank-one Bell projectors, indexed by bell_index.
ProjectorFamily bell_projectors(std::size_t d);

struct BellMeasurement {
  BellOutcome outcome;
  double probability = 0.0;
  StateVector post;
};
BellMeasurement bell_measure(const StateVector& state, std::size_t site_a, std::size_t site_b, MeasureMode mode);

/// Every Bell outcome of (site_a, site_b) at once, with the measured pair
/// discarded.  Costs d^3 per amplitude of the remaining register.
struct BellBranch {
  BellOutcome outcome;
  double probability = 0.0;
  std::vector<Complex> rest;  // normalized when probability > 0
};
struct BellSplit {
  SiteSpec rest_spec;
  std::vector<BellBranch> branches;  // bell_index order
};
BellSplit bell_split(const StateVector& state, std::size_t site_a, std::size_t site_b);

/// (1/sqrt d) sum_k |k>^{(x)K}.
StateVector resource_state(std::size_t d, std::size_t parties, std::size_t max_dimension = kDefaultMaxDimension);

/// Qudit of dimension d = product of the factorization holding `input` on
/// digit `digit`, every other digit 0: sum_k a_k |k * stride(digit)>.
StateVector embed_digit(const SiteSpec& factorization, std::size_t digit, const StateVector& input);

/// Discrete Fourier transform on the listed digits, identity on the others.
LocalOperator digit_fourier(const SiteSpec& factorization, std::span<const std::size_t> digits);

// ------------------------------------------------------------------ conventions

enum class ShiftScope { full, upper_digits };

/// Sign and carry conventions for the correction unitaries.  The protocol is
/// only correct for one combination; it is pinned by the oracle's exhaustive
/// branch check and frozen in kResolvedConvention.
struct PhaseConvention {
  int sender_phase_sign = +1;
  int sender_shift_sign = +1;
  ShiftScope scope = ShiftScope::upper_digits;
  int receiver_phase_sign = -1;

  friend bool operator==(const PhaseConvention&, const PhaseConvention&) = default;
};

inline constexpr PhaseConvention kResolvedConvention{+1, +1, ShiftScope::upper_digits, -1};

std::string to_string(const PhaseConvention& c);
/// All 16 sign/scope combinations, kResolvedConvention among them.
std::vector<PhaseConvention> candidate_conventions();

// ------------------------------------------------------------- many to one

/// Sender `digit`'s spread: keeps its own digit and Fourier-transforms every
/// other digit, so |k * p_i> becomes the uniform superposition over the
/// complementary digits.
LocalOperator spread_op(const SiteSpec& factorization, std::size_t sender_digit);

/// Leg correction a downstream party applies for sender `sender_digit`'s Bell
/// result m: undoes the shift by m on digits >= sender_digit (borrowing from
/// the lower digits) and leaves the lower digits, which already carry earlier
/// senders' states, untouched.  For the first sender this is |k+m> -> |k>.
LocalOperator bob_correction(const SiteSpec& factorization, std::size_t sender_digit, std::size_t m,
                             const PhaseConvention& conv = kResolvedConvention);

/// bob_correction followed by the phase w^{n(k)} on the unshifted label:
/// |k+m> -> w^{nk} |k> for the first sender.
LocalOperator alice_correction(const SiteSpec& factorization, std::size_t sender_digit, BellOutcome outcome,
                               const PhaseConvention& conv = kResolvedConvention);

// ------------------------------------------------------------- one to many

/// Receiver `digit`'s spread: Fourier transform on every digit except its own.
LocalOperator receiver_spread_op(const SiteSpec& factorization, std::size_t receiver_digit);

/// Number of projector outcomes for a receiver: d / d_i.
std::size_t receiver_outcome_count(const SiteSpec& factorization, std::size_t receiver_digit);
/// Digit tuple of the projector outcome `outcome`: the complementary digits
/// (ascending position, lowest fastest) with the receiver's own digit set to 0.
DigitTuple complement_assignment(const SiteSpec& factorization, std::size_t receiver_digit, std::size_t outcome);

/// P_o = sum_k |t(k, o)><t(k, o)| where o fixes every digit except the
/// receiver's own.  One projector per assignment of the complementary digits.
std::vector<LocalOperator> receiver_projectors(const SiteSpec& factorization, std::size_t receiver_digit);

/// |t(k, o)> -> |k>, completed to a permutation by mapping the remaining
/// sources onto the remaining targets in increasing order.
LocalOperator receiver_relabel(const SiteSpec& factorization, std::size_t receiver_digit, std::size_t outcome);

/// Phase a receiver applies to cancel the Fourier phase left on its digit by a
/// peer's projector outcome.  `own_relabelled` selects whether the receiver's
/// register still holds the full label (digit read from it) or already holds
/// |k> (value read directly).
LocalOperator receiver_phase_correction(const SiteSpec& factorization, std::size_t own_digit, std::size_t peer_digit,
                                        std::size_t peer_outcome, bool own_relabelled,
                                        const PhaseConvention& conv = kResolvedConvention);

/// Relabel for the receiver's own outcome followed by a phase correction for
/// each (peer digit, peer outcome) pair, in the given order.
std::vector<LocalOperator> receiver_corrections(const SiteSpec& factorization, std::size_t receiver_digit,
                                                std::size_t outcome,
                                                std::span<const std::pair<std::size_t, std::size_t>> peers,
                                                const PhaseConvention& conv = kResolvedConvention);

}  // namespace qunet::gates
