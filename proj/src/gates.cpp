#include "qunet/gates.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qunet/error.hpp"

namespace qunet::gates {

namespace {

void require_dimension(std::size_t d) {
  if (d < 2) fail(ErrorCode::bad_dimension, "dimension must be at least 2, got " + std::to_string(d));
}

void require_digit(const SiteSpec& f, std::size_t digit, ErrorCode code) {
  if (digit >= f.sites()) {
    fail(code, "party index " + std::to_string(digit + 1) + " outside 1.." + std::to_string(f.sites()));
  }
}

std::size_t reduce(std::int64_t e, std::size_t d) {
  const auto sd = static_cast<std::int64_t>(d);
  return static_cast<std::size_t>(((e % sd) + sd) % sd);
}

/// Flat index with every digit except `skip` taken from `outcome` (mixed radix,
/// ascending position) and digit `skip` set to `own`.
std::size_t compose_label(const SiteSpec& f, std::size_t skip, std::size_t own, std::size_t outcome) {
  std::size_t t = own * f.stride(skip);
  for (std::size_t j = 0; j < f.sites(); ++j) {
    if (j == skip) continue;
    t += (outcome % f.dim(j)) * f.stride(j);
    outcome /= f.dim(j);
  }
  return t;
}

}  // namespace

Complex omega(std::size_t d, std::int64_t e) {
  require_dimension(d);
  const std::size_t r = reduce(e, d);
  if ((4 * r) % d == 0) {
    static constexpr Complex quarter[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    return quarter[4 * r / d];
  }
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(d);
  return {std::cos(angle), std::sin(angle)};
}

LocalOperator mod_add_gate(std::size_t d, std::size_t m) {
  require_dimension(d);
  std::vector<std::size_t> target(d);
  for (std::size_t l = 0; l < d; ++l) target[l] = (l + m) % d;
  return LocalOperator::monomial(std::move(target), std::vector<Complex>(d, 1.0));
}

LocalOperator phase_gate(std::size_t d, std::size_t n) {
  require_dimension(d);
  std::vector<std::size_t> target(d);
  std::vector<Complex> phase(d);
  for (std::size_t l = 0; l < d; ++l) {
    target[l] = l;
    phase[l] = omega(d, static_cast<std::int64_t>((n % d) * l));
  }
  return LocalOperator::monomial(std::move(target), std::move(phase));
}

LocalOperator xor_gate(std::size_t d) {
  require_dimension(d);
  std::vector<std::size_t> target(d * d);
  for (std::size_t l = 0; l < d; ++l) {
    for (std::size_t k = 0; k < d; ++k) target[k + d * l] = k + d * ((k + l) % d);
  }
  return LocalOperator::monomial(std::move(target), std::vector<Complex>(d * d, 1.0));
}

std::vector<Complex> bell_vector(std::size_t d, BellOutcome o) {
  require_dimension(d);
  if (o.m >= d || o.n >= d) fail(ErrorCode::bad_outcome, "Bell outcome outside [0, d)");
  std::vector<Complex> v(d * d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t l = 0; l < d; ++l) {
    v[l + d * ((l + o.m) % d)] = scale * omega(d, static_cast<std::int64_t>(o.n * l));
  }
  return v;
}

StateVector bell_state(std::size_t d, BellOutcome o) {
  return StateVector::trusted(SiteSpec{d, d}, bell_vector(d, o));
}

ProjectorFamily bell_projectors(std::size_t d) {
  std::vector<LocalOperator> family;
  family.reserve(d * d);
  for (std::size_t idx = 0; idx < d * d; ++idx) {
    family.push_back(LocalOperator::rank_one_projector(bell_vector(d, bell_from_index(d, idx))));
  }
  return ProjectorFamily(std::move(family));
}

BellMeasurement bell_measure(const StateVector& state, std::size_t site_a, std::size_t site_b, MeasureMode mode) {
  const std::size_t d = state.spec().dim(site_a);
  if (state.spec().dim(site_b) != d) fail(ErrorCode::dimension_mismatch, "Bell measurement needs equal dimensions");
  const std::size_t sites[2] = {site_a, site_b};
  MeasurementResult r = measure_with_projectors(state, sites, bell_projectors(d), mode);
  return {bell_from_index(d, r.outcome), r.probability, std::move(r.post)};
}

BellSplit bell_split(const StateVector& state, std::size_t site_a, std::size_t site_b) {
  const std::size_t d = state.spec().dim(site_a);
  if (state.spec().dim(site_b) != d) fail(ErrorCode::dimension_mismatch, "Bell measurement needs equal dimensions");
  const std::size_t sites[2] = {site_a, site_b};
  const BlockLayout lay = block_layout(state.spec(), sites);
  if (lay.rest_spec.sites() == 0) fail(ErrorCode::dimension_mismatch, "Bell split needs at least one other site");

  std::vector<Complex> conj_w(d);
  for (std::size_t e = 0; e < d; ++e) conj_w[e] = std::conj(omega(d, static_cast<std::int64_t>(e)));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  BellSplit split;
  split.rest_spec = lay.rest_spec;
  split.branches.resize(d * d);
  for (std::size_t idx = 0; idx < d * d; ++idx) {
    split.branches[idx].outcome = bell_from_index(d, idx);
    split.branches[idx].rest.resize(lay.rest.size());
  }
  const auto amps = state.amplitudes();
  std::vector<Complex> diag(d);
  for (std::size_t r = 0; r < lay.rest.size(); ++r) {
    const std::size_t base = lay.rest[r];
    for (std::size_t m = 0; m < d; ++m) {
      for (std::size_t l = 0; l < d; ++l) diag[l] = amps[base + lay.local[l + d * ((l + m) % d)]];
      for (std::size_t n = 0; n < d; ++n) {
        Complex acc{};
        for (std::size_t l = 0; l < d; ++l) acc += conj_w[(n * l) % d] * diag[l];
        split.branches[m * d + n].rest[r] = scale * acc;
      }
    }
  }
  for (BellBranch& b : split.branches) {
    double w = 0.0;
    for (const Complex& c : b.rest) w += std::norm(c);
    b.probability = w;
    if (w >= kZeroProbability) {
      const double s = 1.0 / std::sqrt(w);
      for (Complex& c : b.rest) c *= s;
    }
  }
  return split;
}

StateVector resource_state(std::size_t d, std::size_t parties, std::size_t max_dimension) {
  require_dimension(d);
  if (parties < 2) fail(ErrorCode::config_invalid, "a shared resource needs at least two parties");
  SiteSpec spec(std::vector<std::size_t>(parties, d), max_dimension);
  std::vector<Complex> amps(spec.total());
  std::size_t diagonal_step = 0;
  for (std::size_t s = 0; s < parties; ++s) diagonal_step += spec.stride(s);
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < d; ++k) amps[k * diagonal_step] = a;
  return StateVector::trusted(std::move(spec), std::move(amps));
}

StateVector embed_digit(const SiteSpec& f, std::size_t digit, const StateVector& input) {
  if (digit >= f.sites()) fail(ErrorCode::index_out_of_range, "digit position outside the factorization");
  if (input.spec().sites() != 1 || input.size() != f.dim(digit)) {
    fail(ErrorCode::dimension_mismatch, "input dimension does not match its digit");
  }
  std::vector<Complex> amps(f.total());
  for (std::size_t k = 0; k < input.size(); ++k) amps[k * f.stride(digit)] = input[k];
  return StateVector::trusted(SiteSpec{f.total()}, std::move(amps));
}

LocalOperator digit_fourier(const SiteSpec& f, std::span<const std::size_t> digits) {
  const std::size_t d = f.total();
  std::vector<bool> acted(f.sites(), false);
  double scale = 1.0;
  for (std::size_t j : digits) {
    if (j >= f.sites()) fail(ErrorCode::index_out_of_range, "digit position outside the factorization");
    acted[j] = true;
    scale /= std::sqrt(static_cast<double>(f.dim(j)));
  }
  std::vector<Complex> m(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      std::size_t exponent = 0;
      bool zero = false;
      for (std::size_t j = 0; j < f.sites() && !zero; ++j) {
        const std::size_t rj = f.digit(r, j);
        const std::size_t cj = f.digit(c, j);
        if (acted[j]) {
          exponent = (exponent + rj * cj * (d / f.dim(j))) % d;
        } else if (rj != cj) {
          zero = true;
        }
      }
      if (!zero) m[r * d + c] = scale * omega(d, static_cast<std::int64_t>(exponent));
    }
  }
  return LocalOperator::dense(d, std::move(m));
}

std::string to_string(const PhaseConvention& c) {
  auto sign = [](int s) { return s > 0 ? std::string("+") : std::string("-"); };
  return "sender_phase=" + sign(c.sender_phase_sign) + " sender_shift=" + sign(c.sender_shift_sign) +
         " scope=" + (c.scope == ShiftScope::full ? "full" : "upper_digits") +
         " receiver_phase=" + sign(c.receiver_phase_sign);
}

std::vector<PhaseConvention> candidate_conventions() {
  std::vector<PhaseConvention> out;
  for (int sp : {+1, -1}) {
    for (int ss : {+1, -1}) {
      for (ShiftScope scope : {ShiftScope::full, ShiftScope::upper_digits}) {
        for (int rp : {+1, -1}) out.push_back({sp, ss, scope, rp});
      }
    }
  }
  return out;
}

LocalOperator spread_op(const SiteSpec& f, std::size_t sender_digit) {
  require_digit(f, sender_digit, ErrorCode::bad_sender_index);
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < f.sites(); ++j) {
    if (j != sender_digit) others.push_back(j);
  }
  if (others.empty()) return LocalOperator::identity(f.total());
  return digit_fourier(f, others);
}

namespace {

/// (t - s*m) mod d
std::size_t unshift(std::size_t t, std::size_t m, int sign, std::size_t d) {
  return sign > 0 ? (t + d - m % d) % d : (t + m) % d;
}

std::size_t corrected_label(const SiteSpec& f, std::size_t digit, std::size_t t, std::size_t m,
                            const PhaseConvention& conv) {
  const std::size_t u = unshift(t, m, conv.sender_shift_sign, f.total());
  if (conv.scope == ShiftScope::full) return u;
  const std::size_t p = f.stride(digit);
  return t % p + (u - u % p);
}

}  // namespace

LocalOperator bob_correction(const SiteSpec& f, std::size_t sender_digit, std::size_t m, const PhaseConvention& conv) {
  require_digit(f, sender_digit, ErrorCode::bad_sender_index);
  const std::size_t d = f.total();
  if (m >= d) fail(ErrorCode::bad_outcome, "shift outcome outside [0, d)");
  std::vector<std::size_t> target(d);
  for (std::size_t t = 0; t < d; ++t) target[t] = corrected_label(f, sender_digit, t, m, conv);
  return LocalOperator::monomial(std::move(target), std::vector<Complex>(d, 1.0));
}

LocalOperator alice_correction(const SiteSpec& f, std::size_t sender_digit, BellOutcome o,
                               const PhaseConvention& conv) {
  require_digit(f, sender_digit, ErrorCode::bad_sender_index);
  const std::size_t d = f.total();
  if (o.m >= d || o.n >= d) fail(ErrorCode::bad_outcome, "Bell outcome outside [0, d)");
  std::vector<std::size_t> target(d);
  std::vector<Complex> phase(d);
  for (std::size_t t = 0; t < d; ++t) {
    const std::size_t u = unshift(t, o.m, conv.sender_shift_sign, d);
    target[t] = corrected_label(f, sender_digit, t, o.m, conv);
    phase[t] = omega(d, conv.sender_phase_sign * static_cast<std::int64_t>((o.n * u) % d));
  }
  return LocalOperator::monomial(std::move(target), std::move(phase));
}

LocalOperator receiver_spread_op(const SiteSpec& f, std::size_t receiver_digit) {
  require_digit(f, receiver_digit, ErrorCode::bad_receiver_index);
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < f.sites(); ++j) {
    if (j != receiver_digit) others.push_back(j);
  }
  if (others.empty()) return LocalOperator::identity(f.total());
  return digit_fourier(f, others);
}

std::size_t receiver_outcome_count(const SiteSpec& f, std::size_t receiver_digit) {
  require_digit(f, receiver_digit, ErrorCode::bad_receiver_index);
  return f.total() / f.dim(receiver_digit);
}

DigitTuple complement_assignment(const SiteSpec& f, std::size_t receiver_digit, std::size_t outcome) {
  if (outcome >= receiver_outcome_count(f, receiver_digit)) {
    fail(ErrorCode::bad_outcome, "projector outcome outside the family");
  }
  return f.decode(compose_label(f, receiver_digit, 0, outcome));
}

std::vector<LocalOperator> receiver_projectors(const SiteSpec& f, std::size_t receiver_digit) {
  const std::size_t count = receiver_outcome_count(f, receiver_digit);
  const std::size_t di = f.dim(receiver_digit);
  std::vector<LocalOperator> family;
  family.reserve(count);
  std::vector<std::size_t> support(di);
  for (std::size_t o = 0; o < count; ++o) {
    for (std::size_t k = 0; k < di; ++k) support[k] = compose_label(f, receiver_digit, k, o);
    family.push_back(LocalOperator::index_projector(f.total(), support));
  }
  return family;
}

LocalOperator receiver_relabel(const SiteSpec& f, std::size_t receiver_digit, std::size_t outcome) {
  const std::size_t count = receiver_outcome_count(f, receiver_digit);
  if (outcome >= count) fail(ErrorCode::bad_outcome, "projector outcome outside the family");
  const std::size_t d = f.total();
  const std::size_t di = f.dim(receiver_digit);
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> target(d, unset);
  for (std::size_t k = 0; k < di; ++k) target[compose_label(f, receiver_digit, k, outcome)] = k;
  std::size_t next_free = di;
  for (std::size_t t = 0; t < d; ++t) {
    if (target[t] == unset) target[t] = next_free++;
  }
  return LocalOperator::monomial(std::move(target), std::vector<Complex>(d, 1.0));
}

LocalOperator receiver_phase_correction(const SiteSpec& f, std::size_t own_digit, std::size_t peer_digit,
                                        std::size_t peer_outcome, bool own_relabelled,
                                        const PhaseConvention& conv) {
  require_digit(f, own_digit, ErrorCode::bad_receiver_index);
  require_digit(f, peer_digit, ErrorCode::bad_receiver_index);
  if (own_digit == peer_digit) fail(ErrorCode::bad_receiver_index, "a receiver does not correct for itself");
  const DigitTuple peer = complement_assignment(f, peer_digit, peer_outcome);
  const std::size_t d = f.total();
  const std::size_t dj = f.dim(own_digit);
  const std::size_t mj = peer[own_digit];
  std::vector<std::size_t> target(d);
  std::vector<Complex> phase(d);
  for (std::size_t v = 0; v < d; ++v) {
    const std::size_t k = own_relabelled ? v % dj : f.digit(v, own_digit);
    target[v] = v;
    phase[v] = omega(d, conv.receiver_phase_sign * static_cast<std::int64_t>((k * mj * (d / dj)) % d));
  }
  return LocalOperator::monomial(std::move(target), std::move(phase));
}

std::vector<LocalOperator> receiver_corrections(const SiteSpec& f, std::size_t receiver_digit, std::size_t outcome,
                                                std::span<const std::pair<std::size_t, std::size_t>> peers,
                                                const PhaseConvention& conv) {
  std::vector<LocalOperator> ops;
  ops.push_back(receiver_relabel(f, receiver_digit, outcome));
  for (const auto& [peer_digit, peer_outcome] : peers) {
    ops.push_back(receiver_phase_correction(f, receiver_digit, peer_digit, peer_outcome, true, conv));
  }
  return ops;
}

}  // namespace qunet::gates
