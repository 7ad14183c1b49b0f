#include "qunet/qudit_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qunet/error.hpp"

namespace qunet {

namespace {

constexpr double kNormTolerance = 1e-9;
constexpr double kRenormWindow = 1e-6;

bool is_finite(const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

double sum_norm(std::span<const Complex> amps) {
  double n = 0.0;
  for (const Complex& c : amps) n += std::norm(c);
  return n;
}

void check_sites(const SiteSpec& spec, std::span<const std::size_t> sites) {
  if (sites.empty()) fail(ErrorCode::dimension_mismatch, "no sites selected");
  std::vector<bool> seen(spec.sites(), false);
  for (std::size_t s : sites) {
    if (s >= spec.sites()) fail(ErrorCode::index_out_of_range, "site " + std::to_string(s) + " does not exist");
    if (seen[s]) fail(ErrorCode::dimension_mismatch, "site listed twice");
    seen[s] = true;
  }
}

std::vector<std::size_t> offsets_for(const SiteSpec& spec, std::span<const std::size_t> sites) {
  std::vector<std::size_t> offsets{0};
  for (std::size_t s : sites) {
    const std::size_t d = spec.dim(s);
    const std::size_t stride = spec.stride(s);
    std::vector<std::size_t> next;
    next.reserve(offsets.size() * d);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t base : offsets) next.push_back(base + k * stride);
    }
    offsets = std::move(next);
  }
  return offsets;
}

}  // namespace

BlockLayout block_layout(const SiteSpec& spec, std::span<const std::size_t> sites) {
  check_sites(spec, sites);
  std::vector<std::size_t> rest_sites;
  for (std::size_t s = 0; s < spec.sites(); ++s) {
    if (std::find(sites.begin(), sites.end(), s) == sites.end()) rest_sites.push_back(s);
  }
  BlockLayout out;
  out.local = offsets_for(spec, sites);
  out.rest = offsets_for(spec, rest_sites);
  out.rest_spec = rest_sites.empty() ? SiteSpec{} : spec.select(rest_sites);
  return out;
}

// ---------------------------------------------------------------- SiteSpec

SiteSpec::SiteSpec(std::vector<std::size_t> dims, std::size_t max_dimension) {
  if (dims.empty()) fail(ErrorCode::bad_dimension, "site list is empty");
  auto l = std::make_shared<Layout>();
  l->strides.reserve(dims.size());
  for (std::size_t d : dims) {
    if (d < 2) fail(ErrorCode::bad_dimension, "every site needs at least 2 levels, got " + std::to_string(d));
    l->strides.push_back(l->total);
    if (l->total > max_dimension / d) {
      fail(ErrorCode::capacity_exceeded, "register dimension exceeds the cap of " + std::to_string(max_dimension));
    }
    l->total *= d;
  }
  l->dims = std::move(dims);
  layout_ = std::move(l);
}

const SiteSpec::Layout& SiteSpec::empty_layout() {
  static const Layout empty;
  return empty;
}

std::size_t SiteSpec::encode(std::span<const std::size_t> digits) const {
  if (digits.size() != dims().size()) fail(ErrorCode::digit_out_of_range, "digit count does not match site count");
  std::size_t k = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (digits[i] >= dims()[i]) {
      fail(ErrorCode::digit_out_of_range,
           "digit " + std::to_string(digits[i]) + " out of range for site " + std::to_string(i));
    }
    k += digits[i] * strides()[i];
  }
  return k;
}

DigitTuple SiteSpec::decode(std::size_t index) const {
  if (index >= total()) fail(ErrorCode::index_out_of_range, "flat index " + std::to_string(index) + " >= dimension");
  DigitTuple digits(dims().size());
  for (std::size_t i = 0; i < dims().size(); ++i) {
    digits[i] = index % dims()[i];
    index /= dims()[i];
  }
  return digits;
}

SiteSpec SiteSpec::select(std::span<const std::size_t> sites) const {
  std::vector<std::size_t> d;
  d.reserve(sites.size());
  for (std::size_t s : sites) d.push_back(dims().at(s));
  return SiteSpec(std::move(d), std::numeric_limits<std::size_t>::max());
}

SiteSpec SiteSpec::without(std::span<const std::size_t> sites) const {
  std::vector<std::size_t> d;
  for (std::size_t s = 0; s < dims().size(); ++s) {
    if (std::find(sites.begin(), sites.end(), s) == sites.end()) d.push_back(dims()[s]);
  }
  return SiteSpec(std::move(d), std::numeric_limits<std::size_t>::max());
}

SiteSpec SiteSpec::concat(const SiteSpec& other, std::size_t max_dimension) const {
  std::vector<std::size_t> d = dims();
  d.insert(d.end(), other.dims().begin(), other.dims().end());
  return SiteSpec(std::move(d), max_dimension);
}

std::size_t encode_digits(const SiteSpec& spec, std::span<const std::size_t> digits) { return spec.encode(digits); }
DigitTuple decode_digits(const SiteSpec& spec, std::size_t index) { return spec.decode(index); }

// ------------------------------------------------------------- StateVector

StateVector::StateVector(SiteSpec spec, std::vector<Complex> amps) : spec_(std::move(spec)), amps_(std::move(amps)) {
  if (amps_.size() != spec_.total()) fail(ErrorCode::dimension_mismatch, "amplitude count does not match dimension");
  for (const Complex& c : amps_) {
    if (!is_finite(c)) fail(ErrorCode::not_normalizable, "non-finite amplitude");
  }
  if (std::abs(sum_norm(amps_) - 1.0) > kNormTolerance) fail(ErrorCode::not_normalizable, "state is not normalized");
}

StateVector StateVector::trusted(SiteSpec spec, std::vector<Complex> amps) {
  StateVector s;
  s.spec_ = std::move(spec);
  s.amps_ = std::move(amps);
  return s;
}

double StateVector::norm_squared() const { return sum_norm(amps_); }

StateVector make_state(SiteSpec spec, std::vector<Complex> amps) {
  if (amps.size() != spec.total()) {
    fail(ErrorCode::dimension_mismatch, "expected " + std::to_string(spec.total()) + " amplitudes, got " +
                                            std::to_string(amps.size()));
  }
  for (const Complex& c : amps) {
    if (!is_finite(c)) fail(ErrorCode::not_normalizable, "non-finite amplitude");
  }
  const double norm = std::sqrt(sum_norm(amps));
  if (norm < 1e-12 || std::abs(norm - 1.0) > kRenormWindow) {
    fail(ErrorCode::not_normalizable, "norm " + std::to_string(norm) + " is outside the renormalization window");
  }
  // Norms that are 1 up to rounding keep their amplitudes verbatim.
  if (std::abs(norm - 1.0) > 4 * std::numeric_limits<double>::epsilon()) {
    for (Complex& c : amps) c /= norm;
  }
  return StateVector::trusted(std::move(spec), std::move(amps));
}

StateVector basis_state(SiteSpec spec, std::span<const std::size_t> digits) {
  const std::size_t k = spec.encode(digits);
  std::vector<Complex> amps(spec.total());
  amps[k] = 1.0;
  return StateVector::trusted(std::move(spec), std::move(amps));
}

StateVector basis_state(SiteSpec spec, std::initializer_list<std::size_t> digits) {
  return basis_state(std::move(spec), std::span<const std::size_t>(digits.begin(), digits.size()));
}

StateVector random_state(SiteSpec spec, Rng& rng) {
  std::vector<Complex> amps(spec.total());
  for (Complex& c : amps) {
    const double re = rng.normal();
    const double im = rng.normal();
    c = Complex{re, im};
  }
  const double norm = std::sqrt(sum_norm(amps));
  for (Complex& c : amps) c /= norm;
  return StateVector::trusted(std::move(spec), std::move(amps));
}

StateVector tensor(const StateVector& a, const StateVector& b, std::size_t max_dimension) {
  SiteSpec spec = a.spec().concat(b.spec(), max_dimension);
  std::vector<Complex> amps(spec.total());
  const std::size_t na = a.size();
  for (std::size_t jb = 0; jb < b.size(); ++jb) {
    for (std::size_t ja = 0; ja < na; ++ja) amps[ja + na * jb] = a[ja] * b[jb];
  }
  return StateVector::trusted(std::move(spec), std::move(amps));
}

Complex inner_product(const StateVector& a, const StateVector& b) {
  if (!(a.spec() == b.spec())) fail(ErrorCode::dimension_mismatch, "inner product of states over different sites");
  Complex acc{};
  for (std::size_t j = 0; j < a.size(); ++j) acc += std::conj(a[j]) * b[j];
  return acc;
}

double fidelity(const StateVector& a, const StateVector& b) {
  return std::clamp(std::norm(inner_product(a, b)), 0.0, 1.0);
}

double max_amplitude_difference(const StateVector& a, const StateVector& b) {
  if (!(a.spec() == b.spec())) fail(ErrorCode::dimension_mismatch, "comparing states over different sites");
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  return worst;
}

// ------------------------------------------------------ operator application

StateVector apply_on_sites(const StateVector& state, std::span<const std::size_t> sites, const LocalOperator& op,
                           Check check) {
  bool whole = sites.size() == state.spec().sites();
  for (std::size_t i = 0; whole && i < sites.size(); ++i) whole = sites[i] == i;
  if (whole) {
    if (op.dim() != state.size()) fail(ErrorCode::dimension_mismatch, "operator dimension does not match the register");
    if (check == Check::verify && !op.is_projector() && !op.is_unitary(1e-10)) {
      fail(ErrorCode::non_unitary, "operator is not unitary within 1e-10");
    }
    std::vector<Complex> out(state.size());
    op.apply_block(state.amplitudes(), out);
    return StateVector::trusted(state.spec(), std::move(out));
  }
  const BlockLayout lay = block_layout(state.spec(), sites);
  if (lay.local.size() != op.dim()) {
    fail(ErrorCode::dimension_mismatch, "operator dimension " + std::to_string(op.dim()) +
                                            " does not match selected sites (" + std::to_string(lay.local.size()) +
                                            ")");
  }
  if (check == Check::verify && !op.is_projector() && !op.is_unitary(1e-10)) {
    fail(ErrorCode::non_unitary, "operator is not unitary within 1e-10");
  }
  std::vector<Complex> out(state.size());
  std::vector<Complex> in_block(op.dim());
  std::vector<Complex> out_block(op.dim());
  const auto amps = state.amplitudes();
  for (std::size_t base : lay.rest) {
    for (std::size_t j = 0; j < lay.local.size(); ++j) in_block[j] = amps[base + lay.local[j]];
    op.apply_block(in_block, out_block);
    for (std::size_t j = 0; j < lay.local.size(); ++j) out[base + lay.local[j]] = out_block[j];
  }
  return StateVector::trusted(state.spec(), std::move(out));
}

StateVector apply_on_sites(const StateVector& state, std::initializer_list<std::size_t> sites,
                           const LocalOperator& op, Check check) {
  return apply_on_sites(state, std::span<const std::size_t>(sites.begin(), sites.size()), op, check);
}

Contraction contract(const StateVector& state, std::span<const std::size_t> sites, std::span<const Complex> ray) {
  const BlockLayout lay = block_layout(state.spec(), sites);
  if (lay.local.size() != ray.size()) fail(ErrorCode::dimension_mismatch, "ray does not match selected sites");
  Contraction c;
  c.rest = lay.rest_spec;
  c.amps.resize(lay.rest.size());
  const auto amps = state.amplitudes();
  for (std::size_t r = 0; r < lay.rest.size(); ++r) {
    Complex acc{};
    const std::size_t base = lay.rest[r];
    for (std::size_t j = 0; j < lay.local.size(); ++j) acc += std::conj(ray[j]) * amps[base + lay.local[j]];
    c.amps[r] = acc;
  }
  c.weight = sum_norm(c.amps);
  return c;
}

ProjectedOut project_out(const StateVector& state, std::span<const std::size_t> sites, std::span<const Complex> ray) {
  if (sites.size() >= state.spec().sites()) {
    fail(ErrorCode::dimension_mismatch, "cannot project out every site of the register");
  }
  Contraction c = contract(state, sites, ray);
  if (c.weight < kZeroProbability) fail(ErrorCode::zero_probability_branch, "projection has zero probability");
  const double scale = 1.0 / std::sqrt(c.weight);
  for (Complex& a : c.amps) a *= scale;
  return {c.weight, StateVector::trusted(std::move(c.rest), std::move(c.amps))};
}

// -------------------------------------------------------------- measurement

ProjectorFamily::ProjectorFamily(std::vector<LocalOperator> projectors, double tol)
    : projectors_(std::move(projectors)) {
  if (projectors_.empty()) fail(ErrorCode::incomplete_projector_family, "empty projector family");
  dim_ = projectors_.front().dim();
  for (const LocalOperator& p : projectors_) {
    if (p.dim() != dim_) fail(ErrorCode::dimension_mismatch, "projectors act on different dimensions");
  }

  const bool all_index = std::all_of(projectors_.begin(), projectors_.end(), [](const LocalOperator& p) {
    return p.is_projector() && p.kind() == LocalOperator::Kind::monomial;
  });
  const bool all_rank_one = std::all_of(projectors_.begin(), projectors_.end(), [](const LocalOperator& p) {
    return p.kind() == LocalOperator::Kind::rank_one;
  });

  if (all_index) {
    std::vector<double> cover(dim_, 0.0);
    for (const LocalOperator& p : projectors_) {
      for (std::size_t j = 0; j < dim_; ++j) cover[j] += p.phases()[j].real();
    }
    for (double c : cover) {
      if (std::abs(c - 1.0) > tol) fail(ErrorCode::incomplete_projector_family, "index sets do not partition the space");
    }
    return;
  }
  if (all_rank_one) {
    if (projectors_.size() != dim_) {
      fail(ErrorCode::incomplete_projector_family, "rank-one family needs exactly dim members");
    }
    for (std::size_t a = 0; a < projectors_.size(); ++a) {
      for (std::size_t b = a; b < projectors_.size(); ++b) {
        Complex g{};
        for (std::size_t j = 0; j < dim_; ++j) g += std::conj(projectors_[a].ray()[j]) * projectors_[b].ray()[j];
        if (std::abs(g - (a == b ? 1.0 : 0.0)) > tol) {
          fail(ErrorCode::incomplete_projector_family, "rank-one rays are not orthonormal");
        }
      }
    }
    return;
  }

  std::vector<Complex> total(dim_ * dim_);
  std::vector<std::vector<Complex>> dense;
  dense.reserve(projectors_.size());
  for (const LocalOperator& p : projectors_) dense.push_back(p.to_dense());
  auto product_defect = [&](const std::vector<Complex>& a, const std::vector<Complex>& b, bool expect_a) {
    double worst = 0.0;
    for (std::size_t r = 0; r < dim_; ++r) {
      for (std::size_t c = 0; c < dim_; ++c) {
        Complex acc{};
        for (std::size_t k = 0; k < dim_; ++k) acc += a[r * dim_ + k] * b[k * dim_ + c];
        if (expect_a) acc -= a[r * dim_ + c];
        worst = std::max(worst, std::abs(acc));
      }
    }
    return worst;
  };
  for (std::size_t a = 0; a < dense.size(); ++a) {
    const auto& m = dense[a];
    for (std::size_t r = 0; r < dim_; ++r) {
      for (std::size_t c = 0; c < dim_; ++c) {
        if (std::abs(m[r * dim_ + c] - std::conj(m[c * dim_ + r])) > tol) {
          fail(ErrorCode::incomplete_projector_family, "projector is not Hermitian");
        }
        total[r * dim_ + c] += m[r * dim_ + c];
      }
    }
    if (product_defect(m, m, true) > tol) fail(ErrorCode::incomplete_projector_family, "projector is not idempotent");
    for (std::size_t b = a + 1; b < dense.size(); ++b) {
      if (product_defect(m, dense[b], false) > tol) {
        fail(ErrorCode::incomplete_projector_family, "projectors are not mutually orthogonal");
      }
    }
  }
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) {
      if (std::abs(total[r * dim_ + c] - (r == c ? 1.0 : 0.0)) > tol) {
        fail(ErrorCode::incomplete_projector_family, "projectors do not sum to the identity");
      }
    }
  }
}

std::vector<double> outcome_probabilities(const StateVector& state, std::span<const std::size_t> sites,
                                          const ProjectorFamily& family) {
  const BlockLayout lay = block_layout(state.spec(), sites);
  if (lay.local.size() != family.dim()) fail(ErrorCode::dimension_mismatch, "projector family does not match sites");
  std::vector<double> probs(family.size(), 0.0);
  std::vector<Complex> in_block(family.dim());
  std::vector<Complex> out_block(family.dim());
  const auto amps = state.amplitudes();
  for (std::size_t base : lay.rest) {
    for (std::size_t j = 0; j < lay.local.size(); ++j) in_block[j] = amps[base + lay.local[j]];
    for (std::size_t m = 0; m < family.size(); ++m) {
      family[m].apply_block(in_block, out_block);
      probs[m] += sum_norm(out_block);
    }
  }
  return probs;
}

std::size_t sample_index(std::span<const double> weights, double u) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double threshold = u * total;
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    if (weights[m] <= 0.0) continue;
    acc += weights[m];
    last_nonzero = m;
    if (threshold < acc) return m;
  }
  return last_nonzero;
}

MeasurementResult measure_with_projectors(const StateVector& state, std::span<const std::size_t> sites,
                                          const ProjectorFamily& family, MeasureMode mode) {
  const std::vector<double> probs = outcome_probabilities(state, sites, family);
  std::size_t outcome = 0;
  if (mode.kind == MeasureMode::Kind::branch) {
    if (mode.forced >= family.size()) fail(ErrorCode::bad_outcome, "forced outcome outside the family");
    outcome = mode.forced;
    if (probs[outcome] < kZeroProbability) {
      fail(ErrorCode::zero_probability_branch, "forced outcome " + std::to_string(outcome) + " has zero probability");
    }
  } else {
    if (mode.rng == nullptr) fail(ErrorCode::config_invalid, "sample mode needs a generator");
    outcome = sample_index(probs, mode.rng->uniform());
  }
  const StateVector projected = apply_on_sites(state, sites, family[outcome]);
  std::vector<Complex> amps(projected.amplitudes().begin(), projected.amplitudes().end());
  const double scale = 1.0 / std::sqrt(probs[outcome]);
  for (Complex& a : amps) a *= scale;
  return {outcome, probs[outcome], StateVector::trusted(state.spec(), std::move(amps))};
}

}  // namespace qunet
