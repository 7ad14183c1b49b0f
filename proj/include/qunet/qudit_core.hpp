#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "qunet/local_operator.hpp"
#include "qunet/rng.hpp"

namespace qunet {

inline constexpr std::size_t kDefaultMaxDimension = 1'048'576;

using DigitTuple = std::vector<std::size_t>;

/// Ordered per-site level counts with mixed-radix strides.  Site 0 carries the
/// lowest stride (1) and site i the product of all earlier dims, so the flat
/// index of digits (k_0, k_1, ...) is sum_i k_i * stride_i.
class SiteSpec {
 public:
  SiteSpec() = default;
  explicit SiteSpec(std::vector<std::size_t> dims, std::size_t max_dimension = kDefaultMaxDimension);
  SiteSpec(std::initializer_list<std::size_t> dims) : SiteSpec(std::vector<std::size_t>(dims)) {}

  const std::vector<std::size_t>& dims() const noexcept { return layout().dims; }
  const std::vector<std::size_t>& strides() const noexcept { return layout().strides; }
  std::size_t sites() const noexcept { return layout().dims.size(); }
  std::size_t dim(std::size_t site) const { return layout().dims.at(site); }
  std::size_t stride(std::size_t site) const { return layout().strides.at(site); }
  std::size_t total() const noexcept { return layout().total; }

  std::size_t encode(std::span<const std::size_t> digits) const;
  DigitTuple decode(std::size_t index) const;
  /// Digit of `site` in the flat index, without building the full tuple.
  std::size_t digit(std::size_t index, std::size_t site) const {
    return index / layout().strides[site] % layout().dims[site];
  }

  /// Spec made of the listed sites, in the listed order.
  SiteSpec select(std::span<const std::size_t> sites) const;
  /// Spec with the listed sites removed.
  SiteSpec without(std::span<const std::size_t> sites) const;
  SiteSpec concat(const SiteSpec& other, std::size_t max_dimension = kDefaultMaxDimension) const;

  friend bool operator==(const SiteSpec& a, const SiteSpec& b) {
    return a.layout_ == b.layout_ || a.dims() == b.dims();
  }

 private:
  // Shared and immutable: specs are copied into every state and branch.
  struct Layout {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> strides;
    std::size_t total = 1;
  };
  static const Layout& empty_layout();
  const Layout& layout() const noexcept { return layout_ ? *layout_ : empty_layout(); }

  std::shared_ptr<const Layout> layout_;
};

std::size_t encode_digits(const SiteSpec& spec, std::span<const std::size_t> digits);
DigitTuple decode_digits(const SiteSpec& spec, std::size_t index);

/// Normalized pure state over a SiteSpec.  Immutable after construction; every
/// operation returns a new value.
class StateVector {
 public:
  /// Validating constructor (see make_state).
  StateVector(SiteSpec spec, std::vector<Complex> amps);

  const SiteSpec& spec() const noexcept { return spec_; }
  std::span<const Complex> amplitudes() const noexcept { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }
  std::size_t size() const noexcept { return amps_.size(); }

  double norm_squared() const;

  /// Wraps amplitudes that the caller already knows to be normalized
  /// (unitary images, explicitly renormalized projections).
  static StateVector trusted(SiteSpec spec, std::vector<Complex> amps);

 private:
  StateVector() = default;
  SiteSpec spec_;
  std::vector<Complex> amps_;
};

/// Renormalizes inputs whose norm lies in [1 - 1e-6, 1 + 1e-6].
StateVector make_state(SiteSpec spec, std::vector<Complex> amps);
StateVector basis_state(SiteSpec spec, std::span<const std::size_t> digits);
StateVector basis_state(SiteSpec spec, std::initializer_list<std::size_t> digits);
/// Haar-like random state: i.i.d. complex Gaussians, normalized.
StateVector random_state(SiteSpec spec, Rng& rng);

StateVector tensor(const StateVector& a, const StateVector& b, std::size_t max_dimension = kDefaultMaxDimension);

Complex inner_product(const StateVector& a, const StateVector& b);
double fidelity(const StateVector& a, const StateVector& b);
/// max_j |a_j - b_j|; specs must match.
double max_amplitude_difference(const StateVector& a, const StateVector& b);

/// Flat-index offsets of a block of selected sites (first listed site fastest)
/// and of every assignment of the remaining sites; an amplitude's index is
/// rest[r] + local[j].
struct BlockLayout {
  std::vector<std::size_t> local;
  std::vector<std::size_t> rest;
  SiteSpec rest_spec;
};
BlockLayout block_layout(const SiteSpec& spec, std::span<const std::size_t> sites);

enum class Check { none, verify };

StateVector apply_on_sites(const StateVector& state, std::span<const std::size_t> sites, const LocalOperator& op,
                           Check check = Check::none);
StateVector apply_on_sites(const StateVector& state, std::initializer_list<std::size_t> sites,
                           const LocalOperator& op, Check check = Check::none);

/// Unnormalized (<ray|_sites (x) I)|psi> over the remaining sites, together with
/// its squared norm.  `ray` is a vector over the joint local space of `sites`.
struct Contraction {
  double weight = 0.0;
  SiteSpec rest;
  std::vector<Complex> amps;
};
Contraction contract(const StateVector& state, std::span<const std::size_t> sites, std::span<const Complex> ray);

/// Normalized remainder after projecting `sites` onto `ray` and discarding them.
struct ProjectedOut {
  double probability = 0.0;
  StateVector rest;
};
ProjectedOut project_out(const StateVector& state, std::span<const std::size_t> sites, std::span<const Complex> ray);

/// Validated projective measurement: Hermitian, idempotent, mutually
/// orthogonal and complete within 1e-9 over the joint local space.
class ProjectorFamily {
 public:
  explicit ProjectorFamily(std::vector<LocalOperator> projectors, double tol = 1e-9);

  std::size_t size() const noexcept { return projectors_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const LocalOperator& operator[](std::size_t m) const { return projectors_[m]; }
  const std::vector<LocalOperator>& projectors() const noexcept { return projectors_; }

 private:
  std::vector<LocalOperator> projectors_;
  std::size_t dim_ = 0;
};

/// `sample` draws by inverse CDF from the generator; `branch` forces an outcome.
struct MeasureMode {
  enum class Kind { sample, branch } kind = Kind::sample;
  Rng* rng = nullptr;
  std::size_t forced = 0;

  static MeasureMode sample(Rng& r) { return {Kind::sample, &r, 0}; }
  static MeasureMode branch(std::size_t outcome) { return {Kind::branch, nullptr, outcome}; }
};

struct MeasurementResult {
  std::size_t outcome = 0;
  double probability = 0.0;
  StateVector post;
};

inline constexpr double kZeroProbability = 1e-12;

MeasurementResult measure_with_projectors(const StateVector& state, std::span<const std::size_t> sites,
                                          const ProjectorFamily& family, MeasureMode mode);
/// Probability of every outcome, in outcome order.
std::vector<double> outcome_probabilities(const StateVector& state, std::span<const std::size_t> sites,
                                          const ProjectorFamily& family);

/// Index of the first entry whose cumulative weight exceeds u * total.
std::size_t sample_index(std::span<const double> weights, double u);

}  // namespace qunet
