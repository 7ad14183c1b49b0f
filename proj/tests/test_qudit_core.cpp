#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qunet/qudit_core.hpp"
#include "support.hpp"

using namespace qunet;
using testing::error_of;

TEST_CASE("SiteSpec strides and validation") {
  const SiteSpec s{2, 3, 2};
  CHECK(s.strides() == std::vector<std::size_t>{1, 2, 6});
  CHECK(s.total() == 12);
  CHECK(error_of([] { SiteSpec{1, 2}; }) == ErrorCode::bad_dimension);
  CHECK(error_of([] { SiteSpec(std::vector<std::size_t>{}); }) == ErrorCode::bad_dimension);
  CHECK(error_of([] { SiteSpec(std::vector<std::size_t>{1024, 1024, 2}); }) == ErrorCode::capacity_exceeded);
  CHECK(SiteSpec(std::vector<std::size_t>{1024, 1024, 2}, 1u << 21).total() == (1u << 21));
}

TEST_CASE("make_state") {
  const StateVector zero = make_state(SiteSpec{2}, {1.0, 0.0});
  CHECK(zero[0] == Complex(1.0, 0.0));
  const StateVector s = make_state(SiteSpec{2}, {0.6, Complex(0.0, 0.8)});
  CHECK(s[0] == Complex(0.6, 0.0));
  CHECK(s[1] == Complex(0.0, 0.8));
  CHECK(error_of([] { make_state(SiteSpec{3}, {1.0, 1.0, 1.0}); }) == ErrorCode::not_normalizable);
  CHECK(error_of([] { make_state(SiteSpec{3}, {0.0, 0.0, 0.0}); }) == ErrorCode::not_normalizable);
  CHECK(error_of([] { make_state(SiteSpec{3}, {1.0, 0.0}); }) == ErrorCode::dimension_mismatch);
  // Inside the window the single scalar renormalization applies.
  const StateVector r = make_state(SiteSpec{2}, {1.0 + 4e-7, 0.0});
  CHECK(r[0].real() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(error_of([] { make_state(SiteSpec{2}, {std::nan(""), 0.0}); }) == ErrorCode::not_normalizable);
}

TEST_CASE("basis_state and digit encoding") {
  CHECK(basis_state(SiteSpec{2, 2}, {1, 1})[3] == Complex(1.0));
  CHECK(basis_state(SiteSpec{2, 3}, {1, 2})[5] == Complex(1.0));
  CHECK(basis_state(SiteSpec{4}, {0})[0] == Complex(1.0));
  CHECK(error_of([] { basis_state(SiteSpec{2, 3}, {0, 3}); }) == ErrorCode::digit_out_of_range);

  const std::size_t a[] = {0, 2};
  CHECK(encode_digits(SiteSpec{2, 3}, a) == 4);
  const std::size_t b[] = {1, 1, 1};
  CHECK(encode_digits(SiteSpec{2, 3, 2}, b) == 9);
  const std::size_t c[] = {3};
  CHECK(encode_digits(SiteSpec{5}, c) == 3);

  CHECK(decode_digits(SiteSpec{2, 3}, 5) == DigitTuple{1, 2});
  CHECK(decode_digits(SiteSpec{2, 2}, 0) == DigitTuple{0, 0});
  CHECK(error_of([] { decode_digits(SiteSpec{2, 2}, 4); }) == ErrorCode::index_out_of_range);
}

TEST_CASE("decode of (3,4) index 11 matches a brute-force scan") {
  const SiteSpec s{3, 4};
  DigitTuple found;
  for (std::size_t k0 = 0; k0 < 3; ++k0) {
    for (std::size_t k1 = 0; k1 < 4; ++k1) {
      if (k0 + 3 * k1 == 11) found = {k0, k1};
    }
  }
  CHECK(decode_digits(s, 11) == found);
}

TEST_CASE("tensor") {
  const StateVector t = tensor(basis_state(SiteSpec{2}, {0}), basis_state(SiteSpec{2}, {1}));
  CHECK(t[2] == Complex(1.0));
  const double h = 1.0 / std::sqrt(2.0);
  const StateVector plus = make_state(SiteSpec{2}, {h, h});
  const StateVector pz = tensor(plus, basis_state(SiteSpec{2}, {0}));
  CHECK(testing::max_diff(pz.amplitudes(), std::vector<Complex>{h, h, 0.0, 0.0}) < 1e-15);
  const StateVector big = make_state(SiteSpec{1024}, std::vector<Complex>(1024, 1.0 / 32.0));
  CHECK(error_of([&] { tensor(big, tensor(big, plus)); }) == ErrorCode::capacity_exceeded);
}

TEST_CASE("inner product and fidelity") {
  const StateVector z = basis_state(SiteSpec{2}, {0});
  const StateVector o = basis_state(SiteSpec{2}, {1});
  CHECK(fidelity(z, z) == doctest::Approx(1.0));
  CHECK(fidelity(z, o) == doctest::Approx(0.0));
  const StateVector zp = make_state(SiteSpec{2}, {std::polar(1.0, 1.234), 0.0});
  CHECK(fidelity(z, zp) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(error_of([&] { inner_product(z, basis_state(SiteSpec{3}, {0})); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("apply_on_sites") {
  Rng rng(3);
  const StateVector s = random_state(SiteSpec{2, 3, 2}, rng);
  const std::size_t site1[] = {1};
  CHECK(testing::max_diff(apply_on_sites(s, site1, LocalOperator::identity(3)).amplitudes(), s.amplitudes()) == 0.0);

  // Bit flip on site 0 of |00> gives |10>, flat index 1.
  const LocalOperator flip = LocalOperator::monomial({1, 0}, {1.0, 1.0});
  CHECK(apply_on_sites(basis_state(SiteSpec{2, 2}, {0, 0}), {0}, flip)[1] == Complex(1.0));

  const LocalOperator u = testing::random_unitary(rng, 6);
  const std::size_t sites[] = {2, 1};
  const StateVector back = apply_on_sites(apply_on_sites(s, sites, u, Check::verify), sites, u.adjoint(), Check::verify);
  CHECK(testing::max_diff(back.amplitudes(), s.amplitudes()) < 1e-10);

  CHECK(error_of([&] { apply_on_sites(s, site1, LocalOperator::identity(2)); }) == ErrorCode::dimension_mismatch);
  const LocalOperator skew = LocalOperator::dense(3, {1, 1, 0, 0, 1, 0, 0, 0, 1});
  CHECK(error_of([&] { apply_on_sites(s, site1, skew, Check::verify); }) == ErrorCode::non_unitary);
}

TEST_CASE("measure_with_projectors") {
  const double h = 1.0 / std::sqrt(2.0);
  const StateVector plus = make_state(SiteSpec{2}, {h, h});
  const std::size_t zero[] = {0};
  const std::size_t s0[] = {0};
  const std::size_t s1[] = {1};
  const ProjectorFamily computational({LocalOperator::index_projector(2, s0), LocalOperator::index_projector(2, s1)});
  const auto p = outcome_probabilities(plus, zero, computational);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  // Index-set projectors on the first digit of a d = 4 = 2 x 2 qudit, applied to one half of a maximally entangled pair.
  const std::size_t low[] = {0, 1};
  const std::size_t high[] = {2, 3};
  const ProjectorFamily halves({LocalOperator::index_projector(4, low), LocalOperator::index_projector(4, high)});
  std::vector<Complex> pair(16);
  for (std::size_t k = 0; k < 4; ++k) pair[k * 5] = 0.5;
  const StateVector bell = make_state(SiteSpec{4, 4}, pair);
  const auto q = outcome_probabilities(bell, zero, halves);
  CHECK(q[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng(5);
  const MeasurementResult r = measure_with_projectors(bell, zero, halves, MeasureMode::branch(1));
  CHECK(r.probability == doctest::Approx(0.5));
  CHECK(std::abs(r.post[2 * 5]) == doctest::Approx(h));
  const MeasurementResult sampled = measure_with_projectors(plus, zero, computational, MeasureMode::sample(rng));
  CHECK(sampled.outcome < 2);

  const StateVector one = basis_state(SiteSpec{2}, {1});
  CHECK(error_of([&] { measure_with_projectors(one, zero, computational, MeasureMode::branch(0)); }) ==
        ErrorCode::zero_probability_branch);
  CHECK(error_of([&] { ProjectorFamily({LocalOperator::index_projector(2, s0)}); }) ==
        ErrorCode::incomplete_projector_family);
  CHECK(error_of([&] {
          ProjectorFamily({LocalOperator::index_projector(2, s0), LocalOperator::index_projector(2, s0)});
        }) == ErrorCode::incomplete_projector_family);
}

TEST_CASE("sample_index follows the inverse CDF") {
  const double w[] = {0.25, 0.5, 0.25};
  CHECK(sample_index(w, 0.0) == 0);
  CHECK(sample_index(w, 0.26) == 1);
  CHECK(sample_index(w, 0.74) == 1);
  CHECK(sample_index(w, 0.76) == 2);
}
