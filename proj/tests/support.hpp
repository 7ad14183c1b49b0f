#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "qunet/error.hpp"
#include "qunet/qudit_core.hpp"

namespace testing {

using qunet::Complex;

/// Code of the qunet::Error thrown by `f`, failing the test if nothing is thrown.
template <typename F>
qunet::ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const qunet::Error& e) {
    return e.code();
  }
  FAIL("expected a qunet::Error");
  return qunet::ErrorCode::io_error;
}

/// Random dims with 1..max_sites sites of 2..max_dim levels each.
inline std::vector<std::size_t> random_dims(qunet::Rng& rng, std::size_t max_sites, std::size_t max_dim) {
  std::vector<std::size_t> dims(1 + rng.next() % max_sites);
  for (std::size_t& d : dims) d = 2 + rng.next() % (max_dim - 1);
  return dims;
}

/// Haar-ish unitary: Gram-Schmidt over Gaussian columns.
inline qunet::LocalOperator random_unitary(qunet::Rng& rng, std::size_t dim) {
  std::vector<std::vector<Complex>> cols(dim, std::vector<Complex>(dim));
  for (std::size_t c = 0; c < dim; ++c) {
    for (Complex& x : cols[c]) x = {rng.normal(), rng.normal()};
    for (std::size_t p = 0; p < c; ++p) {
      Complex ip{};
      for (std::size_t r = 0; r < dim; ++r) ip += std::conj(cols[p][r]) * cols[c][r];
      for (std::size_t r = 0; r < dim; ++r) cols[c][r] -= ip * cols[p][r];
    }
    double n = 0.0;
    for (const Complex& x : cols[c]) n += std::norm(x);
    for (Complex& x : cols[c]) x /= std::sqrt(n);
  }
  std::vector<Complex> m(dim * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) m[r * dim + c] = cols[c][r];
  }
  return qunet::LocalOperator::dense(dim, std::move(m));
}

/// Random permutation with random unit phases.
inline qunet::LocalOperator random_monomial(qunet::Rng& rng, std::size_t dim) {
  std::vector<std::size_t> target(dim);
  for (std::size_t i = 0; i < dim; ++i) target[i] = i;
  for (std::size_t i = dim; i > 1; --i) std::swap(target[i - 1], target[rng.next() % i]);
  std::vector<Complex> phase(dim);
  for (Complex& p : phase) p = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
  return qunet::LocalOperator::monomial(std::move(target), std::move(phase));
}

inline double max_diff(std::span<const Complex> a, std::span<const Complex> b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
