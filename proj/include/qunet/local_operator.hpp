#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qunet {

using Complex = std::complex<double>;

/// Operator acting on a block of sites whose joint dimension is `dim()`.
///
/// Three storage kinds exist:
///  - dense:    row-major dim x dim matrix;
///  - monomial: column j maps to `phase[j] * |target[j]>` (a permutation with
///              per-entry phases; zero phases are only allowed for projectors,
///              where they encode an index-set projector);
///  - rank_one: the projector |v><v| for a unit vector v.
class LocalOperator {
 public:
  enum class Kind { dense, monomial, rank_one };

  static LocalOperator dense(std::size_t dim, std::vector<Complex> row_major);
  static LocalOperator monomial(std::vector<std::size_t> target, std::vector<Complex> phase);
  static LocalOperator identity(std::size_t dim);
  /// Projector onto span{|i> : i in support}.
  static LocalOperator index_projector(std::size_t dim, std::span<const std::size_t> support);
  static LocalOperator rank_one_projector(std::vector<Complex> ray);

  std::size_t dim() const noexcept { return dim_; }
  Kind kind() const noexcept { return kind_; }
  bool is_projector() const noexcept { return projector_; }

  const std::vector<std::size_t>& targets() const noexcept { return target_; }
  const std::vector<Complex>& phases() const noexcept { return phase_; }
  const std::vector<Complex>& ray() const noexcept { return ray_; }
  const std::vector<Complex>& matrix() const noexcept { return matrix_; }

  /// Matrix element <row|op|col>.
  Complex element(std::size_t row, std::size_t col) const;
  /// Row-major dense form, regardless of storage kind.
  std::vector<Complex> to_dense() const;
  LocalOperator as_dense() const { return dense(dim_, to_dense()); }

  LocalOperator adjoint() const;
  /// Operator for "apply *this, then next".
  LocalOperator then(const LocalOperator& next) const;

  /// max_ij |(U^dagger U - I)_ij|.
  double unitarity_defect() const;
  bool is_unitary(double tol = 1e-10) const { return unitarity_defect() < tol; }

  /// out = op * in for a single local block; `out` must not alias `in`.
  void apply_block(std::span<const Complex> in, std::span<Complex> out) const;

 private:
  LocalOperator() = default;

  std::size_t dim_ = 0;
  Kind kind_ = Kind::dense;
  bool projector_ = false;
  std::vector<Complex> matrix_;
  std::vector<std::size_t> target_;
  std::vector<Complex> phase_;
  std::vector<Complex> ray_;
};

/// max elementwise |a - b| over two dense matrices of the same dimension.
double max_abs_difference(const LocalOperator& a, const LocalOperator& b);

}  // namespace qunet
