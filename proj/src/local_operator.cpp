#include "qunet/local_operator.hpp"

#include <algorithm>
#include <cmath>

#include "qunet/error.hpp"

namespace qunet {

LocalOperator LocalOperator::dense(std::size_t dim, std::vector<Complex> row_major) {
  if (dim == 0 || row_major.size() != dim * dim) {
    fail(ErrorCode::dimension_mismatch, "dense operator needs dim*dim entries");
  }
  LocalOperator op;
  op.dim_ = dim;
  op.kind_ = Kind::dense;
  op.matrix_ = std::move(row_major);
  return op;
}

LocalOperator LocalOperator::monomial(std::vector<std::size_t> target, std::vector<Complex> phase) {
  if (target.empty() || target.size() != phase.size()) {
    fail(ErrorCode::dimension_mismatch, "monomial operator needs one target and one phase per column");
  }
  const std::size_t dim = target.size();
  std::vector<bool> hit(dim, false);
  for (std::size_t t : target) {
    if (t >= dim || hit[t]) fail(ErrorCode::non_unitary, "monomial targets must form a permutation");
    hit[t] = true;
  }
  LocalOperator op;
  op.dim_ = dim;
  op.kind_ = Kind::monomial;
  op.target_ = std::move(target);
  op.phase_ = std::move(phase);
  return op;
}

LocalOperator LocalOperator::identity(std::size_t dim) {
  std::vector<std::size_t> target(dim);
  for (std::size_t j = 0; j < dim; ++j) target[j] = j;
  return monomial(std::move(target), std::vector<Complex>(dim, Complex{1.0, 0.0}));
}

LocalOperator LocalOperator::index_projector(std::size_t dim, std::span<const std::size_t> support) {
  if (dim == 0) fail(ErrorCode::bad_dimension, "projector dimension must be positive");
  LocalOperator op;
  op.dim_ = dim;
  op.kind_ = Kind::monomial;
  op.projector_ = true;
  op.target_.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) op.target_[j] = j;
  op.phase_.assign(dim, Complex{0.0, 0.0});
  for (std::size_t s : support) {
    if (s >= dim) fail(ErrorCode::index_out_of_range, "projector support index beyond dimension");
    op.phase_[s] = Complex{1.0, 0.0};
  }
  return op;
}

LocalOperator LocalOperator::rank_one_projector(std::vector<Complex> ray) {
  if (ray.empty()) fail(ErrorCode::bad_dimension, "empty projector ray");
  double n = 0.0;
  for (const Complex& c : ray) n += std::norm(c);
  if (std::abs(n - 1.0) > 1e-9) fail(ErrorCode::not_normalizable, "rank-one projector ray must be a unit vector");
  LocalOperator op;
  op.dim_ = ray.size();
  op.kind_ = Kind::rank_one;
  op.projector_ = true;
  op.ray_ = std::move(ray);
  return op;
}

Complex LocalOperator::element(std::size_t row, std::size_t col) const {
  switch (kind_) {
    case Kind::dense:
      return matrix_[row * dim_ + col];
    case Kind::monomial:
      return target_[col] == row ? phase_[col] : Complex{};
    case Kind::rank_one:
      return ray_[row] * std::conj(ray_[col]);
  }
  return {};
}

std::vector<Complex> LocalOperator::to_dense() const {
  if (kind_ == Kind::dense) return matrix_;
  std::vector<Complex> m(dim_ * dim_);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) m[r * dim_ + c] = element(r, c);
  }
  return m;
}

LocalOperator LocalOperator::adjoint() const {
  LocalOperator out = *this;
  switch (kind_) {
    case Kind::dense:
      for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c < dim_; ++c) out.matrix_[c * dim_ + r] = std::conj(matrix_[r * dim_ + c]);
      }
      break;
    case Kind::monomial:
      if (!projector_) {
        for (std::size_t j = 0; j < dim_; ++j) {
          out.target_[target_[j]] = j;
          out.phase_[target_[j]] = std::conj(phase_[j]);
        }
      }
      break;
    case Kind::rank_one:
      break;
  }
  return out;
}

LocalOperator LocalOperator::then(const LocalOperator& next) const {
  if (next.dim_ != dim_) fail(ErrorCode::dimension_mismatch, "cannot compose operators of different dimension");
  if (kind_ == Kind::monomial && next.kind_ == Kind::monomial && !projector_ && !next.projector_) {
    std::vector<std::size_t> target(dim_);
    std::vector<Complex> phase(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
      target[j] = next.target_[target_[j]];
      phase[j] = next.phase_[target_[j]] * phase_[j];
    }
    return monomial(std::move(target), std::move(phase));
  }
  std::vector<Complex> m(dim_ * dim_);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) {
      Complex acc{};
      for (std::size_t k = 0; k < dim_; ++k) acc += next.element(r, k) * element(k, c);
      m[r * dim_ + c] = acc;
    }
  }
  return dense(dim_, std::move(m));
}

double LocalOperator::unitarity_defect() const {
  if (kind_ == Kind::monomial && !projector_) {
    double worst = 0.0;
    for (const Complex& p : phase_) worst = std::max(worst, std::abs(std::norm(p) - 1.0));
    return worst;
  }
  const std::vector<Complex> m = to_dense();
  double worst = 0.0;
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) {
      Complex acc{};
      for (std::size_t k = 0; k < dim_; ++k) acc += std::conj(m[k * dim_ + r]) * m[k * dim_ + c];
      if (r == c) acc -= 1.0;
      worst = std::max(worst, std::abs(acc));
    }
  }
  return worst;
}

void LocalOperator::apply_block(std::span<const Complex> in, std::span<Complex> out) const {
  switch (kind_) {
    case Kind::dense:
      for (std::size_t r = 0; r < dim_; ++r) {
        Complex acc{};
        const Complex* row = matrix_.data() + r * dim_;
        for (std::size_t c = 0; c < dim_; ++c) acc += row[c] * in[c];
        out[r] = acc;
      }
      break;
    case Kind::monomial:
      std::fill(out.begin(), out.end(), Complex{});
      for (std::size_t j = 0; j < dim_; ++j) out[target_[j]] += phase_[j] * in[j];
      break;
    case Kind::rank_one: {
      Complex overlap{};
      for (std::size_t j = 0; j < dim_; ++j) overlap += std::conj(ray_[j]) * in[j];
      for (std::size_t j = 0; j < dim_; ++j) out[j] = ray_[j] * overlap;
      break;
    }
  }
}

double max_abs_difference(const LocalOperator& a, const LocalOperator& b) {
  if (a.dim() != b.dim()) fail(ErrorCode::dimension_mismatch, "operators differ in dimension");
  double worst = 0.0;
  for (std::size_t r = 0; r < a.dim(); ++r) {
    for (std::size_t c = 0; c < a.dim(); ++c) worst = std::max(worst, std::abs(a.element(r, c) - b.element(r, c)));
  }
  return worst;
}

}  // namespace qunet
