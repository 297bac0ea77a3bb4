#include "lrtc/soft_impute.hpp"

#include <algorithm>
#include <stdexcept>

#include "lrtc/svt.hpp"

namespace lrtc {

namespace {

void check_matrix_mask(const Matrix& m, const ObservationMask& omega) {
  const Shape expected{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  if (omega.shape() != expected) throw std::invalid_argument("soft-impute: mask shape mismatch");
}

}  // namespace

Matrix soft_impute_step(const Matrix& x_prev, const Matrix& observed, const ObservationMask& omega,
                        double lambda) {
  if (x_prev.rows() != observed.rows() || x_prev.cols() != observed.cols()) {
    throw std::invalid_argument("soft-impute: shape mismatch");
  }
  check_matrix_mask(observed, omega);
  if (!(lambda >= 0.0)) throw std::invalid_argument("soft-impute: lambda must be nonnegative");
  Matrix filled = x_prev;
  for (std::size_t i : omega.observed()) {
    const auto k = static_cast<Eigen::Index>(i);
    filled(k) = observed(k);
  }
  return svt(filled, lambda);
}

SoftImputeResult soft_impute(const Matrix& observed, const ObservationMask& omega, double lambda,
                             std::size_t max_iters, double tol) {
  SoftImputeResult out;
  out.x = Matrix::Zero(observed.rows(), observed.cols());
  for (std::size_t it = 0; it < max_iters; ++it) {
    Matrix next = soft_impute_step(out.x, observed, omega, lambda);
    const double change = (next - out.x).norm() / std::max(1.0, out.x.norm());
    out.x = std::move(next);
    out.iterations = it + 1;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace lrtc
