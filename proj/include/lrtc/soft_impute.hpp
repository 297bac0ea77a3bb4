#pragma once

#include <cstddef>

#include "lrtc/tensor.hpp"

namespace lrtc {

/// One Soft-Impute step on a matrix: SVT_lambda(x_prev + P_Omega(observed - x_prev)).
/// The mask indexes the matrix entries in column-major order.
Matrix soft_impute_step(const Matrix& x_prev, const Matrix& observed, const ObservationMask& omega,
                        double lambda);

struct SoftImputeResult {
  Matrix x;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Iterates soft_impute_step from the zero matrix until the relative change
/// ||x_t - x_{t-1}||_F / max(1, ||x_{t-1}||_F) drops below tol.
SoftImputeResult soft_impute(const Matrix& observed, const ObservationMask& omega, double lambda,
                             std::size_t max_iters, double tol);

}  // namespace lrtc
