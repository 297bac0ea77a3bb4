#pragma once

#include <Eigen/Dense>

#include "lrtc/tensor.hpp"

namespace lrtc {

/// a = u * diag(s) * v^T with r = min(rows, cols) columns in u and v and
/// s sorted nonincreasing. Singular vector signs are not normalized.
struct ThinSvd {
  Matrix u;
  Eigen::VectorXd s;
  Matrix v;
};

ThinSvd thin_svd(const Matrix& a);

/// Singular value thresholding: U (Sigma - tau I)_+ V^T, the proximal
/// operator of tau * ||.||_*.
Matrix svt(const Matrix& a, double tau);

/// svt() plus the nuclear norm of its result, which falls out of the
/// shrunk spectrum for free.
struct Shrinkage {
  Matrix value;
  double nuclear_norm = 0.0;
  Eigen::Index rank = 0;
};

Shrinkage shrink(const Matrix& a, double tau);

double nuclear_norm(const Matrix& a);

/// Mean of the singular values above the numerical-rank cutoff
/// (max(rows, cols) * eps * sigma_max). Zero for a zero matrix.
double mean_nonzero_singular_value(const Matrix& a);

}  // namespace lrtc
