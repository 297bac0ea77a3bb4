#include "lrtc/svt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SVD>

namespace lrtc {

namespace {

void require_finite(const Matrix& a) {
  if (!a.allFinite()) throw std::invalid_argument("svd: matrix has non-finite entries");
}

}  // namespace

ThinSvd thin_svd(const Matrix& a) {
  require_finite(a);
  if (a.size() == 0) return {Matrix(a.rows(), 0), Eigen::VectorXd(0), Matrix(a.cols(), 0)};

  // Unfoldings are usually very short and wide; decomposing the tall
  // orientation keeps BDCSVD on its fast path.
  if (a.rows() < a.cols()) {
    Eigen::BDCSVD<Matrix> svd(a.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixV(), svd.singularValues(), svd.matrixU()};
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Shrinkage shrink(const Matrix& a, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("svt: threshold must be nonnegative");
  const ThinSvd d = thin_svd(a);

  Eigen::Index keep = 0;
  while (keep < d.s.size() && d.s[keep] > tau) ++keep;

  Shrinkage out;
  out.rank = keep;
  if (keep == 0) {
    out.value = Matrix::Zero(a.rows(), a.cols());
    return out;
  }
  const Eigen::VectorXd shrunk = d.s.head(keep).array() - tau;
  out.nuclear_norm = shrunk.sum();
  out.value.noalias() =
      d.u.leftCols(keep) * shrunk.asDiagonal() * d.v.leftCols(keep).transpose();
  return out;
}

Matrix svt(const Matrix& a, double tau) { return shrink(a, tau).value; }

double nuclear_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return thin_svd(a).s.sum();
}

double mean_nonzero_singular_value(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Eigen::VectorXd s = thin_svd(a).s;
  if (s.size() == 0 || s[0] == 0.0) return 0.0;
  const double cutoff = static_cast<double>(std::max(a.rows(), a.cols())) *
                        std::numeric_limits<double>::epsilon() * s[0];
  double sum = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff) {
      sum += s[i];
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace lrtc
