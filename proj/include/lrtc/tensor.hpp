#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lrtc/execution.hpp"

namespace lrtc {

using Shape = std::vector<std::size_t>;
using Matrix = Eigen::MatrixXd;

/// Raised when a metric is undefined for its input (e.g. NMSE against an
/// all-zero reference).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

std::size_t element_count(const Shape& shape);

/// Dense N-mode real tensor.
///
/// Entries are stored in a flat buffer with the first index varying fastest:
/// entry (i_0, ..., i_{N-1}) lives at i_0 + I_0 * (i_1 + I_1 * (i_2 + ...)).
/// Modes are zero-based throughout the library.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::size_t linear_index(std::span<const std::size_t> index) const;
  double at(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }
  double& at(std::span<const std::size_t> index) { return data_[linear_index(index)]; }

  bool operator==(const DenseTensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// The observed index set Omega, stored as sorted unique linear indices
/// plus a membership bitmap for O(1) lookups.
class ObservationMask {
 public:
  ObservationMask() = default;
  /// Indices may arrive in any order; duplicates and out-of-range indices throw.
  ObservationMask(Shape shape, std::vector<std::size_t> observed);

  static ObservationMask full(Shape shape);
  static ObservationMask empty(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t total() const { return flags_.size(); }
  std::span<const std::size_t> observed() const { return observed_; }
  std::size_t observed_count() const { return observed_.size(); }
  std::vector<std::size_t> complement() const;
  double ratio() const;

  bool contains(std::size_t linear) const { return flags_[linear] != 0; }

  bool operator==(const ObservationMask& other) const {
    return shape_ == other.shape_ && observed_ == other.observed_;
  }

 private:
  Shape shape_;
  std::vector<std::size_t> observed_;
  std::vector<unsigned char> flags_;
};

/// Mode-n matricization: I_n rows, prod_{j != n} I_j columns. Entry
/// (i_0, ..., i_{N-1}) goes to row i_n and to the column obtained by
/// linearizing the remaining indices in their original order, first fastest.
Matrix unfold(const DenseTensor& t, std::size_t mode, Execution exec = Execution::parallel);

/// Inverse of unfold for the same mode and shape.
DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape,
                 Execution exec = Execution::parallel);

/// Accumulates scale * fold(m, mode, shape) into `out` without materializing
/// the folded tensor.
void fold_accumulate(const Matrix& m, std::size_t mode, double scale, DenseTensor& out,
                     Execution exec = Execution::parallel);

/// Mode-n product t x_n factor; factor has I_n columns and its row count
/// becomes the new extent of mode n.
DenseTensor mode_product(const DenseTensor& t, const Matrix& factor, std::size_t mode);

DenseTensor apply_mask(const DenseTensor& t, const ObservationMask& mask);

double frobenius_norm(const DenseTensor& t);
double squared_norm(const DenseTensor& t);

/// ||estimate - truth||_F^2 / ||truth||_F^2.
double nmse(const DenseTensor& estimate, const DenseTensor& truth);

}  // namespace lrtc
