#include "lrtc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace lrtc {

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor order must be at least 1");
  for (std::size_t e : shape) {
    if (e == 0) throw std::invalid_argument("tensor extents must be positive");
  }
}

// A tensor seen from mode n is a (left, I_n, right) block where left collects
// the modes before n and right the modes after it.
struct ModeSplit {
  std::size_t left = 1;
  std::size_t extent = 1;
  std::size_t right = 1;
};

ModeSplit split_at(const Shape& shape, std::size_t mode) {
  if (mode >= shape.size()) {
    throw std::out_of_range("mode " + std::to_string(mode) + " out of range for order " +
                            std::to_string(shape.size()));
  }
  ModeSplit s;
  for (std::size_t j = 0; j < mode; ++j) s.left *= shape[j];
  s.extent = shape[mode];
  for (std::size_t j = mode + 1; j < shape.size(); ++j) s.right *= shape[j];
  return s;
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(element_count(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != element_count(shape_)) {
    throw std::invalid_argument("buffer length does not match tensor shape");
  }
}

DenseTensor DenseTensor::filled(Shape shape, double value) {
  DenseTensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw std::invalid_argument("index arity mismatch");
  std::size_t linear = 0;
  for (std::size_t k = index.size(); k-- > 0;) {
    if (index[k] >= shape_[k]) throw std::out_of_range("tensor index out of range");
    linear = linear * shape_[k] + index[k];
  }
  return linear;
}

ObservationMask::ObservationMask(Shape shape, std::vector<std::size_t> observed)
    : shape_(std::move(shape)), observed_(std::move(observed)) {
  check_shape(shape_);
  flags_.assign(element_count(shape_), 0);
  std::sort(observed_.begin(), observed_.end());
  for (std::size_t k = 0; k < observed_.size(); ++k) {
    if (observed_[k] >= flags_.size()) throw std::out_of_range("mask index out of range");
    if (k > 0 && observed_[k] == observed_[k - 1]) {
      throw std::invalid_argument("duplicate mask index " + std::to_string(observed_[k]));
    }
    flags_[observed_[k]] = 1;
  }
}

ObservationMask ObservationMask::full(Shape shape) {
  std::vector<std::size_t> all(element_count(shape));
  std::iota(all.begin(), all.end(), std::size_t{0});
  return ObservationMask(std::move(shape), std::move(all));
}

ObservationMask ObservationMask::empty(Shape shape) { return ObservationMask(std::move(shape), {}); }

std::vector<std::size_t> ObservationMask::complement() const {
  std::vector<std::size_t> out;
  out.reserve(flags_.size() - observed_.size());
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (!flags_[i]) out.push_back(i);
  }
  return out;
}

double ObservationMask::ratio() const {
  return static_cast<double>(observed_.size()) / static_cast<double>(flags_.size());
}

Matrix unfold(const DenseTensor& t, std::size_t mode, Execution exec) {
  const ModeSplit s = split_at(t.shape(), mode);
  const auto L = static_cast<std::ptrdiff_t>(s.left);
  const auto In = static_cast<std::ptrdiff_t>(s.extent);
  const auto R = static_cast<std::ptrdiff_t>(s.right);
  Matrix out(In, L * R);
  const double* src = t.data().data();
  double* dst = out.data();

#pragma omp parallel for collapse(2) schedule(static) if (is_parallel(exec))
  for (std::ptrdiff_t r = 0; r < R; ++r) {
    for (std::ptrdiff_t i = 0; i < In; ++i) {
      const double* from = src + L * (i + In * r);
      for (std::ptrdiff_t l = 0; l < L; ++l) {
        dst[i + In * (l + L * r)] = from[l];
      }
    }
  }
  return out;
}

void fold_accumulate(const Matrix& m, std::size_t mode, double scale, DenseTensor& out,
                     Execution exec) {
  const ModeSplit s = split_at(out.shape(), mode);
  if (static_cast<std::size_t>(m.rows()) != s.extent ||
      static_cast<std::size_t>(m.cols()) != s.left * s.right) {
    throw std::invalid_argument("matrix dimensions do not match mode unfolding of shape");
  }
  const auto L = static_cast<std::ptrdiff_t>(s.left);
  const auto In = static_cast<std::ptrdiff_t>(s.extent);
  const auto R = static_cast<std::ptrdiff_t>(s.right);
  const double* src = m.data();
  double* dst = out.data().data();

#pragma omp parallel for collapse(2) schedule(static) if (is_parallel(exec))
  for (std::ptrdiff_t r = 0; r < R; ++r) {
    for (std::ptrdiff_t i = 0; i < In; ++i) {
      double* to = dst + L * (i + In * r);
      for (std::ptrdiff_t l = 0; l < L; ++l) {
        to[l] += scale * src[i + In * (l + L * r)];
      }
    }
  }
}

DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape, Execution exec) {
  const ModeSplit s = split_at(shape, mode);
  if (static_cast<std::size_t>(m.rows()) != s.extent ||
      static_cast<std::size_t>(m.cols()) != s.left * s.right) {
    throw std::invalid_argument("matrix dimensions do not match mode unfolding of shape");
  }
  const auto L = static_cast<std::ptrdiff_t>(s.left);
  const auto In = static_cast<std::ptrdiff_t>(s.extent);
  const auto R = static_cast<std::ptrdiff_t>(s.right);
  DenseTensor out(shape);
  const double* src = m.data();
  double* dst = out.data().data();

#pragma omp parallel for collapse(2) schedule(static) if (is_parallel(exec))
  for (std::ptrdiff_t r = 0; r < R; ++r) {
    for (std::ptrdiff_t i = 0; i < In; ++i) {
      double* to = dst + L * (i + In * r);
      for (std::ptrdiff_t l = 0; l < L; ++l) {
        to[l] = src[i + In * (l + L * r)];
      }
    }
  }
  return out;
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& factor, std::size_t mode) {
  if (mode >= t.order()) throw std::out_of_range("mode_product: mode out of range");
  if (static_cast<std::size_t>(factor.cols()) != t.extent(mode)) {
    throw std::invalid_argument("mode_product: factor columns must match the mode extent");
  }
  Shape shape = t.shape();
  shape[mode] = static_cast<std::size_t>(factor.rows());
  const Matrix product = factor * unfold(t, mode);
  return fold(product, mode, shape);
}

DenseTensor apply_mask(const DenseTensor& t, const ObservationMask& mask) {
  if (t.shape() != mask.shape()) throw std::invalid_argument("mask shape does not match tensor");
  DenseTensor out(t.shape());
  for (std::size_t i : mask.observed()) out[i] = t[i];
  return out;
}

double squared_norm(const DenseTensor& t) {
  double sum = 0.0;
  for (double v : t.data()) sum += v * v;
  return sum;
}

double frobenius_norm(const DenseTensor& t) { return std::sqrt(squared_norm(t)); }

double nmse(const DenseTensor& estimate, const DenseTensor& truth) {
  if (estimate.shape() != truth.shape()) throw std::invalid_argument("nmse: shape mismatch");
  const double denom = squared_norm(truth);
  if (denom == 0.0) throw UndefinedMetric("nmse: reference tensor is all zero");
  double num = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = estimate[i] - truth[i];
    num += d * d;
  }
  return num / denom;
}

}  // namespace lrtc
