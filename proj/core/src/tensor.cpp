#include "gtd/tensor.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gtd {

namespace {

void check_shape(const Shape& shape) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw std::invalid_argument("tensor extents must be positive");
  }
}

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order) {
    throw std::out_of_range("mode " + std::to_string(mode) + " out of range for order " +
                            std::to_string(order));
  }
}

// Product of extents strictly below `mode`.
std::size_t stride_below(const Shape& shape, std::size_t mode) {
  std::size_t s = 1;
  for (std::size_t i = 0; i < mode; ++i) s *= shape[i];
  return s;
}

}  // namespace

std::size_t shape_size(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_ = Vector::Zero(static_cast<Eigen::Index>(shape_size(shape_)));
}

DenseTensor::DenseTensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (static_cast<std::size_t>(data_.size()) != shape_size(shape_)) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape size " + std::to_string(shape_size(shape_)));
  }
}

std::size_t DenseTensor::dim(std::size_t mode) const {
  check_mode(mode, order());
  return shape_[mode];
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw std::invalid_argument("index arity does not match tensor order");
  std::size_t linear = 0;
  for (std::size_t k = index.size(); k-- > 0;) {
    if (index[k] >= shape_[k]) throw std::out_of_range("tensor index out of range");
    linear = linear * shape_[k] + index[k];
  }
  return linear;
}

double DenseTensor::at(std::span<const std::size_t> index) const { return (*this)[linear_index(index)]; }
double& DenseTensor::at(std::span<const std::size_t> index) { return (*this)[linear_index(index)]; }

Matrix unfold(const DenseTensor& t, std::size_t mode) {
  check_mode(mode, t.order());
  const std::size_t rows = t.shape()[mode];
  const std::size_t low = stride_below(t.shape(), mode);
  const std::size_t cols = t.size() / rows;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  // linear = lo + low * (j + rows * hi); column = lo + low * hi
  const std::size_t high = cols / low;
  for (std::size_t hi = 0; hi < high; ++hi) {
    for (std::size_t j = 0; j < rows; ++j) {
      const std::size_t base = low * (j + rows * hi);
      for (std::size_t lo = 0; lo < low; ++lo) {
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(lo + low * hi)) = t[base + lo];
      }
    }
  }
  return m;
}

DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
  check_mode(mode, shape.size());
  const std::size_t rows = shape[mode];
  const std::size_t total = shape_size(shape);
  if (static_cast<std::size_t>(m.rows()) != rows ||
      static_cast<std::size_t>(m.rows() * m.cols()) != total) {
    throw std::invalid_argument("fold: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                " inconsistent with target shape at mode " + std::to_string(mode));
  }
  DenseTensor t(shape);
  const std::size_t low = stride_below(shape, mode);
  const std::size_t high = total / (rows * low);
  for (std::size_t hi = 0; hi < high; ++hi) {
    for (std::size_t j = 0; j < rows; ++j) {
      const std::size_t base = low * (j + rows * hi);
      for (std::size_t lo = 0; lo < low; ++lo) {
        t[base + lo] = m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(lo + low * hi));
      }
    }
  }
  return t;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.cols()) + ")");
  }
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.cols(); ++r) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
    }
  }
  return out;
}

Matrix khatri_rao_reversed(std::span<const Matrix> ms) {
  if (ms.empty()) throw std::invalid_argument("khatri_rao_reversed: empty factor list");
  Matrix acc = ms.back();
  for (std::size_t k = ms.size() - 1; k-- > 0;) acc = khatri_rao(acc, ms[k]);
  return acc;
}

DenseTensor mode_n_product(const DenseTensor& t, const Matrix& m, std::size_t mode) {
  check_mode(mode, t.order());
  if (static_cast<std::size_t>(m.cols()) != t.shape()[mode]) {
    throw std::invalid_argument("mode_n_product: matrix has " + std::to_string(m.cols()) +
                                " columns, tensor extent is " + std::to_string(t.shape()[mode]));
  }
  Shape out_shape = t.shape();
  out_shape[mode] = static_cast<std::size_t>(m.rows());
  if (mode == 0) {
    // Mode-0 unfolding is a reshape of the storage.
    const auto cols = static_cast<Eigen::Index>(t.size() / t.shape()[0]);
    Eigen::Map<const Matrix> x0(t.vec().data(), static_cast<Eigen::Index>(t.shape()[0]), cols);
    Matrix prod = m * x0;
    return DenseTensor(std::move(out_shape), Eigen::Map<const Vector>(prod.data(), prod.size()));
  }
  return fold(m * unfold(t, mode), mode, out_shape);
}

}  // namespace gtd
