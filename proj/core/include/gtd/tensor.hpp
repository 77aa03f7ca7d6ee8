#ifndef GTD_TENSOR_HPP_
#define GTD_TENSOR_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gtd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

/// Number of entries described by a shape (1 for the empty shape).
std::size_t shape_size(std::span<const std::size_t> shape);

/// Dense N-way array of doubles.
///
/// Entries are linearized with the first index varying fastest, so for a
/// shape (J1, J2, J3) the entry (i1, i2, i3) lives at
/// i1 + J1 * (i2 + J2 * i3). A two-way tensor therefore shares its memory
/// layout with a column-major Matrix, and vec() is the identity on storage.
class DenseTensor {
 public:
  DenseTensor() = default;

  /// Zero-filled tensor. Every extent must be positive.
  explicit DenseTensor(Shape shape);

  /// Wraps existing data; data.size() must equal the product of the extents.
  DenseTensor(Shape shape, Vector data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(data_.size()); }
  std::size_t dim(std::size_t mode) const;

  /// Linearized entries, first index fastest.
  const Vector& vec() const noexcept { return data_; }
  Vector& vec() noexcept { return data_; }

  double operator[](std::size_t linear) const { return data_[static_cast<Eigen::Index>(linear)]; }
  double& operator[](std::size_t linear) { return data_[static_cast<Eigen::Index>(linear)]; }

  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);

  std::size_t linear_index(std::span<const std::size_t> index) const;

  double norm() const { return data_.norm(); }

  friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Vector data_;
};

/// Mode-n matricization: J_mode rows, prod_{i != mode} J_i columns. The
/// column index linearizes the remaining indices in increasing mode order,
/// first fastest. Modes are 0-based.
Matrix unfold(const DenseTensor& t, std::size_t mode);

/// Inverse of unfold for the given target shape.
DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape);

/// Column-wise Kronecker product: column r is kron(a.col(r), b.col(r)), so
/// row index i * b.rows() + j holds a(i, r) * b(j, r).
Matrix khatri_rao(const Matrix& a, const Matrix& b);

/// Khatri-Rao product of all matrices in `ms` taken in reverse order,
/// ms[last] ⊙ ... ⊙ ms[0]. The row index then linearizes the per-matrix row
/// indices with ms[0] fastest, matching the column order of unfold().
Matrix khatri_rao_reversed(std::span<const Matrix> ms);

/// t ×_mode m: replaces extent J_mode by m.rows().
DenseTensor mode_n_product(const DenseTensor& t, const Matrix& m, std::size_t mode);

/// Tensor text format: `shape: J1 ... JN` followed by the entries in layout order.
void write_tensor(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor(std::istream& is);
void save_tensor(const std::string& path, const DenseTensor& t);
DenseTensor load_tensor(const std::string& path);

}  // namespace gtd

#endif  // GTD_TENSOR_HPP_
