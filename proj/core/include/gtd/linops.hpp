#ifndef GTD_LINOPS_HPP_
#define GTD_LINOPS_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gtd/tensor.hpp"

namespace gtd {

/// Observation map A: R^J -> R^I.
///
/// The public forward/adjoint/gram entry points validate vector lengths and
/// dispatch to the concrete implementation. Operators are immutable after
/// construction.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  std::size_t in_dim() const noexcept { return in_dim_; }
  std::size_t out_dim() const noexcept { return out_dim_; }

  Vector forward(const Vector& x) const;
  Vector adjoint(const Vector& u) const;
  /// A^T A x.
  Vector gram(const Vector& x) const;

  virtual std::string name() const = 0;

 protected:
  LinearOperator(std::size_t in_dim, std::size_t out_dim);

 private:
  virtual Vector apply_forward(const Vector& x) const = 0;
  virtual Vector apply_adjoint(const Vector& u) const = 0;
  virtual Vector apply_gram(const Vector& x) const { return apply_adjoint(apply_forward(x)); }

  std::size_t in_dim_;
  std::size_t out_dim_;
};

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(std::size_t dim);
  std::string name() const override { return "identity"; }

 private:
  Vector apply_forward(const Vector& x) const override { return x; }
  Vector apply_adjoint(const Vector& u) const override { return u; }
  Vector apply_gram(const Vector& x) const override { return x; }
};

/// Keeps the listed entries of x, in increasing index order.
class MaskOperator final : public LinearOperator {
 public:
  /// `kept` must be strictly increasing and below in_dim.
  MaskOperator(std::size_t in_dim, std::vector<std::size_t> kept);

  const std::vector<std::size_t>& kept() const noexcept { return kept_; }
  std::string name() const override { return "mask"; }

 private:
  Vector apply_forward(const Vector& x) const override;
  Vector apply_adjoint(const Vector& u) const override;
  Vector apply_gram(const Vector& x) const override;

  std::vector<std::size_t> kept_;
};

/// Keeps floor(fraction * in_dim) entries chosen uniformly without replacement.
MaskOperator random_mask(std::size_t in_dim, double fraction, std::uint64_t seed);

/// 2-D correlation with an h x w kernel over the first two modes, applied
/// independently to every slice of the remaining modes. Boundaries wrap
/// around (circular), so the adjoint is the same filter with the kernel
/// flipped. The kernel is anchored at (h / 2, w / 2).
class BlurOperator final : public LinearOperator {
 public:
  BlurOperator(Shape shape, Matrix kernel);

  const Matrix& kernel() const noexcept { return kernel_; }
  std::string name() const override { return "blur"; }

 private:
  Vector apply_forward(const Vector& x) const override;
  Vector apply_adjoint(const Vector& u) const override;
  Vector correlate(const Vector& x, bool flipped) const;

  Shape shape_;
  Matrix kernel_;
};

/// Normalized (unit-sum) isotropic Gaussian kernel of odd or even `size`.
Matrix gaussian_kernel(std::size_t size, double sigma);

/// Non-overlapping s x s block average over the first two modes. Both
/// extents must be divisible by s; trailing modes are carried through.
class DownsampleOperator final : public LinearOperator {
 public:
  DownsampleOperator(Shape shape, std::size_t factor);

  Shape output_shape() const;
  std::size_t factor() const noexcept { return factor_; }
  std::string name() const override { return "downsample"; }

 private:
  Vector apply_forward(const Vector& x) const override;
  Vector apply_adjoint(const Vector& u) const override;

  Shape shape_;
  std::size_t factor_;
};

/// Explicit I x J matrix.
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix a);

  const Matrix& matrix() const noexcept { return a_; }
  std::string name() const override { return "dense"; }

 private:
  Vector apply_forward(const Vector& x) const override { return a_ * x; }
  Vector apply_adjoint(const Vector& u) const override { return a_.transpose() * u; }

  Matrix a_;
};

/// Dense I x J matrix of `op`, built column by column from forward().
Matrix materialize(const LinearOperator& op);

/// Upper estimate of the largest eigenvalue of A^T A.
struct SpectralBound {
  double lambda = 0.0;         ///< safety factor times the final Rayleigh quotient
  double rayleigh = 0.0;       ///< last Rayleigh quotient
  int iterations_used = 0;
  bool converged = false;
};

inline constexpr double kSpectralSafetyFactor = 1.01;
inline constexpr double kSpectralFloor = 1e-30;

/// Power iteration on gram() from a seeded Gaussian start. Converged when
/// successive Rayleigh quotients differ by less than tol (relative). A zero
/// operator yields lambda == kSpectralFloor with converged == false.
SpectralBound max_eigenvalue(const LinearOperator& op, double tol = 1e-10, int max_iter = 5000,
                             std::uint64_t seed = 0);

// File formats:
//   dense:  `rows cols` then rows*cols values in row-major order
//   mask:   `count` then `count` kept indices
//   kernel: `h w` then h*w values in row-major order
DenseOperator read_dense_operator(std::istream& is);
MaskOperator read_mask(std::istream& is, std::size_t in_dim);
Matrix read_kernel(std::istream& is);
void write_dense_operator(std::ostream& os, const Matrix& a);
void write_mask(std::ostream& os, const MaskOperator& mask);
void write_kernel(std::ostream& os, const Matrix& kernel);

std::unique_ptr<DenseOperator> load_dense_operator(const std::string& path);
std::unique_ptr<MaskOperator> load_mask(const std::string& path, std::size_t in_dim);
Matrix load_kernel(const std::string& path);

}  // namespace gtd

#endif  // GTD_LINOPS_HPP_
