#include "gtd/linops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gtd {

namespace {

void check_length(const Vector& v, std::size_t expected, const char* what) {
  if (static_cast<std::size_t>(v.size()) != expected) {
    throw std::invalid_argument(std::string(what) + ": vector length " + std::to_string(v.size()) +
                                ", operator expects " + std::to_string(expected));
  }
}

std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

}  // namespace

LinearOperator::LinearOperator(std::size_t in_dim, std::size_t out_dim) : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim == 0) throw std::invalid_argument("operator input dimension must be positive");
}

Vector LinearOperator::forward(const Vector& x) const {
  check_length(x, in_dim_, "forward");
  return apply_forward(x);
}

Vector LinearOperator::adjoint(const Vector& u) const {
  check_length(u, out_dim_, "adjoint");
  return apply_adjoint(u);
}

Vector LinearOperator::gram(const Vector& x) const {
  check_length(x, in_dim_, "gram");
  return apply_gram(x);
}

IdentityOperator::IdentityOperator(std::size_t dim) : LinearOperator(dim, dim) {}

// --- mask -------------------------------------------------------------------

MaskOperator::MaskOperator(std::size_t in_dim, std::vector<std::size_t> kept)
    : LinearOperator(in_dim, kept.size()), kept_(std::move(kept)) {
  for (std::size_t i = 0; i < kept_.size(); ++i) {
    if (kept_[i] >= in_dim) throw std::invalid_argument("mask index " + std::to_string(kept_[i]) + " out of range");
    if (i > 0 && kept_[i] <= kept_[i - 1]) throw std::invalid_argument("mask indices must be strictly increasing");
  }
}

Vector MaskOperator::apply_forward(const Vector& x) const {
  Vector y(static_cast<Eigen::Index>(kept_.size()));
  for (std::size_t i = 0; i < kept_.size(); ++i) y[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(kept_[i])];
  return y;
}

Vector MaskOperator::apply_adjoint(const Vector& u) const {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(in_dim()));
  for (std::size_t i = 0; i < kept_.size(); ++i) x[static_cast<Eigen::Index>(kept_[i])] = u[static_cast<Eigen::Index>(i)];
  return x;
}

Vector MaskOperator::apply_gram(const Vector& x) const {
  Vector out = Vector::Zero(x.size());
  for (std::size_t k : kept_) out[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(k)];
  return out;
}

MaskOperator random_mask(std::size_t in_dim, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("mask fraction must lie in [0, 1]");
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(in_dim)));
  std::vector<std::size_t> all(in_dim);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::mt19937_64 engine(seed);
  // Partial Fisher-Yates: the first `count` slots become the sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, in_dim - 1);
    std::swap(all[i], all[pick(engine)]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return MaskOperator(in_dim, std::move(all));
}

// --- blur -------------------------------------------------------------------

BlurOperator::BlurOperator(Shape shape, Matrix kernel)
    : LinearOperator(shape_size(shape), shape_size(shape)), shape_(std::move(shape)), kernel_(std::move(kernel)) {
  if (shape_.size() < 2) throw std::invalid_argument("blur needs at least two modes");
  if (kernel_.size() == 0) throw std::invalid_argument("blur kernel is empty");
}

Vector BlurOperator::correlate(const Vector& x, bool flipped) const {
  const std::size_t h = shape_[0];
  const std::size_t w = shape_[1];
  const std::size_t slices = in_dim() / (h * w);
  const auto kh = static_cast<std::ptrdiff_t>(kernel_.rows());
  const auto kw = static_cast<std::ptrdiff_t>(kernel_.cols());
  const std::ptrdiff_t ch = kh / 2;
  const std::ptrdiff_t cw = kw / 2;
  const std::ptrdiff_t sign = flipped ? -1 : 1;
  // Wrapped source row/column for every (kernel offset, target position).
  std::vector<std::size_t> rows(static_cast<std::size_t>(kh) * h), cols(static_cast<std::size_t>(kw) * w);
  for (std::ptrdiff_t p = 0; p < kh; ++p)
    for (std::size_t i = 0; i < h; ++i) rows[static_cast<std::size_t>(p) * h + i] = wrap(static_cast<std::ptrdiff_t>(i) + sign * (p - ch), h);
  for (std::ptrdiff_t q = 0; q < kw; ++q)
    for (std::size_t j = 0; j < w; ++j) cols[static_cast<std::size_t>(q) * w + j] = h * wrap(static_cast<std::ptrdiff_t>(j) + sign * (q - cw), w);
  Vector y = Vector::Zero(x.size());
  for (std::size_t s = 0; s < slices; ++s) {
    const double* src = x.data() + s * h * w;
    double* dst = y.data() + s * h * w;
    for (std::ptrdiff_t q = 0; q < kw; ++q) {
      for (std::ptrdiff_t p = 0; p < kh; ++p) {
        const double k = kernel_(p, q);
        const std::size_t* row = rows.data() + static_cast<std::size_t>(p) * h;
        for (std::size_t j = 0; j < w; ++j) {
          const double* col = src + cols[static_cast<std::size_t>(q) * w + j];
          double* out = dst + h * j;
          for (std::size_t i = 0; i < h; ++i) out[i] += k * col[row[i]];
        }
      }
    }
  }
  return y;
}

Vector BlurOperator::apply_forward(const Vector& x) const { return correlate(x, false); }
Vector BlurOperator::apply_adjoint(const Vector& u) const { return correlate(u, true); }

Matrix gaussian_kernel(std::size_t size, double sigma) {
  if (size == 0) throw std::invalid_argument("gaussian kernel size must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian kernel sigma must be positive");
  const auto n = static_cast<Eigen::Index>(size);
  const double center = static_cast<double>(size / 2);
  Matrix k(n, n);
  for (Eigen::Index q = 0; q < n; ++q) {
    for (Eigen::Index p = 0; p < n; ++p) {
      const double dp = static_cast<double>(p) - center;
      const double dq = static_cast<double>(q) - center;
      k(p, q) = std::exp(-(dp * dp + dq * dq) / (2.0 * sigma * sigma));
    }
  }
  return k / k.sum();
}

// --- downsample -------------------------------------------------------------

namespace {

Shape downsampled(const Shape& shape, std::size_t factor) {
  if (shape.size() < 2) throw std::invalid_argument("downsample needs at least two modes");
  if (factor == 0) throw std::invalid_argument("downsample factor must be positive");
  if (shape[0] % factor != 0 || shape[1] % factor != 0) {
    throw std::invalid_argument("downsample factor " + std::to_string(factor) + " does not divide " +
                                std::to_string(shape[0]) + "x" + std::to_string(shape[1]));
  }
  Shape out = shape;
  out[0] /= factor;
  out[1] /= factor;
  return out;
}

}  // namespace

DownsampleOperator::DownsampleOperator(Shape shape, std::size_t factor)
    : LinearOperator(shape_size(shape), shape_size(downsampled(shape, factor))),
      shape_(std::move(shape)),
      factor_(factor) {}

Shape DownsampleOperator::output_shape() const { return downsampled(shape_, factor_); }

Vector DownsampleOperator::apply_forward(const Vector& x) const {
  const std::size_t h = shape_[0], w = shape_[1], s = factor_;
  const std::size_t oh = h / s, ow = w / s;
  const std::size_t slices = in_dim() / (h * w);
  const double scale = 1.0 / static_cast<double>(s * s);
  Vector y = Vector::Zero(static_cast<Eigen::Index>(out_dim()));
  for (std::size_t sl = 0; sl < slices; ++sl) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t i = 0; i < h; ++i) {
        y[static_cast<Eigen::Index>(sl * oh * ow + i / s + oh * (j / s))] +=
            scale * x[static_cast<Eigen::Index>(sl * h * w + i + h * j)];
      }
    }
  }
  return y;
}

Vector DownsampleOperator::apply_adjoint(const Vector& u) const {
  const std::size_t h = shape_[0], w = shape_[1], s = factor_;
  const std::size_t oh = h / s, ow = w / s;
  const std::size_t slices = in_dim() / (h * w);
  const double scale = 1.0 / static_cast<double>(s * s);
  Vector x(static_cast<Eigen::Index>(in_dim()));
  for (std::size_t sl = 0; sl < slices; ++sl) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t i = 0; i < h; ++i) {
        x[static_cast<Eigen::Index>(sl * h * w + i + h * j)] =
            scale * u[static_cast<Eigen::Index>(sl * oh * ow + i / s + oh * (j / s))];
      }
    }
  }
  return x;
}

// --- dense ------------------------------------------------------------------

DenseOperator::DenseOperator(Matrix a)
    : LinearOperator(static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(a.rows())), a_(std::move(a)) {}

Matrix materialize(const LinearOperator& op) {
  const auto in = static_cast<Eigen::Index>(op.in_dim());
  Matrix m(static_cast<Eigen::Index>(op.out_dim()), in);
  Vector e = Vector::Zero(in);
  for (Eigen::Index j = 0; j < in; ++j) {
    e[j] = 1.0;
    m.col(j) = op.forward(e);
    e[j] = 0.0;
  }
  return m;
}

// --- spectral bound ---------------------------------------------------------

SpectralBound max_eigenvalue(const LinearOperator& op, double tol, int max_iter, std::uint64_t seed) {
  if (!(tol > 0.0)) throw std::invalid_argument("max_eigenvalue: tol must be positive");
  SpectralBound bound;
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(op.in_dim()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(engine);
  v.normalize();

  double previous = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Vector w = op.gram(v);
    const double rq = v.dot(w);
    const double wn = w.norm();
    bound.iterations_used = it;
    if (!(wn > 0.0)) {
      bound.rayleigh = 0.0;
      bound.lambda = kSpectralFloor;
      bound.converged = false;
      return bound;
    }
    bound.rayleigh = rq;
    if (it > 1 && std::abs(rq - previous) < tol * std::abs(rq)) {
      bound.converged = true;
      break;
    }
    previous = rq;
    v = w / wn;
  }
  bound.lambda = kSpectralSafetyFactor * bound.rayleigh;
  if (!(bound.lambda > kSpectralFloor)) bound.lambda = kSpectralFloor;
  return bound;
}

}  // namespace gtd
