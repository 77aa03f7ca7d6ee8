#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "gtd/errors.hpp"
#include "gtd/linops.hpp"

namespace gtd {

namespace {

template <class T>
T read_value(std::istream& is, const char* what) {
  T v{};
  if (!(is >> v)) throw FormatError(std::string("unexpected end of data while reading ") + what);
  return v;
}

Matrix read_row_major(std::istream& is, const char* what) {
  const auto rows = read_value<long long>(is, what);
  const auto cols = read_value<long long>(is, what);
  if (rows <= 0 || cols <= 0) throw FormatError(std::string(what) + ": dimensions must be positive");
  Matrix m(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    for (long long j = 0; j < cols; ++j) m(i, j) = read_value<double>(is, what);
  }
  return m;
}

void write_row_major(std::ostream& os, const Matrix& m) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << m(i, j) << (j + 1 == m.cols() ? '\n' : ' ');
  }
  os.precision(old_precision);
}

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream is(path);
  if (!is) throw ConfigError(std::string("cannot open ") + what + " file '" + path + "'");
  return is;
}

}  // namespace

DenseOperator read_dense_operator(std::istream& is) { return DenseOperator(read_row_major(is, "dense operator")); }

MaskOperator read_mask(std::istream& is, std::size_t in_dim) {
  const auto count = read_value<long long>(is, "mask");
  if (count < 0) throw FormatError("mask: negative count");
  std::vector<std::size_t> kept;
  kept.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    const auto idx = read_value<long long>(is, "mask");
    if (idx < 0) throw FormatError("mask: negative index");
    kept.push_back(static_cast<std::size_t>(idx));
  }
  try {
    return MaskOperator(in_dim, std::move(kept));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("mask: ") + e.what());
  }
}

Matrix read_kernel(std::istream& is) { return read_row_major(is, "kernel"); }

void write_dense_operator(std::ostream& os, const Matrix& a) { write_row_major(os, a); }
void write_kernel(std::ostream& os, const Matrix& kernel) { write_row_major(os, kernel); }

void write_mask(std::ostream& os, const MaskOperator& mask) {
  os << mask.kept().size() << '\n';
  for (std::size_t i = 0; i < mask.kept().size(); ++i) {
    os << mask.kept()[i] << ((i + 1) % 16 == 0 || i + 1 == mask.kept().size() ? '\n' : ' ');
  }
}

std::unique_ptr<DenseOperator> load_dense_operator(const std::string& path) {
  auto is = open_input(path, "dense operator");
  return std::make_unique<DenseOperator>(read_dense_operator(is));
}

std::unique_ptr<MaskOperator> load_mask(const std::string& path, std::size_t in_dim) {
  auto is = open_input(path, "mask");
  return std::make_unique<MaskOperator>(read_mask(is, in_dim));
}

Matrix load_kernel(const std::string& path) {
  auto is = open_input(path, "kernel");
  return read_kernel(is);
}

}  // namespace gtd
