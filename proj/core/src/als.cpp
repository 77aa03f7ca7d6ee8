#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "chain.hpp"
#include "gtd/errors.hpp"
#include "gtd/models.hpp"

namespace gtd {

namespace {

constexpr double kJitter = 1e-12;

bool all_finite(const Matrix& m) { return m.allFinite(); }

// Solves X * (gram + ridge I) = rhs for X. gram is symmetric PSD. The
// factorization carries an extra jitter on the diagonal; one step of
// iterative refinement against the unjittered system removes most of the
// bias the jitter would otherwise leave on well-determined directions.
Matrix solve_normal_right(const Matrix& gram, const Matrix& rhs, double ridge) {
  const Eigen::Index n = gram.rows();
  const double jitter = kJitter * gram.trace() / static_cast<double>(n);
  Matrix target = gram;
  target.diagonal().array() += ridge;
  Matrix system = target;
  system.diagonal().array() += jitter;

  auto refined = [&](const auto& solver) {
    Matrix x = solver.solve(rhs.transpose()).transpose();
    x += solver.solve((rhs - x * target).transpose()).transpose();
    return x;
  };
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() == Eigen::Success) {
    Matrix x = refined(llt);
    if (all_finite(x)) return x;
  }
  Eigen::LDLT<Matrix> ldlt(system);
  if (ldlt.info() == Eigen::Success) {
    Matrix x = refined(ldlt);
    if (all_finite(x)) return x;
  }
  // A zero Gram with zero right-hand side (e.g. after fitting a zero target):
  // take the minimum-norm solution.
  if (rhs.isZero(0.0)) return Matrix::Zero(rhs.rows(), n);
  throw NumericalError("ALS normal equations are singular even after regularization (size " +
                       std::to_string(n) + ")");
}

void check_target(const TdParams& p, const DenseTensor& v) {
  if (target_shape(p) != v.shape()) throw std::invalid_argument("als_sweep: target shape does not match model");
}

CpParams sweep_cp(CpParams cp, const DenseTensor& v, double ridge) {
  auto& fs = cp.factors;
  const std::size_t n = fs.size();
  const Eigen::Index rank = fs[0].cols();
  for (std::size_t mode = 0; mode < n; ++mode) {
    Matrix gram = Matrix::Ones(rank, rank);
    std::vector<Matrix> others;
    for (std::size_t m = 0; m < n; ++m) {
      if (m == mode) continue;
      gram.array() *= (fs[m].transpose() * fs[m]).array();
      others.push_back(fs[m]);
    }
    const Matrix design = others.empty() ? Matrix::Ones(1, rank) : khatri_rao_reversed(others);
    const Matrix rhs = unfold(v, mode) * design;
    fs[mode] = solve_normal_right(gram, rhs, ridge);
  }
  return cp;
}

TuckerParams sweep_tucker(TuckerParams tk, const DenseTensor& v, double ridge) {
  const std::size_t n = tk.factors.size();
  for (std::size_t mode = 0; mode < n; ++mode) {
    DenseTensor partial = tk.core;
    for (std::size_t m = 0; m < n; ++m) {
      if (m != mode) partial = mode_n_product(partial, tk.factors[m], m);
    }
    const Matrix y = unfold(partial, mode);  // R_mode x prod_{m != mode} J_m
    tk.factors[mode] = solve_normal_right(y * y.transpose(), unfold(v, mode) * y.transpose(), ridge);
  }

  // Core: (U_N^T U_N ⊗ ... ⊗ U_1^T U_1 + rho I) vec(G) = vec(v ×_k U_k^T),
  // diagonalized mode by mode through the eigenvectors of each Gram.
  DenseTensor w = v;
  std::vector<Matrix> eigvecs(n);
  std::vector<Vector> eigvals(n);
  double trace_product = 1.0;
  double size = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Matrix& u = tk.factors[k];
    const Matrix g = u.transpose() * u;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
    if (eig.info() != Eigen::Success) throw NumericalError("Tucker core update: eigensolver failed");
    eigvecs[k] = eig.eigenvectors();
    eigvals[k] = eig.eigenvalues().cwiseMax(0.0);
    trace_product *= g.trace();
    size *= static_cast<double>(g.rows());
    w = mode_n_product(w, eigvecs[k].transpose() * u.transpose(), k);
  }
  const double jitter = kJitter * trace_product / size;
  const double shift = ridge + jitter;
  const Shape& core_shape = w.shape();
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t l = 0; l < w.size(); ++l) {
    double denom = shift;
    double prod = 1.0;
    for (std::size_t k = 0; k < n; ++k) prod *= eigvals[k][static_cast<Eigen::Index>(idx[k])];
    denom += prod;
    if (denom > 0.0) {
      // Same refinement as solve_normal_right, in closed form.
      w[l] = w[l] / denom * (1.0 + jitter / denom);
    } else if (w[l] == 0.0) {
      w[l] = 0.0;
    } else {
      throw NumericalError("Tucker core normal equations are singular");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (++idx[k] < core_shape[k]) break;
      idx[k] = 0;
    }
  }
  for (std::size_t k = 0; k < n; ++k) w = mode_n_product(w, eigvecs[k], k);
  tk.core = std::move(w);
  return tk;
}

// Shared by TT (unit boundary ranks) and TR: core k is fitted against the
// contraction of all other cores taken cyclically from k+1 to k-1, since
// X(i) = trace(G_k[i_k] * Q[i_rest]).
template <class Chain>
Chain sweep_chain(Chain chain, const DenseTensor& v, double ridge) {
  auto& cores = chain.cores;
  const std::size_t n = cores.size();
  const Shape& shape = v.shape();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t rk = cores[k].shape()[0];
    const std::size_t jk = cores[k].shape()[1];
    const std::size_t rk1 = cores[k].shape()[2];

    detail::ChainProduct sub;
    if (n == 1) {
      sub = detail::identity_chain(rk);
    } else {
      std::vector<std::size_t> order;
      for (std::size_t step = 1; step < n; ++step) order.push_back((k + step) % n);
      sub = detail::contract_chain(cores, order);
    }
    // sub is (rk1, P, rk); design B(p, a + rk * c) = sub(c, p, a).
    const std::size_t p_count = sub.middle;
    Matrix design(static_cast<Eigen::Index>(p_count), static_cast<Eigen::Index>(rk * rk1));
    for (std::size_t a = 0; a < rk; ++a) {
      for (std::size_t c = 0; c < rk1; ++c) {
        for (std::size_t p = 0; p < p_count; ++p) {
          design(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(a + rk * c)) =
              sub.data[static_cast<Eigen::Index>(c + rk1 * p + rk1 * p_count * a)];
        }
      }
    }

    const auto map = detail::cyclic_unfold_map(shape, k);
    Matrix target(static_cast<Eigen::Index>(jk), static_cast<Eigen::Index>(p_count));
    for (std::size_t p = 0; p < p_count; ++p) {
      for (std::size_t i = 0; i < jk; ++i) {
        target(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = v[map[i + jk * p]];
      }
    }

    const Matrix core_unfolded =
        solve_normal_right(design.transpose() * design, target * design, ridge);  // jk x (rk * rk1)
    cores[k] = fold(core_unfolded, 1, {rk, jk, rk1});
  }
  return chain;
}

}  // namespace

TdParams als_sweep(const TdParams& p, const DenseTensor& v, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw std::invalid_argument("als_sweep: ridge must be finite and >= 0");
  check_target(p, v);
  return std::visit(
      [&](const auto& params) -> TdParams {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, CpParams>) {
          return sweep_cp(params, v, ridge);
        } else if constexpr (std::is_same_v<T, TuckerParams>) {
          return sweep_tucker(params, v, ridge);
        } else {
          return sweep_chain(params, v, ridge);
        }
      },
      p);
}

}  // namespace gtd
