#include "gtd/solver.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "gtd/errors.hpp"

namespace gtd {

namespace {

using Clock = std::chrono::steady_clock;

// PG and BCD evaluate the KL gradient 1 - b/y at max(Ax, floor); the
// gradient is undefined where the reconstruction leaves the positive orthant.
constexpr double kKlGradientFloor = 1e-12;

void check_problem(const Vector& b, const LinearOperator& op, const ModelSpec& spec, const SolverConfig& cfg) {
  validate(spec);
  validate(cfg);
  if (static_cast<std::size_t>(b.size()) != op.out_dim()) {
    throw std::invalid_argument("observation length " + std::to_string(b.size()) + " does not match operator output " +
                                std::to_string(op.out_dim()));
  }
  if (op.in_dim() != shape_size(spec.shape)) {
    throw std::invalid_argument("operator input dimension " + std::to_string(op.in_dim()) +
                                " does not match model size " + std::to_string(shape_size(spec.shape)));
  }
  if (cfg.loss == LossKind::KL) require_nonnegative(b);
}

Vector guarded_gradient(LossKind loss, const Vector& b, const Vector& ax) {
  if (loss == LossKind::KL) return loss_gradient(loss, b, ax.cwiseMax(kKlGradientFloor));
  return loss_gradient(loss, b, ax);
}

// d/dU_k of D(b, A vec(X)) + alpha ||U_k||^2: the mode-k unfolding of
// A^T dD/dy times the Khatri-Rao product of the other factors.
Matrix cp_block_gradient(const Vector& b, const LinearOperator& op, const CpParams& cp, LossKind loss, double alpha,
                         std::size_t k) {
  const DenseTensor x = reconstruct(cp);
  const DenseTensor g(x.shape(), op.adjoint(guarded_gradient(loss, b, op.forward(x.vec()))));
  std::vector<Matrix> others;
  for (std::size_t m = 0; m < cp.factors.size(); ++m) {
    if (m != k) others.push_back(cp.factors[m]);
  }
  const Matrix design = others.empty() ? Matrix::Ones(1, cp.factors[k].cols()) : khatri_rao_reversed(others);
  return unfold(g, k) * design + 2.0 * alpha * cp.factors[k];
}

SolverState initial_state(const Vector& b, const LinearOperator& op, const ModelSpec& spec, LossKind loss) {
  SolverState s;
  s.theta = init_params(spec);
  s.x = reconstruct(s.theta).vec();
  s.y = loss == LossKind::L2 ? b : op.forward(s.x);
  s.z = Vector::Zero(b.size());
  return s;
}

// Runs `step` until the relative x-change drops below tol or max_iter is hit,
// recording objective and residual after every iteration.
template <class Step>
SolveResult run_iterations(const Vector& b, const LinearOperator& op, const SolverConfig& cfg, SolverState state,
                           Clock::time_point start, const IterationObserver& observer, Step&& step) {
  SolveResult result;
  result.lambda = state.lambda;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Vector x_prev = state.x;
    step(state);

    const Vector ax = op.forward(state.x);
    TraceRecord rec;
    rec.iter = it;
    rec.objective = eval_loss(cfg.loss, b, ax) + cfg.alpha * penalty(state.theta);
    rec.residual = (state.y - ax).norm();
    rec.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
    if (!std::isfinite(rec.objective) || !state.x.allFinite()) {
      throw NumericalError("iterate became non-finite at iteration " + std::to_string(it));
    }
    result.trace.records.push_back(rec);
    if (observer) observer(it, state);

    const double base = x_prev.norm();
    const double change = (state.x - x_prev).norm() / (base > 0.0 ? base : 1.0);
    if (change < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  result.theta = std::move(state.theta);
  return result;
}

void spot_check_majorization(const LinearOperator& op, double lambda, std::uint64_t seed) {
  std::mt19937_64 engine(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(op.in_dim()));
  for (int trial = 0; trial < 16; ++trial) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(engine);
    const double vv = v.squaredNorm();
    if (lambda * vv - op.forward(v).squaredNorm() < -1e-10 * lambda * vv) {
      throw std::invalid_argument("lambda_override " + std::to_string(lambda) +
                                  " is below the largest eigenvalue of A^T A");
    }
  }
}

}  // namespace

void validate(const SolverConfig& cfg) {
  if (!(cfg.alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (cfg.sweeps_per_iter < 1) throw std::invalid_argument("sweeps_per_iter must be >= 1");
  if (cfg.max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
  if (cfg.lambda_override && !(*cfg.lambda_override > 0.0)) throw std::invalid_argument("lambda_override must be > 0");
}

void write_trace_csv(std::ostream& os, const SolverTrace& trace) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "iter,objective,residual,elapsed_s\n";
  for (const auto& r : trace.records) {
    os << r.iter << ',' << r.objective << ',' << r.residual << ',' << r.elapsed_s << '\n';
  }
  os.precision(old_precision);
}

double gamma_for(LossKind loss, double alpha, double beta, double lambda) {
  if (loss == LossKind::L2) return alpha / lambda;
  return 2.0 * alpha / (beta * lambda);
}

Projection mm_x_step(const SolverState& state, const Vector& b_eff, const LinearOperator& op, double ridge,
                     int sweeps) {
  // A^T (A x - b_eff) rather than gram(x) - A^T b_eff: same value, one
  // adjoint fewer, and it lines up operation for operation with the PG step.
  const double inv_lambda = 1.0 / state.lambda;
  const Vector v = state.x - inv_lambda * op.adjoint(op.forward(state.x) - b_eff);
  return project(state.theta, DenseTensor(target_shape(state.theta), v), ridge, sweeps);
}

double resolve_lambda(const LinearOperator& op, const SolverConfig& cfg) {
  if (cfg.lambda_override) {
    spot_check_majorization(op, *cfg.lambda_override, cfg.seed);
    return *cfg.lambda_override;
  }
  return max_eigenvalue(op, 1e-10, 5000, cfg.seed).lambda;
}

SolveResult admm_mm_solve(const Vector& b, const LinearOperator& op, const ModelSpec& spec, const SolverConfig& cfg,
                          const IterationObserver& observer) {
  check_problem(b, op, spec, cfg);
  const auto start = Clock::now();
  SolverState state = initial_state(b, op, spec, cfg.loss);
  state.lambda = resolve_lambda(op, cfg);
  state.gamma = gamma_for(cfg.loss, cfg.alpha, cfg.beta, state.lambda);

  const double beta = cfg.beta;
  return run_iterations(b, op, cfg, std::move(state), start, observer, [&](SolverState& s) {
    Vector b_eff;
    if (cfg.loss == LossKind::L2) {
      b_eff = b;
    } else {
      const Vector ax = op.forward(s.x);
      const Vector d = ax - s.z / beta;
      s.y = y_update(cfg.loss, b, d, beta);
      s.z = s.z + beta * (s.y - ax);
      b_eff = s.y + s.z / beta;
    }
    auto next = mm_x_step(s, b_eff, op, s.gamma, cfg.sweeps_per_iter);
    s.theta = std::move(next.params);
    s.x = std::move(next.x.vec());
  });
}

SolveResult pg_solve(const Vector& b, const LinearOperator& op, const ModelSpec& spec, const SolverConfig& cfg,
                     double step, const IterationObserver& observer) {
  check_problem(b, op, spec, cfg);
  if (!(step >= 0.0)) throw std::invalid_argument("pg_solve: step must be >= 0");
  const auto start = Clock::now();
  SolverState state = initial_state(b, op, spec, LossKind::L2);
  state.gamma = 2.0 * step * cfg.alpha;
  const Shape shape = spec.shape;
  return run_iterations(b, op, cfg, std::move(state), start, observer, [&](SolverState& s) {
    const Vector grad = op.adjoint(guarded_gradient(cfg.loss, b, op.forward(s.x)));
    const Vector v = s.x - step * grad;
    auto next = project(s.theta, DenseTensor(shape, v), s.gamma, cfg.sweeps_per_iter);
    s.theta = std::move(next.params);
    s.x = std::move(next.x.vec());
  });
}

std::vector<Matrix> cp_factor_gradients(const Vector& b, const LinearOperator& op, const CpParams& cp, LossKind loss,
                                        double alpha) {
  std::vector<Matrix> grads;
  for (std::size_t k = 0; k < cp.factors.size(); ++k) grads.push_back(cp_block_gradient(b, op, cp, loss, alpha, k));
  return grads;
}

SolveResult bcd_solve(const Vector& b, const LinearOperator& op, const ModelSpec& spec, const SolverConfig& cfg,
                      double step, const IterationObserver& observer) {
  if (spec.kind != ModelKind::CP) throw std::invalid_argument("bcd_solve supports CP models only");
  check_problem(b, op, spec, cfg);
  if (!(step >= 0.0)) throw std::invalid_argument("bcd_solve: step must be >= 0");
  const auto start = Clock::now();
  SolverState state = initial_state(b, op, spec, LossKind::L2);
  return run_iterations(b, op, cfg, std::move(state), start, observer, [&](SolverState& s) {
    auto& cp = std::get<CpParams>(s.theta);
    for (std::size_t k = 0; k < cp.factors.size(); ++k) {
      // Later blocks see the already-updated earlier ones.
      cp.factors[k] -= step * cp_block_gradient(b, op, cp, cfg.loss, cfg.alpha, k);
    }
    s.x = reconstruct(cp).vec();
  });
}

double objective(const Vector& b, const LinearOperator& op, const TdParams& theta, LossKind loss, double alpha) {
  return eval_loss(loss, b, op.forward(reconstruct(theta).vec())) + alpha * penalty(theta);
}

}  // namespace gtd
