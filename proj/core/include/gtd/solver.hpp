#ifndef GTD_SOLVER_HPP_
#define GTD_SOLVER_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gtd/linops.hpp"
#include "gtd/losses.hpp"
#include "gtd/models.hpp"

namespace gtd {

struct SolverConfig {
  LossKind loss = LossKind::L2;
  double alpha = 0.0;                    ///< weight of the ridge penalty on all blocks
  double beta = 1.0;                     ///< ADMM penalty
  std::optional<double> lambda_override; ///< replaces the power-iteration bound
  int sweeps_per_iter = 1;               ///< ALS sweeps per projection
  int max_iter = 1000;
  double tol = 1e-8;                     ///< relative x-change stopping threshold
  std::uint64_t seed = 0;                ///< seeds the power iteration
};

/// Throws std::invalid_argument on out-of-range fields.
void validate(const SolverConfig& cfg);

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;  ///< D(b, Ax) + alpha * p(theta)
  double residual = 0.0;   ///< ||y - Ax||_2 (y == b for L2, PG and BCD)
  double elapsed_s = 0.0;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
};

/// CSV with header `iter,objective,residual,elapsed_s`.
void write_trace_csv(std::ostream& os, const SolverTrace& trace);

struct SolverState {
  TdParams theta;
  Vector x;  ///< vec(reconstruct(theta))
  Vector y;
  Vector z;  ///< scaled dual; identically zero for L2
  double lambda = 0.0;
  double gamma = 0.0;
};

struct SolveResult {
  TdParams theta;
  SolverTrace trace;
  double lambda = 0.0;
  bool converged = false;
};

/// Called after every completed iteration with the post-update state.
using IterationObserver = std::function<void(int iter, const SolverState& state)>;

/// Ridge weight passed to the projection: alpha / lambda for L2,
/// 2 alpha / (beta lambda) for L1 and KL.
double gamma_for(LossKind loss, double alpha, double beta, double lambda);

/// One majorization step towards b_eff:
///   v = x - (1/lambda) (A^T A x - A^T b_eff),   (theta, x) <- proj_{S_ridge}(v).
Projection mm_x_step(const SolverState& state, const Vector& b_eff, const LinearOperator& op, double ridge,
                     int sweeps);

/// The unified ADMM-MM solver. Each iteration runs, in order:
///   d = Ax - z/beta;  y = prox(d);  z += beta (y - Ax);  x = MM step towards y + z/beta
/// where the middle two lines degenerate to y = b, z = 0 for L2. Stops on
/// relative x-change below tol or after max_iter iterations.
SolveResult admm_mm_solve(const Vector& b, const LinearOperator& op, const ModelSpec& spec, const SolverConfig& cfg,
                          const IterationObserver& observer = {});

/// Projected gradient: x <- proj_{S_{2 step alpha}}(x - step * A^T dD/dy(Ax)).
/// For L2 the gradient carries the factor 2 of sum (b - Ax)^2, so step
/// 1 / (2 lambda) reproduces the ADMM-MM L2 iterates exactly.
SolveResult pg_solve(const Vector& b, const LinearOperator& op, const ModelSpec& spec, const SolverConfig& cfg,
                     double step, const IterationObserver& observer = {});

/// Block coordinate descent on CP factors: U_k <- U_k - step * dObjective/dU_k,
/// visiting the factors in mode order, each with the others at their latest values.
SolveResult bcd_solve(const Vector& b, const LinearOperator& op, const ModelSpec& spec, const SolverConfig& cfg,
                      double step, const IterationObserver& observer = {});

/// Gradient of objective() with respect to every CP factor.
std::vector<Matrix> cp_factor_gradients(const Vector& b, const LinearOperator& op, const CpParams& cp, LossKind loss,
                                        double alpha);

/// D(b, A vec(X(theta))) + alpha * p(theta), p = sum of squared block entries.
double objective(const Vector& b, const LinearOperator& op, const TdParams& theta, LossKind loss, double alpha);

/// Lambda used by the solvers: the override (after a majorization spot
/// check) or the power-iteration bound.
double resolve_lambda(const LinearOperator& op, const SolverConfig& cfg);

}  // namespace gtd

#endif  // GTD_SOLVER_HPP_
