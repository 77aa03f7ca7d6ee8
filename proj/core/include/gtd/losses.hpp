#ifndef GTD_LOSSES_HPP_
#define GTD_LOSSES_HPP_

#include <string_view>

#include "gtd/tensor.hpp"

namespace gtd {

enum class LossKind { L2, L1, KL };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Floor applied to y inside the KL logarithm.
inline constexpr double kKlLogFloor = 1e-300;

/// Throws std::invalid_argument if any entry of b is negative.
void require_nonnegative(const Vector& b);

/// D(b, y):
///   L2: sum (b_i - y_i)^2
///   L1: sum |b_i - y_i|
///   KL: sum b_i log(b_i / y_i) + y_i - b_i, with 0 log 0 = 0
double eval_loss(LossKind kind, const Vector& b, const Vector& y);

/// sign(v_i) * max(|v_i| - rho, 0).
Vector soft_threshold(const Vector& v, double rho);

/// argmin_y (1/beta) D(b, y) + 1/2 ||d - y||^2, the ADMM y-update with
/// d = Ax - z/beta:
///   L2: (2b + beta d) / (2 + beta)
///   L1: b + soft_threshold(d - b, 1/beta)
///   KL: positive root of beta y^2 + (1 - beta d) y - b = 0
/// The unified solver never calls this for L2: its L2 row pins y = b.
Vector y_update(LossKind kind, const Vector& b, const Vector& d, double beta);

/// dD/dy at y: L2 2(y - b), L1 sign(y - b) with sign(0) = 0, KL 1 - b/y.
Vector loss_gradient(LossKind kind, const Vector& b, const Vector& y);

}  // namespace gtd

#endif  // GTD_LOSSES_HPP_
