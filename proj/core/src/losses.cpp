#include "gtd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gtd {

namespace {

void check_same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::L2: return "l2";
    case LossKind::L1: return "l1";
    case LossKind::KL: return "kl";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "l2" || name == "L2") return LossKind::L2;
  if (name == "l1" || name == "L1") return LossKind::L1;
  if (name == "kl" || name == "KL") return LossKind::KL;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

void require_nonnegative(const Vector& b) {
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (b[i] < 0.0) throw std::invalid_argument("KL loss requires nonnegative observations (b[" + std::to_string(i) + "] < 0)");
  }
}

double eval_loss(LossKind kind, const Vector& b, const Vector& y) {
  check_same_length(b, y, "eval_loss");
  switch (kind) {
    case LossKind::L2: return (b - y).squaredNorm();
    case LossKind::L1: return (b - y).lpNorm<1>();
    case LossKind::KL: {
      require_nonnegative(b);
      double total = 0.0;
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        if (b[i] > 0.0) total += b[i] * std::log(b[i] / std::max(y[i], kKlLogFloor));
        total += y[i] - b[i];
      }
      return total;
    }
  }
  throw std::logic_error("eval_loss: unhandled loss kind");
}

Vector soft_threshold(const Vector& v, double rho) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = sign(v[i]) * std::max(std::abs(v[i]) - rho, 0.0);
  return out;
}

Vector y_update(LossKind kind, const Vector& b, const Vector& d, double beta) {
  check_same_length(b, d, "y_update");
  if (!(beta > 0.0)) throw std::invalid_argument("y_update: beta must be positive");
  switch (kind) {
    case LossKind::L2: return (2.0 * b + beta * d) / (2.0 + beta);
    case LossKind::L1: return b + soft_threshold(d - b, 1.0 / beta);
    case LossKind::KL: {
      require_nonnegative(b);
      Vector y(b.size());
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        const double t = beta * d[i] - 1.0;
        const double disc = std::sqrt(t * t + 4.0 * beta * b[i]);
        // Positive root of beta y^2 + (1 - beta d) y - b = 0. For t < 0 the
        // textbook form cancels; use the conjugate expression instead.
        y[i] = t >= 0.0 ? (t + disc) / (2.0 * beta) : (2.0 * b[i]) / (disc - t);
      }
      return y;
    }
  }
  throw std::logic_error("y_update: unhandled loss kind");
}

Vector loss_gradient(LossKind kind, const Vector& b, const Vector& y) {
  check_same_length(b, y, "loss_gradient");
  switch (kind) {
    case LossKind::L2: return 2.0 * (y - b);
    case LossKind::L1: {
      Vector g(y.size());
      for (Eigen::Index i = 0; i < y.size(); ++i) g[i] = sign(y[i] - b[i]);
      return g;
    }
    case LossKind::KL: {
      require_nonnegative(b);
      Vector g(y.size());
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(y[i] > 0.0)) throw std::domain_error("KL gradient requires y > 0 (y[" + std::to_string(i) + "] <= 0)");
        g[i] = 1.0 - b[i] / y[i];
      }
      return g;
    }
  }
  throw std::logic_error("loss_gradient: unhandled loss kind");
}

}  // namespace gtd
