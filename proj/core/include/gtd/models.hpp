#ifndef GTD_MODELS_HPP_
#define GTD_MODELS_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gtd/tensor.hpp"

namespace gtd {

enum class ModelKind { CP, Tucker, TT, TR };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// What to fit: model family, target shape and ranks.
///
/// Rank conventions:
///  - CP: a single rank R.
///  - Tucker: one rank per mode (core extents).
///  - TT: either the N-1 interior bond ranks, or all N+1 ranks with unit ends.
///  - TR: N ranks R_0..R_{N-1}; core k is R_k x J_k x R_{(k+1) mod N}.
struct ModelSpec {
  ModelKind kind = ModelKind::CP;
  Shape shape;
  std::vector<std::size_t> ranks;
  std::uint64_t seed = 0;
  /// Draw |N(0,1)| instead of N(0,1) so the initial reconstruction is
  /// entrywise nonnegative (used for KL problems).
  bool nonnegative_init = false;
};

/// Throws std::invalid_argument on an inconsistent spec.
void validate(const ModelSpec& spec);

/// Bond ranks R_0..R_N of a TT/TR spec with R_N == R_0.
std::vector<std::size_t> chain_ranks(const ModelSpec& spec);

struct CpParams {
  std::vector<Matrix> factors;  // J_k x R
};

struct TuckerParams {
  DenseTensor core;             // R_1 x ... x R_N
  std::vector<Matrix> factors;  // J_k x R_k
};

struct TtParams {
  std::vector<DenseTensor> cores;  // R_{k-1} x J_k x R_k, R_0 = R_N = 1
};

struct TrParams {
  std::vector<DenseTensor> cores;  // R_{k-1} x J_k x R_k, R_0 = R_N
};

using TdParams = std::variant<CpParams, TuckerParams, TtParams, TrParams>;

ModelKind kind_of(const TdParams& p);

/// Shape of reconstruct(p), derived from the factors/cores.
Shape target_shape(const TdParams& p);

/// Random parameters for `spec`, scaled so that ||reconstruct|| == 1.
TdParams init_params(const ModelSpec& spec);

/// Dense tensor X(theta).
DenseTensor reconstruct(const TdParams& p);

/// Sum of squared entries over every factor and core.
double penalty(const TdParams& p);

/// One cycle of block least-squares updates of all factors/cores against
/// the target `v`, each block minimizing ||v - X||^2 + ridge * ||block||^2
/// with the others held fixed.
///
/// CP and Tucker factors are visited in mode order (Tucker: core last);
/// TT/TR cores left to right. Every normal-equation solve adds a jitter of
/// 1e-12 * trace(Gram) / size to the diagonal.
TdParams als_sweep(const TdParams& p, const DenseTensor& v, double ridge);

struct Projection {
  TdParams params;
  DenseTensor x;  // reconstruct(params)
};

/// Approximate least-squares projection of v onto the model set: `sweeps`
/// warm-started ALS sweeps. sweeps == 0 returns p unchanged.
Projection project(const TdParams& p, const DenseTensor& v, double ridge, int sweeps);

/// Text container: `kind:`, `shape:`, `ranks:`, `blocks:` lines, then each
/// factor/core in the tensor text format.
void write_params(std::ostream& os, const TdParams& p);
TdParams read_params(std::istream& is);
void save_params(const std::string& path, const TdParams& p);
TdParams load_params(const std::string& path);

}  // namespace gtd

#endif  // GTD_MODELS_HPP_
