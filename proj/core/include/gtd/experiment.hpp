#ifndef GTD_EXPERIMENT_HPP_
#define GTD_EXPERIMENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gtd/config.hpp"
#include "gtd/linops.hpp"
#include "gtd/models.hpp"
#include "gtd/solver.hpp"

namespace gtd {

/// Ground truth x0: either a file (tensor text, or .ppm image) or a random
/// low-rank tensor with the given RMS.
struct DataSpec {
  std::optional<std::string> path;
  ModelSpec truth;      // used when path is empty
  double rms = 1.0;
};

enum class OperatorKind { Identity, Mask, Blur, Downsample, Dense };

struct OperatorSpec {
  OperatorKind kind = OperatorKind::Identity;
  double fraction = 0.5;           // mask: kept fraction
  std::uint64_t seed = 0;          // mask
  std::string path;                // dense matrix, mask index file or blur kernel file
  std::size_t kernel_size = 5;     // gaussian blur kernel
  double sigma = 1.0;
  std::size_t factor = 2;          // downsample block size
};

enum class NoiseKind { None, Gaussian, Impulse, Poisson };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;       // gaussian
  double fraction = 0.0;    // impulse: fraction of corrupted observations
  double amplitude = 0.0;   // impulse: added +-amplitude
  std::uint64_t seed = 0;
};

enum class SolverKind { AdmmMm, Pg, Bcd };

std::string_view to_string(SolverKind kind);

struct SolverSelection {
  SolverKind kind = SolverKind::AdmmMm;
  double step = 0.0;  // PG / BCD step size
};

struct ExperimentConfig {
  DataSpec data;
  OperatorSpec op;
  NoiseSpec noise;
  ModelSpec model;  // shape filled in from the data
  std::vector<SolverSelection> solvers;
  SolverConfig solver;
  std::string output_dir = "gtd_out";
  int threads = 1;
};

/// Builds an ExperimentConfig from the flat key grammar (see docs/config.md).
ExperimentConfig parse_experiment(const Config& cfg);
ExperimentConfig load_experiment(const std::string& path);

/// Operator of the given spec acting on tensors of `shape`.
std::unique_ptr<LinearOperator> make_operator(const OperatorSpec& spec, const Shape& shape);
OperatorSpec parse_operator(const Config& cfg);

struct Problem {
  DenseTensor x0;
  std::unique_ptr<LinearOperator> op;
  Vector b_clean;
  Vector b;
};

/// x0 from the data spec, b = A x0 + noise; deterministic in the config seeds.
Problem synthesize_problem(const ExperimentConfig& cfg);

/// Adds noise to clean observations in place.
void apply_noise(const NoiseSpec& noise, Vector& b);

struct SummaryRow {
  std::string solver;
  std::string loss;
  std::string op;
  double final_objective = 0.0;
  double elapsed_s = 0.0;
  double relative_error = 0.0;
  int iterations = 0;
};

inline constexpr const char* kSummaryHeader = "solver,loss,operator,final_objective,elapsed_s,relative_error_vs_x0";
std::string format_summary_row(const SummaryRow& row);

/// Runs every selected solver and writes, into cfg.output_dir:
///   x0.tensor, trace_<solver>.csv, recon_<solver>.tensor,
///   recon_<solver>.ppm (H x W x 3 only), params_<solver>.txt, summary.csv
/// Throws ConfigError / NumericalError.
std::vector<SummaryRow> execute_experiment(const ExperimentConfig& cfg);

/// CLI wrapper: loads the config, honours GTD_OUTPUT_DIR, prints the
/// summary. Returns 0 on success, 1 on config/IO failure, 2 on numerical failure.
int run_experiment(const std::string& config_path, std::ostream& out, std::ostream& err);

}  // namespace gtd

#endif  // GTD_EXPERIMENT_HPP_
