#include "gtd/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "gtd/errors.hpp"
#include "gtd/image.hpp"

namespace gtd {

namespace {

namespace fs = std::filesystem;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::uint64_t get_seed(const Config& cfg, const std::string& key) {
  const long long v = cfg.get_int(key, 0);
  if (v < 0) throw ConfigError(cfg.source() + ": '" + key + "' must be >= 0");
  return static_cast<std::uint64_t>(v);
}

double get_nonnegative(const Config& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(cfg.source() + ": '" + key + "' must be a finite value >= 0");
  return v;
}

ModelKind get_model_kind(const Config& cfg, const std::string& key) {
  try {
    return parse_model_kind(cfg.get_string(key, "cp"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.source() + ": " + e.what());
  }
}

// A single rank is broadcast to every bond/mode for Tucker, TT and TR.
std::vector<std::size_t> expand_ranks(ModelKind kind, const Shape& shape, std::vector<std::size_t> ranks) {
  if (kind == ModelKind::CP || ranks.size() != 1) return ranks;
  const std::size_t n = kind == ModelKind::TT ? shape.size() - 1 : shape.size();
  return std::vector<std::size_t>(n, ranks[0]);
}

ModelSpec finalize_model(ModelSpec spec, const Shape& shape) {
  spec.shape = shape;
  spec.ranks = expand_ranks(spec.kind, shape, spec.ranks);
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model spec: ") + e.what());
  }
  return spec;
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Identity: return "identity";
    case OperatorKind::Mask: return "mask";
    case OperatorKind::Blur: return "blur";
    case OperatorKind::Downsample: return "downsample";
    case OperatorKind::Dense: return "dense";
  }
  return "?";
}

NoiseSpec parse_noise(const Config& cfg) {
  NoiseSpec n;
  const std::string kind = cfg.get_string("noise.kind", "none");
  if (kind == "none") {
    n.kind = NoiseKind::None;
  } else if (kind == "gaussian") {
    n.kind = NoiseKind::Gaussian;
    n.sigma = get_nonnegative(cfg, "noise.sigma", 0.0);
  } else if (kind == "impulse") {
    n.kind = NoiseKind::Impulse;
    n.fraction = get_nonnegative(cfg, "noise.fraction", 0.0);
    n.amplitude = get_nonnegative(cfg, "noise.amplitude", 0.0);
    if (n.fraction > 1.0) throw ConfigError(cfg.source() + ": noise.fraction must be <= 1");
  } else if (kind == "poisson") {
    n.kind = NoiseKind::Poisson;
  } else {
    throw ConfigError(cfg.source() + ": unknown noise.kind '" + kind + "'");
  }
  n.seed = get_seed(cfg, "noise.seed");
  return n;
}

std::vector<SolverSelection> parse_solvers(const Config& cfg) {
  std::vector<SolverSelection> out;
  const auto words = cfg.has("solver.methods") ? cfg.get_words("solver.methods") : std::vector<std::string>{"admm_mm"};
  for (const auto& w : words) {
    SolverSelection s;
    if (w == "admm_mm") {
      s.kind = SolverKind::AdmmMm;
    } else if (w == "pg") {
      s.kind = SolverKind::Pg;
      s.step = cfg.get_double("solver.pg.mu");
    } else if (w == "bcd") {
      s.kind = SolverKind::Bcd;
      s.step = cfg.get_double("solver.bcd.mu");
    } else {
      throw ConfigError(cfg.source() + ": unknown solver '" + w + "' (expected admm_mm, pg or bcd)");
    }
    if (!(s.step >= 0.0)) throw ConfigError(cfg.source() + ": step sizes must be >= 0");
    for (const auto& prev : out) {
      if (prev.kind == s.kind) throw ConfigError(cfg.source() + ": solver '" + w + "' listed twice");
    }
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError(cfg.source() + ": solver.methods is empty");
  return out;
}

SolverConfig parse_solver_config(const Config& cfg) {
  SolverConfig s;
  try {
    s.loss = parse_loss_kind(cfg.get_string("solver.loss", "l2"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.source() + ": " + e.what());
  }
  s.alpha = cfg.get_double("solver.alpha", s.alpha);
  s.beta = cfg.get_double("solver.beta", s.beta);
  if (cfg.has("solver.lambda")) s.lambda_override = cfg.get_double("solver.lambda");
  s.sweeps_per_iter = static_cast<int>(cfg.get_int("solver.sweeps", s.sweeps_per_iter));
  s.max_iter = static_cast<int>(cfg.get_int("solver.max_iter", s.max_iter));
  s.tol = cfg.get_double("solver.tol", s.tol);
  s.seed = get_seed(cfg, "solver.seed");
  try {
    validate(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.source() + ": " + e.what());
  }
  return s;
}

DenseTensor load_x0(const std::string& path) {
  return ends_with(path, ".ppm") ? load_image_ppm(path) : load_tensor(path);
}

DenseTensor make_x0(const DataSpec& data) {
  if (data.path) return load_x0(*data.path);
  DenseTensor x0 = reconstruct(init_params(data.truth));
  const double norm = x0.norm();
  x0.vec() *= data.rms * std::sqrt(static_cast<double>(x0.size())) / norm;
  return x0;
}

std::string summary_text(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << kSummaryHeader << '\n';
  for (const auto& r : rows) os << format_summary_row(r) << '\n';
  return os.str();
}

}  // namespace

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::AdmmMm: return "admm_mm";
    case SolverKind::Pg: return "pg";
    case SolverKind::Bcd: return "bcd";
  }
  return "?";
}

OperatorSpec parse_operator(const Config& cfg) {
  OperatorSpec op;
  const std::string kind = cfg.get_string("operator.kind", "identity");
  if (kind == "identity") {
    op.kind = OperatorKind::Identity;
  } else if (kind == "mask") {
    op.kind = OperatorKind::Mask;
    if (cfg.has("operator.path")) {
      op.path = cfg.get_string("operator.path");
    } else {
      op.fraction = get_nonnegative(cfg, "operator.fraction", op.fraction);
      if (op.fraction > 1.0) throw ConfigError(cfg.source() + ": operator.fraction must be <= 1");
      op.seed = get_seed(cfg, "operator.seed");
    }
  } else if (kind == "blur") {
    op.kind = OperatorKind::Blur;
    const std::string kernel = cfg.get_string("operator.kernel", "gaussian");
    if (kernel == "gaussian") {
      const long long size = cfg.get_int("operator.size", static_cast<long long>(op.kernel_size));
      if (size <= 0) throw ConfigError(cfg.source() + ": operator.size must be positive");
      op.kernel_size = static_cast<std::size_t>(size);
      op.sigma = cfg.get_double("operator.sigma", op.sigma);
      if (!(op.sigma > 0.0)) throw ConfigError(cfg.source() + ": operator.sigma must be positive");
    } else {
      op.path = kernel;
    }
  } else if (kind == "downsample") {
    op.kind = OperatorKind::Downsample;
    const long long factor = cfg.get_int("operator.factor", static_cast<long long>(op.factor));
    if (factor <= 0) throw ConfigError(cfg.source() + ": operator.factor must be positive");
    op.factor = static_cast<std::size_t>(factor);
  } else if (kind == "dense") {
    op.kind = OperatorKind::Dense;
    op.path = cfg.get_string("operator.path");
  } else {
    throw ConfigError(cfg.source() + ": unknown operator.kind '" + kind + "'");
  }
  return op;
}

std::unique_ptr<LinearOperator> make_operator(const OperatorSpec& spec, const Shape& shape) {
  const std::size_t dim = shape_size(shape);
  try {
    switch (spec.kind) {
      case OperatorKind::Identity: return std::make_unique<IdentityOperator>(dim);
      case OperatorKind::Mask:
        if (!spec.path.empty()) return load_mask(spec.path, dim);
        return std::make_unique<MaskOperator>(random_mask(dim, spec.fraction, spec.seed));
      case OperatorKind::Blur: {
        Matrix kernel = spec.path.empty() ? gaussian_kernel(spec.kernel_size, spec.sigma) : load_kernel(spec.path);
        return std::make_unique<BlurOperator>(shape, std::move(kernel));
      }
      case OperatorKind::Downsample: return std::make_unique<DownsampleOperator>(shape, spec.factor);
      case OperatorKind::Dense: {
        auto op = load_dense_operator(spec.path);
        if (op->in_dim() != dim) {
          throw ConfigError("dense operator has " + std::to_string(op->in_dim()) + " columns, data has " +
                            std::to_string(dim) + " entries");
        }
        return op;
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("operator: ") + e.what());
  }
  throw ConfigError("operator: unhandled kind");
}

ExperimentConfig parse_experiment(const Config& cfg) {
  ExperimentConfig e;

  const std::string source = cfg.get_string("data.source", cfg.has("data.path") ? "file" : "synthetic");
  if (source == "file") {
    e.data.path = cfg.get_string("data.path");
  } else if (source == "synthetic") {
    e.data.truth.kind = get_model_kind(cfg, "data.model");
    e.data.truth.shape = cfg.get_sizes("data.shape");
    e.data.truth.seed = get_seed(cfg, "data.seed");
    e.data.truth.nonnegative_init = cfg.get_bool("data.nonnegative", false);
    e.data.truth = finalize_model(
        [&] {
          ModelSpec s = e.data.truth;
          s.ranks = cfg.get_sizes("data.ranks");
          return s;
        }(),
        e.data.truth.shape);
    e.data.rms = get_nonnegative(cfg, "data.rms", 1.0);
  } else {
    throw ConfigError(cfg.source() + ": data.source must be 'synthetic' or 'file'");
  }

  e.op = parse_operator(cfg);
  e.noise = parse_noise(cfg);
  e.solver = parse_solver_config(cfg);
  e.solvers = parse_solvers(cfg);

  e.model.kind = get_model_kind(cfg, "model.kind");
  e.model.ranks = cfg.get_sizes("model.ranks");
  e.model.seed = get_seed(cfg, "model.seed");
  e.model.nonnegative_init = cfg.get_bool("model.nonnegative", e.solver.loss == LossKind::KL);
  if (!e.data.path) e.model = finalize_model(e.model, e.data.truth.shape);

  e.output_dir = cfg.get_string("output.dir", e.output_dir);
  e.threads = static_cast<int>(cfg.get_int("run.threads", 1));
  if (e.threads < 1) throw ConfigError(cfg.source() + ": run.threads must be >= 1");

  if (const auto unused = cfg.unused_keys(); !unused.empty()) {
    std::string list;
    for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError(cfg.source() + ": unrecognized keys: " + list);
  }
  return e;
}

ExperimentConfig load_experiment(const std::string& path) { return parse_experiment(Config::load(path)); }

void apply_noise(const NoiseSpec& noise, Vector& b) {
  std::mt19937_64 engine(noise.seed);
  switch (noise.kind) {
    case NoiseKind::None: return;
    case NoiseKind::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] += noise.sigma * normal(engine);
      return;
    }
    case NoiseKind::Impulse: {
      const auto n = static_cast<std::size_t>(b.size());
      const auto count = static_cast<std::size_t>(std::floor(noise.fraction * static_cast<double>(n)));
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      std::bernoulli_distribution coin(0.5);
      for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(engine)]);
        const double sign = coin(engine) ? 1.0 : -1.0;
        b[static_cast<Eigen::Index>(idx[i])] += sign * noise.amplitude;
      }
      return;
    }
    case NoiseKind::Poisson: {
      const double scale = b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0;
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        if (b[i] < -1e-12 * scale) {
          throw ConfigError("poisson noise requires nonnegative clean observations (entry " + std::to_string(i) +
                            " is " + std::to_string(b[i]) + ")");
        }
        const double mean = std::max(b[i], 0.0);
        if (mean == 0.0) {
          b[i] = 0.0;
        } else {
          std::poisson_distribution<long long> draw(mean);
          b[i] = static_cast<double>(draw(engine));
        }
      }
      return;
    }
  }
}

Problem synthesize_problem(const ExperimentConfig& cfg) {
  Problem p;
  p.x0 = make_x0(cfg.data);
  p.op = make_operator(cfg.op, p.x0.shape());
  p.b_clean = p.op->forward(p.x0.vec());
  p.b = p.b_clean;
  apply_noise(cfg.noise, p.b);
  return p;
}

std::string format_summary_row(const SummaryRow& row) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << row.solver << ',' << row.loss << ',' << row.op << ',' << row.final_objective << ',' << row.elapsed_s << ','
     << row.relative_error;
  return os.str();
}

std::vector<SummaryRow> execute_experiment(const ExperimentConfig& cfg) {
  const Problem problem = synthesize_problem(cfg);
  const ModelSpec model = finalize_model(cfg.model, problem.x0.shape());
  if (cfg.solver.loss == LossKind::KL) {
    for (Eigen::Index i = 0; i < problem.b.size(); ++i) {
      if (problem.b[i] < 0.0) throw ConfigError("KL loss requires nonnegative observations; choose nonnegative data/noise");
    }
  }

  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
  save_tensor((dir / "x0.tensor").string(), problem.x0);

  std::vector<SummaryRow> rows(cfg.solvers.size());
  std::vector<std::exception_ptr> errors(cfg.solvers.size());
  const double x0_norm = problem.x0.norm();

  auto run_one = [&](std::size_t i) {
    try {
      const SolverSelection& sel = cfg.solvers[i];
      const auto t0 = std::chrono::steady_clock::now();
      SolveResult res;
      switch (sel.kind) {
        case SolverKind::AdmmMm: res = admm_mm_solve(problem.b, *problem.op, model, cfg.solver); break;
        case SolverKind::Pg: res = pg_solve(problem.b, *problem.op, model, cfg.solver, sel.step); break;
        case SolverKind::Bcd: res = bcd_solve(problem.b, *problem.op, model, cfg.solver, sel.step); break;
      }
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      const std::string label(to_string(sel.kind));
      const DenseTensor recon = reconstruct(res.theta);
      {
        std::ofstream os(dir / ("trace_" + label + ".csv"));
        if (!os) throw ConfigError("cannot write trace for " + label);
        write_trace_csv(os, res.trace);
      }
      save_tensor((dir / ("recon_" + label + ".tensor")).string(), recon);
      save_params((dir / ("params_" + label + ".txt")).string(), res.theta);
      if (is_rgb_shape(recon.shape())) save_image_ppm((dir / ("recon_" + label + ".ppm")).string(), recon);

      SummaryRow& row = rows[i];
      row.solver = label;
      row.loss = std::string(to_string(cfg.solver.loss));
      row.op = to_string(cfg.op.kind);
      row.final_objective = res.trace.records.empty()
                                ? objective(problem.b, *problem.op, res.theta, cfg.solver.loss, cfg.solver.alpha)
                                : res.trace.records.back().objective;
      row.elapsed_s = elapsed;
      row.relative_error = (recon.vec() - problem.x0.vec()).norm() / (x0_norm > 0.0 ? x0_norm : 1.0);
      row.iterations = static_cast<int>(res.trace.records.size());
    } catch (const NumericalError& e) {
      errors[i] = std::make_exception_ptr(NumericalError(std::string(to_string(cfg.solvers[i].kind)) + ": " + e.what()));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), cfg.solvers.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.solvers.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cfg.solvers.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::ofstream summary(dir / "summary.csv");
  if (!summary) throw ConfigError("cannot write summary.csv");
  summary << summary_text(rows);
  return rows;
}

int run_experiment(const std::string& config_path, std::ostream& out, std::ostream& err) {
  try {
    ExperimentConfig cfg = load_experiment(config_path);
    if (const char* env = std::getenv("GTD_OUTPUT_DIR"); env != nullptr && *env != '\0') cfg.output_dir = env;
    out << summary_text(execute_experiment(cfg));
    return 0;
  } catch (const NumericalError& e) {
    err << "gtd: numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "gtd: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "gtd: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "gtd: invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const std::out_of_range& e) {
    err << "gtd: invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "gtd: numerical failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace gtd
