#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gtd/config.hpp"
#include "gtd/errors.hpp"
#include "gtd/experiment.hpp"
#include "gtd/linops.hpp"

namespace {

// Inline operator spec: comma separated key=value pairs, e.g.
//   kind=blur,shape=16x16x3,size=5,sigma=1
// Keys are the operator.* config keys without the prefix; shape uses 'x'.
gtd::Config inline_spec(const std::string& spec) {
  gtd::Config cfg = gtd::Config::parse_string("", "<operator-spec>");
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw gtd::ConfigError("operator spec: expected key=value, got '" + item + "'");
    std::string key = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    if (key == "shape") {
      for (char& c : value) {
        if (c == 'x') c = ' ';
      }
    }
    const std::string full = "operator." + key;
    if (cfg.has(full)) throw gtd::ConfigError("operator spec: duplicate key '" + key + "'");
    cfg.set(full, value);
  }
  return cfg;
}

int eigs(const std::string& spec, double tol, int max_iter, std::uint64_t seed) {
  try {
    const bool is_file = spec.find('=') == std::string::npos && std::filesystem::exists(spec);
    const gtd::Config cfg = is_file ? gtd::Config::load(spec) : inline_spec(spec);
    const std::string shape_key = cfg.has("operator.shape") || !cfg.has("data.shape") ? "operator.shape" : "data.shape";
    const gtd::Shape shape = cfg.get_sizes(shape_key);
    const auto op = gtd::make_operator(gtd::parse_operator(cfg), shape);
    if (!is_file) {
      if (const auto unused = cfg.unused_keys(); !unused.empty()) {
        throw gtd::ConfigError("operator spec: unrecognized key '" + unused.front().substr(9) + "'");
      }
    }
    const gtd::SpectralBound bound = gtd::max_eigenvalue(*op, tol, max_iter, seed);
    std::cout << std::setprecision(std::numeric_limits<double>::max_digits10) << "operator: " << op->name() << '\n'
              << "in_dim: " << op->in_dim() << '\n'
              << "out_dim: " << op->out_dim() << '\n'
              << "lambda: " << bound.lambda << '\n'
              << "rayleigh: " << bound.rayleigh << '\n'
              << "iterations: " << bound.iterations_used << '\n'
              << "converged: " << (bound.converged ? "true" : "false") << '\n';
    if (!bound.converged) {
      std::cerr << "gtd: power iteration did not converge; the bound is unreliable\n";
      return 2;
    }
    return 0;
  } catch (const gtd::ConfigError& e) {
    std::cerr << "gtd: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "gtd: invalid operator: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "gtd: numerical failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"General tensor decomposition solver"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Config file")->required();

  std::string spec;
  double tol = 1e-10;
  int max_iter = 5000;
  std::uint64_t seed = 0;
  auto* eig = app.add_subcommand("eigs", "Print the spectral bound of an operator");
  eig->add_option("operator-spec", spec, "Config file or inline kind=...,shape=AxBxC,...")->required();
  eig->add_option("--tol", tol, "Relative Rayleigh-quotient tolerance");
  eig->add_option("--max-iter", max_iter, "Power iteration limit");
  eig->add_option("--seed", seed, "Start vector seed");

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (run->parsed()) return gtd::run_experiment(config_path, std::cout, std::cerr);
  if (eig->parsed()) return eigs(spec, tol, max_iter, seed);
  std::cout << "gtd " << GTD_VERSION_STRING << '\n';
  return 0;
}
