#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gtd/errors.hpp"
#include "gtd/models.hpp"

namespace gtd {

namespace {

DenseTensor as_tensor(const Matrix& m) {
  return DenseTensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                     Eigen::Map<const Vector>(m.data(), m.size()));
}

Matrix as_matrix(const DenseTensor& t) {
  if (t.order() != 2) throw FormatError("parameter file: factor block is not 2-way");
  return Eigen::Map<const Matrix>(t.vec().data(), static_cast<Eigen::Index>(t.shape()[0]),
                                  static_cast<Eigen::Index>(t.shape()[1]));
}

std::vector<std::size_t> read_list_line(std::istream& is, const std::string& tag) {
  std::string line;
  while (std::getline(is, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  std::istringstream ls(line);
  std::string got;
  ls >> got;
  if (got != tag) throw FormatError("parameter file: expected '" + tag + "', got '" + line + "'");
  std::vector<std::size_t> values;
  long long v = 0;
  while (ls >> v) {
    if (v < 0) throw FormatError("parameter file: negative value in '" + tag + "' line");
    values.push_back(static_cast<std::size_t>(v));
  }
  return values;
}

void write_list(std::ostream& os, const std::string& tag, const std::vector<std::size_t>& values) {
  os << tag;
  for (std::size_t v : values) os << ' ' << v;
  os << '\n';
}

}  // namespace

void write_params(std::ostream& os, const TdParams& p) {
  std::vector<DenseTensor> blocks;
  std::vector<std::size_t> ranks;
  std::visit(
      [&](const auto& params) {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, CpParams>) {
          ranks.push_back(static_cast<std::size_t>(params.factors.at(0).cols()));
          for (const auto& u : params.factors) blocks.push_back(as_tensor(u));
        } else if constexpr (std::is_same_v<T, TuckerParams>) {
          ranks = params.core.shape();
          blocks.push_back(params.core);
          for (const auto& u : params.factors) blocks.push_back(as_tensor(u));
        } else {
          for (const auto& g : params.cores) ranks.push_back(g.shape()[0]);
          if constexpr (std::is_same_v<T, TtParams>) ranks.push_back(params.cores.back().shape()[2]);
          blocks = params.cores;
        }
      },
      p);
  os << "kind: " << to_string(kind_of(p)) << '\n';
  write_list(os, "shape:", target_shape(p));
  write_list(os, "ranks:", ranks);
  os << "blocks: " << blocks.size() << '\n';
  for (const auto& b : blocks) write_tensor(os, b);
}

TdParams read_params(std::istream& is) {
  std::string line;
  while (std::getline(is, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  std::istringstream ks(line);
  std::string tag;
  std::string kind_name;
  ks >> tag >> kind_name;
  if (tag != "kind:") throw FormatError("parameter file: expected 'kind:' line, got '" + line + "'");
  ModelKind kind{};
  try {
    kind = parse_model_kind(kind_name);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("parameter file: ") + e.what());
  }
  const Shape shape = read_list_line(is, "shape:");
  (void)read_list_line(is, "ranks:");
  const auto count = read_list_line(is, "blocks:");
  if (count.size() != 1) throw FormatError("parameter file: malformed 'blocks:' line");

  std::vector<DenseTensor> blocks;
  for (std::size_t i = 0; i < count[0]; ++i) blocks.push_back(read_tensor(is));

  TdParams p;
  switch (kind) {
    case ModelKind::CP: {
      CpParams cp;
      for (const auto& b : blocks) cp.factors.push_back(as_matrix(b));
      p = std::move(cp);
      break;
    }
    case ModelKind::Tucker: {
      if (blocks.empty()) throw FormatError("parameter file: Tucker needs a core block");
      TuckerParams tk;
      tk.core = blocks[0];
      for (std::size_t i = 1; i < blocks.size(); ++i) tk.factors.push_back(as_matrix(blocks[i]));
      p = std::move(tk);
      break;
    }
    case ModelKind::TT: p = TtParams{std::move(blocks)}; break;
    case ModelKind::TR: p = TrParams{std::move(blocks)}; break;
  }
  try {
    if (reconstruct(p).shape() != shape) throw FormatError("parameter file: blocks do not reconstruct the declared shape");
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("parameter file: inconsistent blocks: ") + e.what());
  }
  return p;
}

void save_params(const std::string& path, const TdParams& p) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  write_params(os, p);
}

TdParams load_params(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open parameter file '" + path + "'");
  return read_params(is);
}

}  // namespace gtd
