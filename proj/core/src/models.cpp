#include "gtd/models.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "chain.hpp"
#include "gtd/errors.hpp"

namespace gtd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class Sampler {
 public:
  Sampler(std::uint64_t seed, bool nonnegative) : engine_(seed), nonnegative_(nonnegative) {}

  double operator()() {
    const double x = normal_(engine_);
    return nonnegative_ ? std::abs(x) : x;
  }

  Matrix matrix(std::size_t rows, std::size_t cols) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    // Fill column-major so the draw order matches the storage order.
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (*this)();
    return m;
  }

  DenseTensor tensor(Shape shape) {
    DenseTensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = (*this)();
    return t;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  bool nonnegative_;
};

template <class P, class F>
void for_each_block(P& p, F&& f) {
  std::visit(
      [&](auto& params) {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, CpParams>) {
          for (auto& u : params.factors) f(u.data(), u.size());
        } else if constexpr (std::is_same_v<T, TuckerParams>) {
          f(params.core.vec().data(), params.core.vec().size());
          for (auto& u : params.factors) f(u.data(), u.size());
        } else {
          for (auto& g : params.cores) f(g.vec().data(), g.vec().size());
        }
      },
      p);
}

std::size_t block_count(const TdParams& p) {
  return std::visit(overloaded{
                        [](const CpParams& cp) { return cp.factors.size(); },
                        [](const TuckerParams& tk) { return tk.factors.size() + 1; },
                        [](const auto& chain) { return chain.cores.size(); },
                    },
                    p);
}

DenseTensor reconstruct_cp(const CpParams& cp) {
  const auto& fs = cp.factors;
  if (fs.empty()) throw std::invalid_argument("CP parameters have no factors");
  const Eigen::Index rank = fs[0].cols();
  Shape shape;
  for (const auto& u : fs) {
    if (u.cols() != rank) throw std::invalid_argument("CP factors disagree on rank");
    shape.push_back(static_cast<std::size_t>(u.rows()));
  }
  Matrix mode0;
  if (fs.size() == 1) {
    mode0 = fs[0] * Vector::Ones(rank);
  } else {
    Matrix kr = khatri_rao_reversed(std::span<const Matrix>(fs).subspan(1));
    mode0 = fs[0] * kr.transpose();
  }
  return DenseTensor(std::move(shape), Eigen::Map<const Vector>(mode0.data(), mode0.size()));
}

DenseTensor reconstruct_tucker(const TuckerParams& tk) {
  if (tk.factors.size() != tk.core.order()) {
    throw std::invalid_argument("Tucker core order does not match factor count");
  }
  DenseTensor x = tk.core;
  for (std::size_t k = 0; k < tk.factors.size(); ++k) x = mode_n_product(x, tk.factors[k], k);
  return x;
}

void check_chain(const std::vector<DenseTensor>& cores, bool open) {
  if (cores.empty()) throw std::invalid_argument("chain model has no cores");
  for (std::size_t k = 0; k < cores.size(); ++k) {
    const auto& g = cores[k];
    if (g.order() != 3) throw std::invalid_argument("chain cores must be 3-way tensors");
    const auto& next = cores[(k + 1) % cores.size()];
    if (g.shape()[2] != next.shape()[0]) {
      throw std::invalid_argument("chain core " + std::to_string(k) + " right rank does not match next core");
    }
  }
  if (open && (cores.front().shape()[0] != 1 || cores.back().shape()[2] != 1)) {
    throw std::invalid_argument("TT boundary ranks must be 1");
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::CP: return "cp";
    case ModelKind::Tucker: return "tucker";
    case ModelKind::TT: return "tt";
    case ModelKind::TR: return "tr";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "cp" || name == "CP") return ModelKind::CP;
  if (name == "tucker" || name == "Tucker") return ModelKind::Tucker;
  if (name == "tt" || name == "TT") return ModelKind::TT;
  if (name == "tr" || name == "TR") return ModelKind::TR;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

void validate(const ModelSpec& spec) {
  if (spec.shape.empty()) throw std::invalid_argument("model shape is empty");
  for (std::size_t j : spec.shape) {
    if (j == 0) throw std::invalid_argument("model shape extents must be positive");
  }
  for (std::size_t r : spec.ranks) {
    if (r == 0) throw std::invalid_argument("model ranks must be positive");
  }
  const std::size_t n = spec.shape.size();
  const std::size_t nr = spec.ranks.size();
  switch (spec.kind) {
    case ModelKind::CP:
      if (nr != 1) throw std::invalid_argument("CP takes a single rank, got " + std::to_string(nr));
      break;
    case ModelKind::Tucker:
      if (nr != n) throw std::invalid_argument("Tucker takes one rank per mode");
      break;
    case ModelKind::TT:
      if (nr == n + 1) {
        if (spec.ranks.front() != 1 || spec.ranks.back() != 1) {
          throw std::invalid_argument("TT boundary ranks must be 1");
        }
      } else if (nr + 1 != n) {
        throw std::invalid_argument("TT takes N-1 interior ranks or N+1 ranks with unit ends");
      }
      break;
    case ModelKind::TR:
      if (nr != n) throw std::invalid_argument("TR takes one rank per mode (closed ring)");
      break;
  }
}

std::vector<std::size_t> chain_ranks(const ModelSpec& spec) {
  validate(spec);
  const std::size_t n = spec.shape.size();
  std::vector<std::size_t> r;
  if (spec.kind == ModelKind::TT) {
    if (spec.ranks.size() == n + 1) return spec.ranks;
    r.push_back(1);
    r.insert(r.end(), spec.ranks.begin(), spec.ranks.end());
    r.push_back(1);
    return r;
  }
  if (spec.kind == ModelKind::TR) {
    r = spec.ranks;
    r.push_back(spec.ranks.front());
    return r;
  }
  throw std::invalid_argument("chain_ranks: not a TT/TR spec");
}

ModelKind kind_of(const TdParams& p) {
  return std::visit(overloaded{
                        [](const CpParams&) { return ModelKind::CP; },
                        [](const TuckerParams&) { return ModelKind::Tucker; },
                        [](const TtParams&) { return ModelKind::TT; },
                        [](const TrParams&) { return ModelKind::TR; },
                    },
                    p);
}

Shape target_shape(const TdParams& p) {
  return std::visit(overloaded{
                        [](const CpParams& cp) {
                          Shape s;
                          for (const auto& u : cp.factors) s.push_back(static_cast<std::size_t>(u.rows()));
                          return s;
                        },
                        [](const TuckerParams& tk) {
                          Shape s;
                          for (const auto& u : tk.factors) s.push_back(static_cast<std::size_t>(u.rows()));
                          return s;
                        },
                        [](const auto& chain) {
                          Shape s;
                          for (const auto& g : chain.cores) s.push_back(g.shape()[1]);
                          return s;
                        },
                    },
                    p);
}

TdParams init_params(const ModelSpec& spec) {
  validate(spec);
  Sampler draw(spec.seed, spec.nonnegative_init);
  const std::size_t n = spec.shape.size();
  TdParams p;
  switch (spec.kind) {
    case ModelKind::CP: {
      CpParams cp;
      for (std::size_t k = 0; k < n; ++k) cp.factors.push_back(draw.matrix(spec.shape[k], spec.ranks[0]));
      p = std::move(cp);
      break;
    }
    case ModelKind::Tucker: {
      TuckerParams tk;
      tk.core = draw.tensor(spec.ranks);
      for (std::size_t k = 0; k < n; ++k) tk.factors.push_back(draw.matrix(spec.shape[k], spec.ranks[k]));
      p = std::move(tk);
      break;
    }
    case ModelKind::TT:
    case ModelKind::TR: {
      const auto r = chain_ranks(spec);
      std::vector<DenseTensor> cores;
      for (std::size_t k = 0; k < n; ++k) cores.push_back(draw.tensor({r[k], spec.shape[k], r[k + 1]}));
      if (spec.kind == ModelKind::TT) {
        p = TtParams{std::move(cores)};
      } else {
        p = TrParams{std::move(cores)};
      }
      break;
    }
  }

  const double norm = reconstruct(p).norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("initial reconstruction has zero norm");
  const double scale = std::pow(norm, -1.0 / static_cast<double>(block_count(p)));
  for_each_block(p, [scale](double* data, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size; ++i) data[i] *= scale;
  });
  return p;
}

DenseTensor reconstruct(const TdParams& p) {
  return std::visit(overloaded{
                        [](const CpParams& cp) { return reconstruct_cp(cp); },
                        [](const TuckerParams& tk) { return reconstruct_tucker(tk); },
                        [](const TtParams& tt) {
                          check_chain(tt.cores, true);
                          return detail::reconstruct_chain(tt.cores);
                        },
                        [](const TrParams& tr) {
                          check_chain(tr.cores, false);
                          return detail::reconstruct_chain(tr.cores);
                        },
                    },
                    p);
}

double penalty(const TdParams& p) {
  double total = 0.0;
  for_each_block(p, [&total](const double* data, Eigen::Index size) {
    total += Eigen::Map<const Vector>(data, size).squaredNorm();
  });
  return total;
}

Projection project(const TdParams& p, const DenseTensor& v, double ridge, int sweeps) {
  if (sweeps < 0) throw std::invalid_argument("project: negative sweep count");
  TdParams current = p;
  for (int s = 0; s < sweeps; ++s) current = als_sweep(current, v, ridge);
  DenseTensor x = reconstruct(current);
  return {std::move(current), std::move(x)};
}

namespace detail {

ChainProduct identity_chain(std::size_t rank) {
  ChainProduct c;
  c.left = c.right = rank;
  c.middle = 1;
  Matrix eye = Matrix::Identity(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(rank));
  c.data = Eigen::Map<const Vector>(eye.data(), eye.size());
  return c;
}

ChainProduct contract_chain(std::span<const DenseTensor> cores, std::span<const std::size_t> order) {
  if (order.empty()) throw std::invalid_argument("contract_chain: empty order");
  const DenseTensor& first = cores[order[0]];
  ChainProduct acc{first.shape()[0], first.shape()[1], first.shape()[2], first.vec()};
  for (std::size_t i = 1; i < order.size(); ++i) {
    const DenseTensor& g = cores[order[i]];
    if (g.shape()[0] != acc.right) throw std::invalid_argument("contract_chain: rank mismatch");
    const auto rows = static_cast<Eigen::Index>(acc.left * acc.middle);
    Eigen::Map<const Matrix> lhs(acc.data.data(), rows, static_cast<Eigen::Index>(acc.right));
    Eigen::Map<const Matrix> rhs(g.vec().data(), static_cast<Eigen::Index>(g.shape()[0]),
                                 static_cast<Eigen::Index>(g.shape()[1] * g.shape()[2]));
    // Column-major (a + L p, j + J c) is exactly the (a, p + P j, c) layout.
    Matrix prod = lhs * rhs;
    acc.middle *= g.shape()[1];
    acc.right = g.shape()[2];
    acc.data = Eigen::Map<const Vector>(prod.data(), prod.size());
  }
  return acc;
}

Vector chain_trace(const ChainProduct& product) {
  if (product.left != product.right) throw std::invalid_argument("chain_trace: open chain is not square");
  const std::size_t r = product.left;
  const std::size_t lm = product.left * product.middle;
  Vector out = Vector::Zero(static_cast<Eigen::Index>(product.middle));
  for (std::size_t a = 0; a < r; ++a) {
    for (std::size_t p = 0; p < product.middle; ++p) {
      out[static_cast<Eigen::Index>(p)] += product.data[static_cast<Eigen::Index>(a + r * p + lm * a)];
    }
  }
  return out;
}

DenseTensor reconstruct_chain(std::span<const DenseTensor> cores) {
  std::vector<std::size_t> order(cores.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  Shape shape;
  for (const auto& g : cores) shape.push_back(g.shape()[1]);
  return DenseTensor(std::move(shape), chain_trace(contract_chain(cores, order)));
}

std::vector<std::size_t> cyclic_unfold_map(const Shape& shape, std::size_t k) {
  const std::size_t n = shape.size();
  std::vector<std::size_t> strides(n, 1);
  for (std::size_t m = 1; m < n; ++m) strides[m] = strides[m - 1] * shape[m - 1];
  const std::size_t total = shape_size(shape);
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t l = 0; l < total; ++l) {
    // Column index of the cyclic matricization, chain position k+1 fastest.
    std::size_t p = 0;
    for (std::size_t step = n - 1; step >= 1; --step) {
      const std::size_t mode = (k + step) % n;
      p = p * shape[mode] + idx[mode];
    }
    map[idx[k] + shape[k] * p] = l;
    for (std::size_t m = 0; m < n; ++m) {
      if (++idx[m] < shape[m]) break;
      idx[m] = 0;
    }
  }
  return map;
}

}  // namespace detail

}  // namespace gtd
