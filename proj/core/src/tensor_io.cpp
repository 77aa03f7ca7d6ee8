#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "gtd/errors.hpp"
#include "gtd/tensor.hpp"

namespace gtd {

void write_tensor(std::ostream& os, const DenseTensor& t) {
  os << "shape:";
  for (std::size_t extent : t.shape()) os << ' ' << extent;
  os << '\n';
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << t[i] << ((i + 1) % 8 == 0 || i + 1 == t.size() ? '\n' : ' ');
  }
  os.precision(old_precision);
}

DenseTensor read_tensor(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  std::istringstream header(line);
  std::string tag;
  header >> tag;
  if (tag != "shape:") throw FormatError("tensor text: expected 'shape:' header, got '" + line + "'");
  Shape shape;
  long long extent = 0;
  while (header >> extent) {
    if (extent <= 0) throw FormatError("tensor text: extents must be positive");
    shape.push_back(static_cast<std::size_t>(extent));
  }
  if (!header.eof()) throw FormatError("tensor text: malformed shape line '" + line + "'");
  if (shape.empty()) throw FormatError("tensor text: empty shape");

  Vector data(static_cast<Eigen::Index>(shape_size(shape)));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (!(is >> data[i])) {
      throw FormatError("tensor text: expected " + std::to_string(data.size()) + " values, read " +
                        std::to_string(i));
    }
  }
  return DenseTensor(std::move(shape), std::move(data));
}

void save_tensor(const std::string& path, const DenseTensor& t) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  write_tensor(os, t);
  if (!os) throw ConfigError("failed writing '" + path + "'");
}

DenseTensor load_tensor(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open tensor file '" + path + "'");
  return read_tensor(is);
}

}  // namespace gtd
