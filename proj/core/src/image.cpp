#include "gtd/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "gtd/errors.hpp"

namespace gtd {

namespace {

// Reads the next header integer, skipping whitespace and '#' comments.
long long header_int(std::istream& is) {
  for (;;) {
    const int c = is.peek();
    if (c == EOF) throw FormatError("ppm: truncated header");
    if (std::isspace(c)) {
      is.get();
    } else if (c == '#') {
      std::string comment;
      std::getline(is, comment);
    } else {
      break;
    }
  }
  long long v = 0;
  if (!(is >> v)) throw FormatError("ppm: malformed header");
  return v;
}

}  // namespace

bool is_rgb_shape(const Shape& shape) { return shape.size() == 3 && shape[2] == 3; }

DenseTensor read_image_ppm(std::istream& is) {
  char magic[2] = {0, 0};
  if (!is.read(magic, 2)) throw FormatError("ppm: empty input");
  if (magic[0] != 'P') throw FormatError("ppm: not a portable anymap");
  if (magic[1] != '6') {
    throw FormatError(std::string("ppm: unsupported format P") + magic[1] + " (only binary RGB P6 is accepted)");
  }
  const long long width = header_int(is);
  const long long height = header_int(is);
  const long long maxval = header_int(is);
  if (width <= 0 || height <= 0) throw FormatError("ppm: non-positive image size");
  if (maxval <= 0 || maxval > 255) throw FormatError("ppm: only 8-bit images (maxval <= 255) are supported");
  if (!std::isspace(is.get())) throw FormatError("ppm: missing whitespace after header");

  const auto h = static_cast<std::size_t>(height);
  const auto w = static_cast<std::size_t>(width);
  std::vector<unsigned char> pixels(h * w * 3);
  is.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(is.gcount()) != pixels.size()) throw FormatError("ppm: truncated pixel data");

  DenseTensor t({h, w, 3});
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        t[r + h * (c + w * ch)] = static_cast<double>(pixels[(r * w + c) * 3 + ch]);
      }
    }
  }
  return t;
}

DenseTensor load_image_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open image '" + path + "'");
  return read_image_ppm(is);
}

void write_image_ppm(std::ostream& os, const DenseTensor& image) {
  if (!is_rgb_shape(image.shape())) throw std::invalid_argument("write_image_ppm: expected an H x W x 3 tensor");
  const std::size_t h = image.shape()[0];
  const std::size_t w = image.shape()[1];
  os << "P6\n" << w << ' ' << h << "\n255\n";
  std::vector<unsigned char> pixels(h * w * 3);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double v = std::clamp(image[r + h * (c + w * ch)], 0.0, 255.0);
        pixels[(r * w + c) * 3 + ch] = static_cast<unsigned char>(std::lround(v));
      }
    }
  }
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void save_image_ppm(const std::string& path, const DenseTensor& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  write_image_ppm(os, image);
}

}  // namespace gtd
