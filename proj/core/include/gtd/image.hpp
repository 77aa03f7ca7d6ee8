#ifndef GTD_IMAGE_HPP_
#define GTD_IMAGE_HPP_

#include <iosfwd>
#include <string>

#include "gtd/tensor.hpp"

namespace gtd {

// Binary portable pixmap (P6, maxval <= 255). Pixel (row h, column w,
// channel c) maps to tensor entry (h, w, c) of an H x W x 3 tensor.

DenseTensor read_image_ppm(std::istream& is);
DenseTensor load_image_ppm(const std::string& path);

/// Values are clamped to [0, 255] and rounded to the nearest integer.
void write_image_ppm(std::ostream& os, const DenseTensor& image);
void save_image_ppm(const std::string& path, const DenseTensor& image);

/// True for H x W x 3 tensors.
bool is_rgb_shape(const Shape& shape);

}  // namespace gtd

#endif  // GTD_IMAGE_HPP_
