#pragma once

#include <string>

#include "ggcam/tensor.hpp"

namespace ggcam::pgm {

// Binary (P5) PGM. 8-bit images carry values scaled to [0,1] in the Tensor;
// 16-bit writes record the original [min,max] range in a sidecar line file.

Tensor read(const std::string& path);  // -> H x W, values in [0,1]
void write8(const std::string& path, const Tensor& image);  // clamps to [0,1]

// Linearly maps [min,max] of `map` onto [0,65535]; writes `path` plus a
// sidecar `path + ".range"` containing "min max" for exact reconstruction.
void write16_with_range(const std::string& path, const Tensor& map);

}  // namespace ggcam::pgm
