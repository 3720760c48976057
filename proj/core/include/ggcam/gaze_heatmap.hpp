#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ggcam/tensor.hpp"

namespace ggcam {

// Ordered eye-tracker samples in source-image pixel space. Coordinates are
// clamped to [0, W0) x [0, H0) at ingestion; an empty trace is legal and
// yields an all-zero heat map downstream.
struct GazeTrace {
  std::vector<std::pair<double, double>> samples;  // (x, y)
  int source_width = 0;
  int source_height = 0;

  GazeTrace(std::vector<std::pair<double, double>> raw, int w, int h);
  GazeTrace() = default;
};

// Normalized H x W attention map, elements in [0,1]; max element is exactly
// 1 whenever the pre-normalization map is nonzero.
struct VisualHeatMap {
  Tensor grid;        // H x W
  double blur_sigma;  // pixels, source-image scale
};

namespace heatmap {

// Per-pixel bin counts; sum over bins equals the (clamped) sample count.
Tensor histogram(const GazeTrace& trace);

// Separable Gaussian filter, kernel truncated at +/-4*sigma and renormalized
// to unit sum; borders renormalized by in-bounds kernel mass so constant
// maps stay constant.
Tensor gaussian_blur(const Tensor& map, double sigma);

// Exact area-average downsampling. Upsampling is unsupported.
Tensor resample(const Tensor& map, int target_h, int target_w);

// Divide by max element; all-zero input stays all-zero.
VisualHeatMap normalize(const Tensor& map, double blur_sigma);

// histogram -> gaussian_blur -> resample -> normalize, in that order.
VisualHeatMap make_heatmap(const GazeTrace& trace, double blur_sigma,
                           int target_h, int target_w);

// Table-derived default, proportional to source width.
double default_blur_sigma(int source_width);

// Reads `t,x,y` CSV (t in ms, monotone non-decreasing; validated, unused).
GazeTrace read_gaze_csv(const std::string& path, int source_width,
                        int source_height);
void write_gaze_csv(const std::string& path, const GazeTrace& trace);

// Heat-map grid as CSV rows of full-precision floats; round-trips bit-exact.
void write_heatmap_csv(const std::string& path, const Tensor& grid);
Tensor read_heatmap_csv(const std::string& path);

}  // namespace heatmap

}  // namespace ggcam
