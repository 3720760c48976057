#include "ggcam/gaze_heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ggcam/errors.hpp"

namespace ggcam {

GazeTrace::GazeTrace(std::vector<std::pair<double, double>> raw, int w, int h)
    : samples(std::move(raw)), source_width(w), source_height(h) {
  if (w <= 0 || h <= 0) throw DataError("gaze trace: zero-sized source image");
  for (auto& [x, y] : samples) {
    if (!std::isfinite(x) || !std::isfinite(y))
      throw DataError("gaze trace: non-finite coordinate");
    x = std::clamp(x, 0.0, static_cast<double>(w) - 1.0);
    y = std::clamp(y, 0.0, static_cast<double>(h) - 1.0);
  }
}

namespace heatmap {

Tensor histogram(const GazeTrace& trace) {
  if (trace.source_width <= 0 || trace.source_height <= 0)
    throw DataError("histogram: zero-sized source image");
  Tensor counts({trace.source_height, trace.source_width});
  for (const auto& [x, y] : trace.samples) {
    int col = std::min(static_cast<int>(x), trace.source_width - 1);
    int row = std::min(static_cast<int>(y), trace.source_height - 1);
    counts.at(row, col) += 1.0;
  }
  return counts;
}

Tensor gaussian_blur(const Tensor& map, double sigma) {
  if (map.ndim() != 2) throw DataError("gaussian_blur: 2-D map expected");
  if (!(sigma > 0.0)) throw DataError("gaussian_blur: sigma must be positive");
  int h = map.extent(0), w = map.extent(1);
  int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
    kernel[static_cast<size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : kernel) v /= total;

  // Horizontal pass then vertical; each renormalizes by in-bounds mass.
  auto pass = [&](const Tensor& src, bool horizontal) {
    Tensor dst({h, w});
    int n = horizontal ? w : h;
    int m = horizontal ? h : w;
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < n; ++b) {
        double acc = 0.0, mass = 0.0;
        int lo = std::max(-radius, -b), hi = std::min(radius, n - 1 - b);
        for (int d = lo; d <= hi; ++d) {
          double kv = kernel[static_cast<size_t>(d + radius)];
          double sv = horizontal ? src.at(a, b + d) : src.at(b + d, a);
          acc += kv * sv;
          mass += kv;
        }
        (horizontal ? dst.at(a, b) : dst.at(b, a)) = acc / mass;
      }
    }
    return dst;
  };
  return pass(pass(map, true), false);
}

Tensor resample(const Tensor& map, int target_h, int target_w) {
  if (map.ndim() != 2) throw DataError("resample: 2-D map expected");
  int h = map.extent(0), w = map.extent(1);
  if (target_h < 1 || target_w < 1) throw DataError("resample: empty target");
  if (target_h > h || target_w > w)
    throw DataError("resample: upsampling unsupported");
  if (target_h == h && target_w == w) return map;

  double sy = static_cast<double>(h) / target_h;
  double sx = static_cast<double>(w) / target_w;
  Tensor out({target_h, target_w});
  for (int i = 0; i < target_h; ++i) {
    double y0 = i * sy, y1 = (i + 1) * sy;
    int ry0 = static_cast<int>(std::floor(y0));
    int ry1 = std::min(static_cast<int>(std::ceil(y1)), h);
    for (int j = 0; j < target_w; ++j) {
      double x0 = j * sx, x1 = (j + 1) * sx;
      int rx0 = static_cast<int>(std::floor(x0));
      int rx1 = std::min(static_cast<int>(std::ceil(x1)), w);
      double acc = 0.0;
      for (int r = ry0; r < ry1; ++r) {
        double wy = std::min<double>(r + 1, y1) - std::max<double>(r, y0);
        if (wy <= 0.0) continue;
        for (int c = rx0; c < rx1; ++c) {
          double wx = std::min<double>(c + 1, x1) - std::max<double>(c, x0);
          if (wx <= 0.0) continue;
          acc += wy * wx * map.at(r, c);
        }
      }
      out.at(i, j) = acc / (sy * sx);
    }
  }
  return out;
}

VisualHeatMap normalize(const Tensor& map, double blur_sigma) {
  if (map.ndim() != 2) throw DataError("normalize: 2-D map expected");
  if (map.min_element() < 0.0) throw DataError("normalize: negative input element");
  Tensor out = map;
  double mx = map.max_element();
  if (mx > 0.0) {
    for (int64_t i = 0; i < out.size(); ++i) out[i] /= mx;
  }
  return VisualHeatMap{std::move(out), blur_sigma};
}

VisualHeatMap make_heatmap(const GazeTrace& trace, double blur_sigma,
                           int target_h, int target_w) {
  Tensor counts = histogram(trace);
  Tensor blurred = gaussian_blur(counts, blur_sigma);
  Tensor small = resample(blurred, target_h, target_w);
  return normalize(small, blur_sigma);
}

double default_blur_sigma(int source_width) {
  return 0.3 * source_width * (600.0 / 1272.0);
}

GazeTrace read_gaze_csv(const std::string& path, int source_width,
                        int source_height) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open gaze file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty gaze file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y") throw DataError("gaze file header must be 't,x,y': " + path);

  std::vector<std::pair<double, double>> samples;
  double prev_t = -std::numeric_limits<double>::infinity();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tf, xf, yf;
    if (!std::getline(ss, tf, ',') || !std::getline(ss, xf, ',') ||
        !std::getline(ss, yf))
      throw DataError("malformed gaze row at " + path + ":" + std::to_string(lineno));
    try {
      double t = std::stod(tf), x = std::stod(xf), y = std::stod(yf);
      if (t < prev_t)
        throw DataError("gaze timestamps not monotone at " + path + ":" +
                        std::to_string(lineno));
      prev_t = t;
      samples.emplace_back(x, y);
    } catch (const std::invalid_argument&) {
      throw DataError("non-numeric gaze field at " + path + ":" + std::to_string(lineno));
    }
  }
  return GazeTrace(std::move(samples), source_width, source_height);
}

void write_gaze_csv(const std::string& path, const GazeTrace& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write gaze file: " + path);
  out << "t,x,y\n";
  char buf[96];
  for (size_t i = 0; i < trace.samples.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g", i * 16,
                  trace.samples[i].first, trace.samples[i].second);
    out << buf << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_heatmap_csv(const std::string& path, const Tensor& grid) {
  if (grid.ndim() != 2) throw DataError("heatmap csv: 2-D grid expected");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write heatmap file: " + path);
  char buf[40];
  for (int i = 0; i < grid.extent(0); ++i) {
    for (int j = 0; j < grid.extent(1); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", grid.at(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

Tensor read_heatmap_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open heatmap file: " + path);
  std::vector<double> data;
  int cols = -1, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    int n = 0;
    while (std::getline(ss, field, ',')) {
      data.push_back(std::stod(field));
      ++n;
    }
    if (cols < 0) cols = n;
    else if (cols != n) throw DataError("ragged heatmap csv: " + path);
    ++rows;
  }
  if (rows == 0) throw DataError("empty heatmap csv: " + path);
  return Tensor({rows, cols}, std::move(data));
}

}  // namespace heatmap

}  // namespace ggcam
