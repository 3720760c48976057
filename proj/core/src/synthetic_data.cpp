#include "ggcam/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "ggcam/errors.hpp"
#include "ggcam/pgm.hpp"

namespace fs = std::filesystem;

namespace ggcam::synth {

namespace {

struct Scene {
  // All coordinates in pixels, derived from the image size.
  double heart_cx, heart_cy, heart_rx, heart_ry;
  int lung_r0, lung_r1;        // shared row span for both lungs
  int lung1_c0, lung1_c1;
  int lung2_c0, lung2_c1;
};

Scene layout(int s) {
  Scene sc;
  sc.heart_cx = 0.53 * s;
  sc.heart_cy = 0.56 * s;
  sc.heart_rx = 0.125 * s;
  sc.heart_ry = 0.16 * s;
  sc.lung_r0 = static_cast<int>(0.16 * s);
  sc.lung_r1 = static_cast<int>(0.84 * s);
  sc.lung1_c0 = static_cast<int>(0.09 * s);
  sc.lung1_c1 = static_cast<int>(0.41 * s);
  sc.lung2_c0 = static_cast<int>(0.59 * s);
  sc.lung2_c1 = static_cast<int>(0.91 * s);
  return sc;
}

bool in_ellipse(double r, double c, double cy, double cx, double ry, double rx) {
  double dy = (r - cy) / ry, dx = (c - cx) / rx;
  return dy * dy + dx * dx <= 1.0;
}

}  // namespace

GeneratedSample generate_sample(const SceneSpec& spec, int label, uint64_t seed) {
  if (label < 0 || label >= kNumClasses) throw DataError("generate_sample: bad label");
  int s = spec.image_size;
  if (s < 16) throw DataError("generate_sample: image size too small");
  std::mt19937_64 rng(seed);
  Scene sc = layout(s);

  // Anatomy differences are kept subtle relative to the corner marker so the
  // marker is the path of least resistance for a purely label-driven model.
  bool enlarged = (label == 1);
  double rx = sc.heart_rx * (enlarged ? 1.25 : 1.0);
  double ry = sc.heart_ry * (enlarged ? 1.25 : 1.0);
  double heart_intensity = enlarged ? 0.66 : 0.55;

  GeneratedSample out;
  out.label = label;
  out.image = Tensor({s, s});
  out.heart_mask = Tensor({s, s});
  out.lung_mask = Tensor({s, s});

  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      double v = 0.30;
      bool in_lung1 = (r >= sc.lung_r0 && r < sc.lung_r1 && c >= sc.lung1_c0 && c < sc.lung1_c1);
      bool in_lung2 = (r >= sc.lung_r0 && r < sc.lung_r1 && c >= sc.lung2_c0 && c < sc.lung2_c1);
      if (in_lung1 || in_lung2) {
        v = 0.18;
        out.lung_mask.at(r, c) = 1.0;
      }
      if (in_ellipse(r, c, sc.heart_cy, sc.heart_cx, ry, rx)) {
        v = heart_intensity;
        out.heart_mask.at(r, c) = 1.0;
      }
      out.image.at(r, c) = v;
    }
  }

  // Class-correlated corner marker, mimicking the laterality/projection tags
  // burned into real radiographs. It is a classification shortcut that sits
  // outside every anatomical mask, so attention drawn to it is by definition
  // not interpretable.
  {
    int msz = std::max(4, s / 16);
    int r0 = label == 2 ? s - 1 - msz : 1;
    int c0 = label == 1 ? s - 1 - msz : 1;
    for (int r = r0; r < r0 + msz; ++r)
      for (int c = c0; c < c0 + msz; ++c) out.image.at(r, c) = 0.95;
  }

  // Class 2 (index 2): a bright high-variance texture patch inside one lung.
  double patch_cx = 0.0, patch_cy = 0.0;
  if (label == 2) {
    int patch = std::max(6, s / 6);
    std::uniform_int_distribution<int> which(0, 1);
    int c0 = which(rng) == 0 ? sc.lung1_c0 : sc.lung2_c0;
    int c1 = (c0 == sc.lung1_c0) ? sc.lung1_c1 : sc.lung2_c1;
    std::uniform_int_distribution<int> row_pick(sc.lung_r0, sc.lung_r1 - patch);
    std::uniform_int_distribution<int> col_pick(c0, c1 - patch);
    int pr = row_pick(rng), pc = col_pick(rng);
    std::uniform_real_distribution<double> tex(-0.25, 0.25);
    for (int r = pr; r < pr + patch; ++r)
      for (int c = pc; c < pc + patch; ++c)
        out.image.at(r, c) = std::clamp(0.36 + tex(rng), 0.0, 1.0);
    patch_cy = pr + patch / 2.0;
    patch_cx = pc + patch / 2.0;
  }

  std::normal_distribution<double> noise(0.0, spec.noise_level * 0.15);
  for (int64_t i = 0; i < out.image.size(); ++i)
    out.image[i] = std::clamp(out.image[i] + noise(rng), 0.0, 1.0);

  // Gaze: 80% scattered around the discriminative region (whole
  // heart+lung sweep for the normal class), 20% uniform scan.
  int m = 120;
  int clustered = (m * 8) / 10;
  double sigma = 0.08 * s;
  std::normal_distribution<double> scatter(0.0, sigma);
  std::uniform_real_distribution<double> uni(0.0, static_cast<double>(s));
  std::vector<std::pair<double, double>> samples;
  samples.reserve(static_cast<size_t>(m));
  double lung1_cx = 0.5 * (sc.lung1_c0 + sc.lung1_c1);
  double lung2_cx = 0.5 * (sc.lung2_c0 + sc.lung2_c1);
  double lung_cy = 0.5 * (sc.lung_r0 + sc.lung_r1);
  std::uniform_int_distribution<int> sweep(0, 2);
  for (int i = 0; i < clustered; ++i) {
    double cx, cy;
    if (label == 1) {
      cx = sc.heart_cx;
      cy = sc.heart_cy;
    } else if (label == 2) {
      cx = patch_cx;
      cy = patch_cy;
    } else {
      switch (sweep(rng)) {
        case 0: cx = sc.heart_cx; cy = sc.heart_cy; break;
        case 1: cx = lung1_cx; cy = lung_cy; break;
        default: cx = lung2_cx; cy = lung_cy; break;
      }
    }
    samples.emplace_back(cx + scatter(rng), cy + scatter(rng));
  }
  for (int i = clustered; i < m; ++i) samples.emplace_back(uni(rng), uni(rng));
  out.trace = GazeTrace(std::move(samples), s, s);
  return out;
}

void generate_corpus(const std::string& out_dir, int n_per_class, uint64_t seed,
                     const SceneSpec& spec) {
  if (n_per_class < 10) throw DataError("generate_corpus: need at least 10 per class");
  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "masks" / "heart");
  fs::create_directories(fs::path(out_dir) / "masks" / "lung");
  fs::create_directories(fs::path(out_dir) / "gaze");

  int n_train = (n_per_class * 7) / 10;
  int n_val = n_per_class / 10;

  std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
  if (!manifest) throw DataError("cannot write manifest in " + out_dir);
  manifest << "id,label,split\n";

  char id[32];
  for (int label = 0; label < kNumClasses; ++label) {
    for (int i = 0; i < n_per_class; ++i) {
      std::snprintf(id, sizeof(id), "c%d_%04d", label + 1, i);
      uint64_t sample_seed = seed * 1000003ULL + static_cast<uint64_t>(label) * 100000ULL +
                             static_cast<uint64_t>(i);
      GeneratedSample gs = generate_sample(spec, label, sample_seed);
      pgm::write8((fs::path(out_dir) / "images" / (std::string(id) + ".pgm")).string(),
                  gs.image);
      pgm::write8((fs::path(out_dir) / "masks" / "heart" / (std::string(id) + ".pgm")).string(),
                  gs.heart_mask);
      pgm::write8((fs::path(out_dir) / "masks" / "lung" / (std::string(id) + ".pgm")).string(),
                  gs.lung_mask);
      heatmap::write_gaze_csv((fs::path(out_dir) / "gaze" / (std::string(id) + ".csv")).string(),
                              gs.trace);
      const char* split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
      manifest << id << "," << (label + 1) << "," << split << "\n";
    }
  }
  if (!manifest) throw DataError("manifest write failed in " + out_dir);
}

}  // namespace ggcam::synth
