#pragma once

#include <cstdint>
#include <string>

#include "ggcam/gaze_heatmap.hpp"
#include "ggcam/tensor.hpp"

namespace ggcam {

// Three-class toy corpus: class 0 baseline anatomy, class 1 enlarged bright
// "heart" ellipse, class 2 high-variance texture patch inside a "lung".
// Classes are mutually exclusive.
struct SceneSpec {
  int image_size = 64;
  double noise_level = 0.35;
  uint64_t seed = 0;
};

struct GeneratedSample {
  Tensor image;      // S x S, values in [0,1]
  int label;         // 0-based
  Tensor heart_mask; // S x S binary
  Tensor lung_mask;  // S x S binary
  GazeTrace trace;
};

namespace synth {

inline constexpr int kNumClasses = 3;

GeneratedSample generate_sample(const SceneSpec& spec, int label, uint64_t seed);

// Writes images/, masks/heart/, masks/lung/, gaze/, manifest.csv under
// `out_dir`. Splits are 70/10/20 per class, label-balanced exactly.
void generate_corpus(const std::string& out_dir, int n_per_class, uint64_t seed,
                     const SceneSpec& spec = SceneSpec{});

}  // namespace synth

}  // namespace ggcam
