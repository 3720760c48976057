#pragma once

#include <random>
#include <string>

#include "ggcam/autodiff.hpp"
#include "ggcam/ops.hpp"

namespace ggcam {

// Classification head computing the class activation map explicitly:
// cam_{c,i,j} = sum_k weight_{c,k} * A_{k,i,j}, logits_c = mean(cam^c) + bias_c,
// scaled_cam = sigmoid(alpha * cam) with alpha = softplus(alpha_raw) > 0.
struct CamHead {
  Value weight;     // C x G
  Value bias;       // C
  Value alpha_raw;  // scalar; effective alpha = softplus(alpha_raw)

  CamHead(int num_classes, int num_features, std::mt19937_64& rng);
  CamHead() = default;

  int num_classes() const { return weight->value.extent(0); }
  int num_features() const { return weight->value.extent(1); }
  double alpha() const;
};

struct CamForward {
  Value logits;      // C
  Value cam;         // C x H x W
  Value scaled_cam;  // C x H x W, elements in (0,1)
};

namespace cam {

// cam tensor of Eq-style 1x1 projection; no bias.
Value compute_cam(const Value& features, const CamHead& head);

// Full head forward: logits via the per-class CAM mean plus bias, and the
// sigmoid-scaled CAM.
CamForward forward(const Value& features, const CamHead& head);

// softplus^{-1}, numerically safe for tiny y (~= ln y there).
double softplus_inverse(double y);

// Per-class H x W map exported as 16-bit PGM (+ .range sidecar) and raw CSV.
void export_map(const std::string& path_prefix, const Tensor& map);

}  // namespace cam

}  // namespace ggcam
