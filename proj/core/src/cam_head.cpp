#include "ggcam/cam_head.hpp"

#include <cmath>

#include "ggcam/errors.hpp"
#include "ggcam/gaze_heatmap.hpp"
#include "ggcam/pgm.hpp"

namespace ggcam {

CamHead::CamHead(int num_classes, int num_features, std::mt19937_64& rng) {
  if (num_classes < 1 || num_features < 1)
    throw NumericalError("cam head: bad dimensions");
  double bound = std::sqrt(1.0 / num_features);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w({num_classes, num_features});
  for (int64_t i = 0; i < w.size(); ++i) w[i] = dist(rng);
  weight = leaf(std::move(w));
  bias = leaf(Tensor({num_classes}));
  alpha_raw = leaf(Tensor::scalar(cam::softplus_inverse(1.0)));
}

double CamHead::alpha() const {
  double v = alpha_raw->value[0];
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

namespace cam {

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw NumericalError("softplus_inverse: positive input required");
  // ln(e^y - 1); expm1 keeps precision for tiny y where this ~= ln y.
  return std::log(std::expm1(y));
}

Value compute_cam(const Value& features, const CamHead& head) {
  return ops::cam_project(features, head.weight);
}

CamForward forward(const Value& features, const CamHead& head) {
  Value cam = compute_cam(features, head);
  Value logits = ops::add(ops::channel_mean(cam), head.bias);
  Value alpha = ops::softplus(head.alpha_raw);
  Value scaled = ops::sigmoid(ops::scale(cam, alpha));
  return CamForward{logits, cam, scaled};
}

void export_map(const std::string& path_prefix, const Tensor& map) {
  pgm::write16_with_range(path_prefix + ".pgm", map);
  heatmap::write_heatmap_csv(path_prefix + ".csv", map);
}

}  // namespace cam

}  // namespace ggcam
