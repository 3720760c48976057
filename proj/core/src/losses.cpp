#include "ggcam/losses.hpp"

#include <cmath>

#include "ggcam/cam_head.hpp"
#include "ggcam/errors.hpp"

namespace ggcam {

UncertaintyWeights::UncertaintyWeights(double sigma_sm_init) {
  sigma_sm_raw = leaf(Tensor::scalar(cam::softplus_inverse(sigma_sm_init)));
  sigma_ce_raw = leaf(Tensor::scalar(cam::softplus_inverse(1.0)));
}

namespace {
double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
}  // namespace

double UncertaintyWeights::sigma_sm() const { return softplus(sigma_sm_raw->value[0]); }
double UncertaintyWeights::sigma_ce() const { return softplus(sigma_ce_raw->value[0]); }

namespace losses {

double cross_entropy(const Tensor& logits, int label) {
  if (logits.ndim() != 1) throw NumericalError("cross_entropy: 1-D logits expected");
  if (label < 0 || label >= logits.extent(0))
    throw DataError("cross_entropy: label out of range");
  double m = logits.max_element();
  double z = 0.0;
  for (int64_t i = 0; i < logits.size(); ++i) z += std::exp(logits[i] - m);
  return m + std::log(z) - logits[label];
}

double cross_entropy_cam_form(const Tensor& cam, const Tensor& bias, int label) {
  if (cam.ndim() != 3 || bias.ndim() != 1 || bias.extent(0) != cam.extent(0))
    throw NumericalError("cross_entropy_cam_form: shape mismatch");
  int c = cam.extent(0);
  if (label < 0 || label >= c) throw DataError("cross_entropy_cam_form: label out of range");
  int64_t hw = static_cast<int64_t>(cam.extent(1)) * cam.extent(2);
  if (hw == 0) throw NumericalError("cross_entropy_cam_form: empty spatial extent");
  Tensor means({c});
  for (int ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    const double* p = cam.data() + static_cast<size_t>(ci) * hw;
    for (int64_t i = 0; i < hw; ++i) acc += p[i];
    means[ci] = acc / static_cast<double>(hw) + bias[ci];
  }
  double m = means.max_element();
  double z = 0.0;
  for (int ci = 0; ci < c; ++ci) z += std::exp(means[ci] - m);
  return -means[label] + m + std::log(z);
}

double selective_mse(const Tensor& scaled_cam, const Tensor& target, int label) {
  if (scaled_cam.ndim() != 3) throw NumericalError("selective_mse: rank-3 CAM expected");
  if (target.ndim() != 2 || target.extent(0) != scaled_cam.extent(1) ||
      target.extent(1) != scaled_cam.extent(2))
    throw DataError("selective_mse: heat map dimension mismatch");
  if (label < 0 || label >= scaled_cam.extent(0))
    throw DataError("selective_mse: label out of range");
  int64_t hw = static_cast<int64_t>(target.size());
  const double* slice = scaled_cam.data() + static_cast<size_t>(label) * hw;
  double acc = 0.0;
  for (int64_t i = 0; i < hw; ++i) {
    double d = slice[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(hw);
}

double combined(double loss_sm, double loss_ce, double sigma_sm, double sigma_ce) {
  if (loss_sm < 0.0 || loss_ce < 0.0)
    throw NumericalError("combined loss: negative loss input");
  if (sigma_sm <= 0.0 || sigma_ce <= 0.0)
    throw NumericalError("combined loss: non-positive sigma");
  double inv_sm = 1.0 / sigma_sm, inv_ce = 1.0 / sigma_ce;
  double total = 0.5 * loss_sm * inv_sm * inv_sm + loss_ce * inv_ce * inv_ce +
                 std::log1p(sigma_sm) + std::log1p(sigma_ce);
  if (!std::isfinite(total))
    throw NumericalError("combined loss: overflow (check sigma_sm init)");
  return total;
}

Value combined_node(const Value& loss_sm, const Value& loss_ce,
                    const UncertaintyWeights& w) {
  Value ssm = ops::softplus(w.sigma_sm_raw);
  Value sce = ops::softplus(w.sigma_ce_raw);
  return ops::uncertainty_combine(loss_sm, loss_ce, ssm, sce);
}

}  // namespace losses

}  // namespace ggcam
