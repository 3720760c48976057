#pragma once

#include "ggcam/autodiff.hpp"
#include "ggcam/ops.hpp"

namespace ggcam {

// Trainable multi-task weights; positivity enforced via softplus
// reparameterization of the stored raw scalars.
struct UncertaintyWeights {
  Value sigma_sm_raw;
  Value sigma_ce_raw;

  // sigma_ce starts at exactly 1; sigma_sm at the given (small) value.
  explicit UncertaintyWeights(double sigma_sm_init);
  UncertaintyWeights() = default;

  double sigma_sm() const;
  double sigma_ce() const;
};

namespace losses {

// Plain (non-tape) evaluations, used for reporting and identity checks.

// -ln softmax(logits)[label], stable log-sum-exp form.
double cross_entropy(const Tensor& logits, int label);

// Cross entropy written directly on per-class CAM means and biases; equals
// cross_entropy of the corresponding logits by construction. Identity-check
// path only, never used for training.
double cross_entropy_cam_form(const Tensor& cam, const Tensor& bias, int label);

// Mean squared error over the true-class slice of the scaled CAM only.
double selective_mse(const Tensor& scaled_cam, const Tensor& target, int label);

// loss_sm/(2 s_sm^2) + loss_ce/s_ce^2 + ln(s_sm+1) + ln(s_ce+1)
double combined(double loss_sm, double loss_ce, double sigma_sm, double sigma_ce);

// Tape nodes for training (see ops.hpp for the primitives).
Value combined_node(const Value& loss_sm, const Value& loss_ce,
                    const UncertaintyWeights& w);

}  // namespace losses

}  // namespace ggcam
