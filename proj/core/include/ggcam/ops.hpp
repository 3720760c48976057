#pragma once

#include <vector>

#include "ggcam/autodiff.hpp"

namespace ggcam::ops {

// Elementwise / reductions
Value add(const Value& a, const Value& b);            // same shape
Value mul(const Value& a, const Value& b);            // same shape, elementwise
Value scale(const Value& x, const Value& s);          // s is scalar (size 1)
Value sum(const Value& x);                            // -> scalar
Value mean_all(const Value& x);                       // -> scalar
Value average(const std::vector<Value>& scalars);     // batch mean of scalars

// Activations
Value relu(const Value& x);
Value sigmoid(const Value& x);
Value softplus(const Value& x);
Value softmax(const Value& x);                        // 1-D input

// Network building blocks
// Cross-correlation semantics (no kernel flip). kernel: Cout x Cin x k x k,
// k odd; output spatial extent must divide exactly.
Value conv2d(const Value& input, const Value& kernel, const Value& bias,
             int stride, int pad);
Value maxpool2(const Value& x);                       // 2x2 stride-2, ties -> first row-major
Value global_avg_pool(const Value& x);                // G x H x W -> G
Value linear(const Value& x, const Value& weight, const Value& bias);  // W: C x G
// 1x1 convolution of A (G x H x W) by weight (C x G), no bias -> C x H x W.
Value cam_project(const Value& features, const Value& weight);
Value channel_mean(const Value& x);                   // C x H x W -> C

// Losses
Value cross_entropy(const Value& logits, int label);  // -ln softmax(logits)[label]
// Mean squared error between slice `label` of scaled_cam (C x H x W) and
// target (H x W); all other slices receive exactly zero gradient.
Value selective_mse(const Value& scaled_cam, const Tensor& target, int label);
// L = L_sm/(2 s_sm^2) + L_ce/s_ce^2 + ln(s_sm+1) + ln(s_ce+1); all inputs scalar.
Value uncertainty_combine(const Value& loss_sm, const Value& loss_ce,
                          const Value& sigma_sm, const Value& sigma_ce);

}  // namespace ggcam::ops
