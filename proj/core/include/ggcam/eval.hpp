#pragma once

#include <optional>
#include <vector>

#include "ggcam/tensor.hpp"

namespace ggcam {

struct ScoredPrediction {
  Tensor probs;  // C, softmax output
  int label;     // 0-based true class
};

// Nonzero grid elements mark in-mask source pixels.
struct SegmentationMask {
  Tensor grid;  // H0 x W0
};

namespace eval {

Tensor softmax_vec(const Tensor& logits);

// Multi-class AUC (one-vs-one rank statistics averaged over class pairs,
// ties counted 1/2). Pairs missing a class are excluded with a warning on
// stderr and the average recomputed over the remaining pairs.
double auc_multiclass(const std::vector<ScoredPrediction>& preds);

struct ClassMetrics {
  std::optional<double> precision;  // absent when the class is never predicted
  std::optional<double> recall;     // absent when the class never occurs
};
std::vector<ClassMetrics> precision_recall(const std::vector<ScoredPrediction>& preds,
                                           int num_classes);

// True iff the first row-major argmax cell of the class CAM falls inside the
// mask once the mask is downscaled to the CAM grid (a cell is inside if any
// source pixel mapping to it is set).
bool interpretability(const Tensor& cam_slice, const SegmentationMask& mask);

struct CamStats {
  std::vector<double> bin_edges;   // bin_count + 1 edges
  std::vector<int64_t> bin_counts;
  double mean, median, mode;
};
CamStats cam_element_stats(const std::vector<double>& elements, int bin_count = 64);

struct AnovaResult {
  double f;
  double p;
};
AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

double median(std::vector<double> values);

}  // namespace eval

}  // namespace ggcam
