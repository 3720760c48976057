#include "ggcam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "ggcam/errors.hpp"

namespace ggcam::eval {

Tensor softmax_vec(const Tensor& logits) {
  if (logits.ndim() != 1 || logits.size() == 0)
    throw NumericalError("softmax_vec: nonempty 1-D input expected");
  Tensor out = logits;
  double m = out.max_element();
  double z = 0.0;
  for (int64_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(out[i] - m);
    z += out[i];
  }
  for (int64_t i = 0; i < out.size(); ++i) out[i] /= z;
  return out;
}

namespace {

// P(score of a class-i sample exceeds score of a class-j sample), ties 1/2,
// scoring both by the class-i probability.
double pairwise_rank_stat(const std::vector<const ScoredPrediction*>& of_i,
                          const std::vector<const ScoredPrediction*>& of_j,
                          int score_class) {
  double wins = 0.0;
  for (const auto* a : of_i) {
    double sa = a->probs[score_class];
    for (const auto* b : of_j) {
      double sb = b->probs[score_class];
      if (sa > sb) wins += 1.0;
      else if (sa == sb) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(of_i.size()) * static_cast<double>(of_j.size()));
}

}  // namespace

double auc_multiclass(const std::vector<ScoredPrediction>& preds) {
  if (preds.empty()) throw DataError("auc: empty prediction set");
  int c = preds[0].probs.extent(0);
  std::vector<std::vector<const ScoredPrediction*>> by_class(static_cast<size_t>(c));
  for (const auto& p : preds) {
    if (p.label < 0 || p.label >= c) throw DataError("auc: label out of range");
    by_class[static_cast<size_t>(p.label)].push_back(&p);
  }
  double acc = 0.0;
  int pairs = 0;
  for (int i = 0; i < c; ++i) {
    for (int j = i + 1; j < c; ++j) {
      const auto& ci = by_class[static_cast<size_t>(i)];
      const auto& cj = by_class[static_cast<size_t>(j)];
      if (ci.empty() || cj.empty()) {
        std::cerr << "warning: class pair (" << i << "," << j
                  << ") excluded from AUC, class absent from data\n";
        continue;
      }
      double a_ij = pairwise_rank_stat(ci, cj, i);
      double a_ji = pairwise_rank_stat(cj, ci, j);
      acc += 0.5 * (a_ij + a_ji);
      ++pairs;
    }
  }
  if (pairs == 0) throw DataError("auc: no class pair has samples of both classes");
  return acc / pairs;
}

std::vector<ClassMetrics> precision_recall(const std::vector<ScoredPrediction>& preds,
                                           int num_classes) {
  if (preds.empty()) throw DataError("precision_recall: empty prediction set");
  std::vector<int64_t> tp(static_cast<size_t>(num_classes), 0);
  std::vector<int64_t> predicted(static_cast<size_t>(num_classes), 0);
  std::vector<int64_t> actual(static_cast<size_t>(num_classes), 0);
  for (const auto& p : preds) {
    int arg = 0;
    for (int i = 1; i < p.probs.extent(0); ++i)
      if (p.probs[i] > p.probs[arg]) arg = i;  // first-index tie-break
    ++predicted[static_cast<size_t>(arg)];
    ++actual[static_cast<size_t>(p.label)];
    if (arg == p.label) ++tp[static_cast<size_t>(arg)];
  }
  std::vector<ClassMetrics> out(static_cast<size_t>(num_classes));
  for (size_t i = 0; i < out.size(); ++i) {
    if (predicted[i] > 0)
      out[i].precision = static_cast<double>(tp[i]) / static_cast<double>(predicted[i]);
    if (actual[i] > 0)
      out[i].recall = static_cast<double>(tp[i]) / static_cast<double>(actual[i]);
  }
  return out;
}

bool interpretability(const Tensor& cam_slice, const SegmentationMask& mask) {
  if (cam_slice.ndim() != 2 || mask.grid.ndim() != 2)
    throw DataError("interpretability: 2-D inputs expected");
  if (mask.grid.max_element() <= 0.0)
    throw DataError("interpretability: empty mask");
  int h = cam_slice.extent(0), w = cam_slice.extent(1);
  int h0 = mask.grid.extent(0), w0 = mask.grid.extent(1);

  int arg = 0;
  for (int64_t i = 1; i < cam_slice.size(); ++i)
    if (cam_slice[i] > cam_slice[arg]) arg = static_cast<int>(i);
  int peak_row = arg / w, peak_col = arg % w;

  for (int r = 0; r < h0; ++r) {
    if (static_cast<int>(static_cast<int64_t>(r) * h / h0) != peak_row) continue;
    for (int c = 0; c < w0; ++c) {
      if (static_cast<int>(static_cast<int64_t>(c) * w / w0) != peak_col) continue;
      if (mask.grid.at(r, c) > 0.0) return true;
    }
  }
  return false;
}

CamStats cam_element_stats(const std::vector<double>& elements, int bin_count) {
  if (elements.empty()) throw DataError("cam_element_stats: empty input");
  if (bin_count < 1) throw DataError("cam_element_stats: bad bin count");
  CamStats s{};
  auto [lo_it, hi_it] = std::minmax_element(elements.begin(), elements.end());
  double lo = *lo_it, hi = *hi_it;
  s.mean = std::accumulate(elements.begin(), elements.end(), 0.0) /
           static_cast<double>(elements.size());
  std::vector<double> sorted = elements;
  std::sort(sorted.begin(), sorted.end());
  size_t n = sorted.size();
  s.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  if (lo == hi) {
    s.bin_edges = {lo, hi};
    s.bin_counts = {static_cast<int64_t>(n)};
    s.mode = lo;
    return s;
  }
  s.bin_edges.resize(static_cast<size_t>(bin_count) + 1);
  for (int i = 0; i <= bin_count; ++i)
    s.bin_edges[static_cast<size_t>(i)] = lo + (hi - lo) * i / bin_count;
  s.bin_counts.assign(static_cast<size_t>(bin_count), 0);
  for (double v : elements) {
    int b = std::min(static_cast<int>((v - lo) / (hi - lo) * bin_count), bin_count - 1);
    ++s.bin_counts[static_cast<size_t>(b)];
  }
  auto mode_it = std::max_element(s.bin_counts.begin(), s.bin_counts.end());
  size_t mode_bin = static_cast<size_t>(mode_it - s.bin_counts.begin());
  s.mode = 0.5 * (s.bin_edges[mode_bin] + s.bin_edges[mode_bin + 1]);
  return s;
}

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw NumericalError("incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  // Lentz continued fraction for the regularized incomplete beta.
  auto betacf = [](double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-15, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
      int m2 = 2 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < fpmin) d = fpmin;
      c = 1.0 + aa / c;
      if (std::abs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < fpmin) d = fpmin;
      c = 1.0 + aa / c;
      if (std::abs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < eps) return h;
    }
    throw NumericalError("incomplete_beta: continued fraction did not converge");
  };

  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw DataError("anova: at least two groups required");
  int64_t n_total = 0;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw DataError("anova: each group needs at least two values");
    n_total += static_cast<int64_t>(g.size());
    grand_sum += std::accumulate(g.begin(), g.end(), 0.0);
  }
  double grand_mean = grand_sum / static_cast<double>(n_total);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (mean - grand_mean) * (mean - grand_mean);
    for (double v : g) ssw += (v - mean) * (v - mean);
  }
  int64_t df_between = static_cast<int64_t>(groups.size()) - 1;
  int64_t df_within = n_total - static_cast<int64_t>(groups.size());
  if (ssw <= 0.0)
    throw NumericalError("anova: zero within-group variance (degenerate data)");

  double f = (ssb / static_cast<double>(df_between)) / (ssw / static_cast<double>(df_within));
  double d1 = static_cast<double>(df_between), d2 = static_cast<double>(df_within);
  double p = incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
  return AnovaResult{f, p};
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median: empty input");
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace ggcam::eval
