#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "ggcam/errors.hpp"
#include "ggcam/eval.hpp"
#include "test_util.hpp"

using namespace ggcam;
using testutil::random_tensor;

namespace {

ScoredPrediction scored(std::vector<double> probs, int label) {
  ScoredPrediction p;
  p.probs = Tensor({static_cast<int>(probs.size())}, probs);
  p.label = label;
  return p;
}

// Independent pairwise oracle: A(i|j) ranked by the class-i probability,
// ties counted one half; averaged per Hand & Till.
double auc_oracle(const std::vector<ScoredPrediction>& preds, int num_classes) {
  double total = 0.0;
  int pairs = 0;
  for (int i = 0; i < num_classes; ++i)
    for (int j = i + 1; j < num_classes; ++j) {
      auto a_given = [&](int pos, int neg, int score_class) {
        double wins = 0.0;
        int64_t n = 0;
        for (const auto& p : preds) {
          if (p.label != pos) continue;
          for (const auto& q : preds) {
            if (q.label != neg) continue;
            ++n;
            if (p.probs[score_class] > q.probs[score_class]) wins += 1.0;
            else if (p.probs[score_class] == q.probs[score_class]) wins += 0.5;
          }
        }
        return n == 0 ? -1.0 : wins / static_cast<double>(n);
      };
      double aij = a_given(i, j, i);
      double aji = a_given(j, i, j);
      if (aij < 0.0 || aji < 0.0) continue;
      total += (aij + aji) / 2.0;
      ++pairs;
    }
  return total / pairs;
}

// Adaptive Simpson quadrature for the incomplete-beta oracle.
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double eps, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

double incomplete_beta_oracle(double a, double b, double x) {
  auto density = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t));
  };
  double lo = 1e-12, hi = x;
  double fa = density(lo), fb = density(hi), fm = density(0.5 * (lo + hi));
  double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  double integral = simpson(density, lo, hi, fa, fm, fb, whole, 1e-12, 40);
  double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return integral / std::exp(log_beta);
}

SegmentationMask mask_from(std::vector<double> grid, int h, int w) {
  SegmentationMask m;
  m.grid = Tensor({h, w}, std::move(grid));
  return m;
}

}  // namespace

TEST_CASE("softmax_vec normalizes and is stable") {
  Tensor p = eval::softmax_vec(Tensor({3}, {1000.0, 1000.0, 1000.0}));
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(eval::softmax_vec(Tensor({2}, {900.0, -900.0}))[0] == doctest::Approx(1.0));
}

TEST_CASE("AUC is 1 for perfect separation and 0 for reversed scores") {
  std::vector<ScoredPrediction> perfect = {
      scored({0.9, 0.05, 0.05}, 0), scored({0.8, 0.1, 0.1}, 0),
      scored({0.1, 0.8, 0.1}, 1),   scored({0.05, 0.9, 0.05}, 1),
      scored({0.1, 0.1, 0.8}, 2),   scored({0.05, 0.05, 0.9}, 2)};
  CHECK(eval::auc_multiclass(perfect) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<ScoredPrediction> reversed = {
      scored({0.1, 0.9}, 0), scored({0.2, 0.8}, 0),
      scored({0.9, 0.1}, 1), scored({0.8, 0.2}, 1)};
  CHECK(eval::auc_multiclass(reversed) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("AUC of identical scores is one half") {
  std::vector<ScoredPrediction> ties = {
      scored({0.5, 0.5}, 0), scored({0.5, 0.5}, 0),
      scored({0.5, 0.5}, 1), scored({0.5, 0.5}, 1)};
  CHECK(eval::auc_multiclass(ties) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("AUC matches the brute-force pairwise oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ScoredPrediction> preds;
    for (int i = 0; i < 12; ++i) {
      Tensor logits = random_tensor({3}, rng, -2, 2);
      ScoredPrediction p;
      p.probs = eval::softmax_vec(logits);
      p.label = static_cast<int>(rng() % 3);
      preds.push_back(p);
    }
    // Force each class present at least once.
    preds[0].label = 0;
    preds[1].label = 1;
    preds[2].label = 2;
    CHECK(eval::auc_multiclass(preds) ==
          doctest::Approx(auc_oracle(preds, 3)).epsilon(1e-12));
  }
}

TEST_CASE("AUC is invariant under monotone transforms of the scores") {
  std::mt19937_64 rng(2);
  std::vector<ScoredPrediction> preds;
  for (int i = 0; i < 15; ++i) {
    ScoredPrediction p;
    p.probs = eval::softmax_vec(random_tensor({3}, rng, -2, 2));
    p.label = i % 3;
    preds.push_back(p);
  }
  double base = eval::auc_multiclass(preds);
  std::vector<ScoredPrediction> warped = preds;
  for (auto& p : warped)
    for (int64_t i = 0; i < p.probs.size(); ++i)
      p.probs[i] = std::tanh(3.0 * p.probs[i]) + 2.0;
  CHECK(eval::auc_multiclass(warped) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("binary AUC is symmetric under label and column flips") {
  std::mt19937_64 rng(3);
  std::vector<ScoredPrediction> preds;
  for (int i = 0; i < 14; ++i) {
    ScoredPrediction p;
    p.probs = eval::softmax_vec(random_tensor({2}, rng, -2, 2));
    p.label = i % 2;
    preds.push_back(p);
  }
  double base = eval::auc_multiclass(preds);
  std::vector<ScoredPrediction> flipped = preds;
  for (auto& p : flipped) {
    std::swap(p.probs[0], p.probs[1]);
    p.label = 1 - p.label;
  }
  CHECK(eval::auc_multiclass(flipped) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("class pairs without support are excluded from the AUC average") {
  // Three classes declared by the prob vectors, class 2 never present: the
  // average must reduce to the (0,1) pair alone.
  std::vector<ScoredPrediction> preds = {
      scored({0.9, 0.05, 0.05}, 0), scored({0.6, 0.3, 0.1}, 0),
      scored({0.2, 0.7, 0.1}, 1),   scored({0.1, 0.8, 0.1}, 1)};
  CHECK(eval::auc_multiclass(preds) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("AUC rejects fewer than two present classes") {
  std::vector<ScoredPrediction> preds = {scored({0.9, 0.1}, 0), scored({0.8, 0.2}, 0)};
  CHECK_THROWS_AS(eval::auc_multiclass(preds), DataError);
}

TEST_CASE("precision and recall on a known confusion matrix") {
  // Confusion [[2,1],[0,3]]: two class-0 hits, one class-0 miss into class 1,
  // all class-1 samples predicted class 1.
  std::vector<ScoredPrediction> preds = {
      scored({0.8, 0.2}, 0), scored({0.7, 0.3}, 0), scored({0.4, 0.6}, 0),
      scored({0.3, 0.7}, 1), scored({0.2, 0.8}, 1), scored({0.1, 0.9}, 1)};
  auto m = eval::precision_recall(preds, 2);
  REQUIRE(m.size() == 2);
  CHECK(m[0].precision.value() == doctest::Approx(1.0));
  CHECK(m[0].recall.value() == doctest::Approx(2.0 / 3.0));
  CHECK(m[1].precision.value() == doctest::Approx(0.75));
  CHECK(m[1].recall.value() == doctest::Approx(1.0));
}

TEST_CASE("precision and recall report undefined cases as absent") {
  // Class 2 never predicted and never occurs; class 1 never predicted.
  std::vector<ScoredPrediction> preds = {
      scored({0.9, 0.05, 0.05}, 0), scored({0.8, 0.1, 0.1}, 1)};
  auto m = eval::precision_recall(preds, 3);
  CHECK(m[1].precision.has_value() == false);
  CHECK(m[1].recall.has_value());
  CHECK(m[1].recall.value() == 0.0);
  CHECK(m[2].precision.has_value() == false);
  CHECK(m[2].recall.has_value() == false);
}

TEST_CASE("argmax ties in precision_recall resolve to the first index") {
  std::vector<ScoredPrediction> preds = {scored({0.5, 0.5}, 0)};
  auto m = eval::precision_recall(preds, 2);
  CHECK(m[0].precision.value() == 1.0);
}

TEST_CASE("interpretability fixtures") {
  // CAM 2x2 over a 4x4 mask; cell (i,j) covers source rows 2i..2i+1.
  Tensor cam({2, 2}, {0.1, 0.9, 0.2, 0.3});  // argmax at cell (0,1)

  SUBCASE("mask pixel inside the argmax cell") {
    auto mask = mask_from({0, 0, 1, 0,
                           0, 0, 0, 0,
                           0, 0, 0, 0,
                           0, 0, 0, 0}, 4, 4);
    CHECK(eval::interpretability(cam, mask));
  }
  SUBCASE("mask entirely outside the argmax cell") {
    auto mask = mask_from({1, 1, 0, 0,
                           1, 1, 0, 0,
                           0, 0, 0, 0,
                           0, 0, 0, 0}, 4, 4);
    CHECK_FALSE(eval::interpretability(cam, mask));
  }
  SUBCASE("argmax ties take the first row-major cell") {
    Tensor tied({2, 2}, {0.9, 0.9, 0.1, 0.1});  // first argmax is cell (0,0)
    auto mask = mask_from({1, 0, 0, 0,
                           0, 0, 0, 0,
                           0, 0, 0, 0,
                           0, 0, 0, 0}, 4, 4);
    CHECK(eval::interpretability(tied, mask));
    auto other = mask_from({0, 0, 1, 0,
                            0, 0, 0, 0,
                            0, 0, 0, 0,
                            0, 0, 0, 0}, 4, 4);
    CHECK_FALSE(eval::interpretability(tied, other));
  }
  SUBCASE("any covered source pixel marks the cell") {
    // 3x3 mask downscaled to 2x2: source row 1 maps to cell floor(1*2/3)=0,
    // source row 2 maps to cell 1.
    Tensor cam3({2, 2}, {0.0, 0.0, 0.0, 1.0});
    auto mask = mask_from({0, 0, 0,
                           0, 0, 0,
                           0, 0, 1}, 3, 3);
    CHECK(eval::interpretability(cam3, mask));
  }
  SUBCASE("empty mask is rejected") {
    auto mask = mask_from(std::vector<double>(16, 0.0), 4, 4);
    CHECK_THROWS_AS(eval::interpretability(cam, mask), DataError);
  }
}

TEST_CASE("cam element statistics") {
  std::vector<double> elems = {0.0, 0.0, 0.0, 0.5, 1.0};
  auto stats = eval::cam_element_stats(elems, 4);
  REQUIRE(stats.bin_edges.size() == 5);
  CHECK(stats.bin_edges.front() == doctest::Approx(0.0));
  CHECK(stats.bin_edges.back() == doctest::Approx(1.0));
  CHECK(stats.bin_counts == std::vector<int64_t>{3, 0, 1, 1});
  CHECK(stats.mean == doctest::Approx(0.3));
  CHECK(stats.median == doctest::Approx(0.0));
  // Mode is the center of the fullest bin.
  CHECK(stats.mode == doctest::Approx(0.125));

  // Degenerate single-valued input collapses to one bin.
  auto flat = eval::cam_element_stats({0.7, 0.7, 0.7}, 64);
  CHECK(flat.mean == doctest::Approx(0.7));
  CHECK(flat.median == doctest::Approx(0.7));
  CHECK(flat.mode == doctest::Approx(0.7));
}

TEST_CASE("median of odd and even length lists") {
  CHECK(eval::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(eval::median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(eval::median({}), DataError);
}

TEST_CASE("incomplete beta identities") {
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.83, 1.0}) {
    CHECK(eval::incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-13));
    CHECK(eval::incomplete_beta(2.5, 3.5, x) ==
          doctest::Approx(1.0 - eval::incomplete_beta(3.5, 2.5, 1.0 - x)).epsilon(1e-12));
  }
  CHECK(eval::incomplete_beta(4.0, 7.0, 0.0) == 0.0);
  CHECK(eval::incomplete_beta(4.0, 7.0, 1.0) == 1.0);
}

TEST_CASE("incomplete beta matches adaptive quadrature") {
  // Quadrature needs an integrand without endpoint singularities (a, b > 1).
  struct Case { double a, b, x; };
  for (Case c : {Case{2.0, 5.0, 0.2}, Case{4.5, 1.5, 0.7},
                 Case{10.0, 10.0, 0.5}, Case{1.5, 8.0, 0.05}}) {
    CHECK(eval::incomplete_beta(c.a, c.b, c.x) ==
          doctest::Approx(incomplete_beta_oracle(c.a, c.b, c.x)).epsilon(1e-8));
  }
  // Singular arcsine case has a closed form: I_x(1/2,1/2) = (2/pi) asin(sqrt x).
  for (double x : {0.1, 0.3, 0.5, 0.9}) {
    CHECK(eval::incomplete_beta(0.5, 0.5, x) ==
          doctest::Approx(2.0 / M_PI * std::asin(std::sqrt(x))).epsilon(1e-12));
  }
}

TEST_CASE("one-way ANOVA on groups with equal means gives F=0, p=1") {
  auto r = eval::anova_oneway({{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}});
  CHECK(r.f == 0.0);
  CHECK(r.p == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("one-way ANOVA matches a hand-computed fixture") {
  // Groups {1,2,3} and {4,5,6}: grand mean 3.5, ssb = 2*3*(1.5^2)/... compute:
  // means 2 and 5, ssb = 3*(2-3.5)^2 + 3*(5-3.5)^2 = 13.5, d1 = 1,
  // ssw = 2 + 2 = 4, d2 = 4, F = (13.5/1)/(4/4) = 13.5.
  auto r = eval::anova_oneway({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
  CHECK(r.f == doctest::Approx(13.5).epsilon(1e-12));
  double d1 = 1.0, d2 = 4.0;
  double expected_p = eval::incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * r.f));
  CHECK(r.p == doctest::Approx(expected_p).epsilon(1e-12));
  // Cross-check the p-value itself against quadrature through the beta link.
  CHECK(r.p == doctest::Approx(incomplete_beta_oracle(d2 / 2.0, d1 / 2.0,
                                                      d2 / (d2 + d1 * r.f)))
                   .epsilon(1e-6));
}

TEST_CASE("ANOVA rejects degenerate inputs") {
  CHECK_THROWS_AS(eval::anova_oneway({{1.0, 2.0}}), DataError);
  CHECK_THROWS_AS(eval::anova_oneway({{1.0}, {2.0}}), DataError);
  CHECK_THROWS_AS(eval::anova_oneway({{1.0, 1.0}, {2.0, 2.0}}), NumericalError);  // ssw == 0
}
