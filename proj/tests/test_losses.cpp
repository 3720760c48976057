#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ggcam/errors.hpp"
#include "ggcam/losses.hpp"
#include "test_util.hpp"

using namespace ggcam;
using testutil::random_tensor;

namespace {

Tensor logits_from_cam(const Tensor& cam, const Tensor& bias) {
  int c = cam.extent(0);
  int64_t hw = cam.extent(1) * static_cast<int64_t>(cam.extent(2));
  Tensor logits({c});
  for (int ci = 0; ci < c; ++ci) {
    double m = 0.0;
    for (int64_t i = 0; i < hw; ++i) m += cam[ci * hw + i];
    logits[ci] = m / static_cast<double>(hw) + bias[ci];
  }
  return logits;
}

}  // namespace

TEST_CASE("cross entropy of uniform logits is ln C") {
  CHECK(losses::cross_entropy(Tensor({3}, {0.0, 0.0, 0.0}), 1) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(losses::cross_entropy(Tensor({5}, {2.0, 2.0, 2.0, 2.0, 2.0}), 4) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("cross entropy of a confident prediction") {
  // logits (10, 0, 0) with true label 0: -ln(e^10 / (e^10 + 2)) = ln(1 + 2 e^-10)
  double v = losses::cross_entropy(Tensor({3}, {10.0, 0.0, 0.0}), 0);
  CHECK(v == doctest::Approx(std::log1p(2.0 * std::exp(-10.0))).epsilon(1e-14));
}

TEST_CASE("cross entropy is stable for extreme logits") {
  double v = losses::cross_entropy(Tensor({2}, {800.0, -800.0}), 1);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(1600.0).epsilon(1e-12));
  CHECK(losses::cross_entropy(Tensor({2}, {800.0, -800.0}), 0) ==
        doctest::Approx(0.0));
}

TEST_CASE("cross entropy is shift invariant") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor l = random_tensor({4}, rng, -3, 3);
    Tensor shifted = l;
    double shift = (trial - 5) * 2.7;
    for (int64_t i = 0; i < shifted.size(); ++i) shifted[i] += shift;
    int label = static_cast<int>(rng() % 4);
    CHECK(losses::cross_entropy(l, label) ==
          doctest::Approx(losses::cross_entropy(shifted, label)).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy rejects bad labels") {
  Tensor l({3}, {0.0, 1.0, 2.0});
  CHECK_THROWS_AS(losses::cross_entropy(l, -1), DataError);
  CHECK_THROWS_AS(losses::cross_entropy(l, 3), DataError);
}

TEST_CASE("CAM-form cross entropy equals logit-form cross entropy") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    int c = 2 + static_cast<int>(rng() % 4);
    int h = 1 + static_cast<int>(rng() % 5);
    Tensor cam = random_tensor({c, h, h}, rng, -4, 4);
    Tensor bias = random_tensor({c}, rng, -2, 2);
    int label = static_cast<int>(rng() % c);
    double lhs = losses::cross_entropy_cam_form(cam, bias, label);
    double rhs = losses::cross_entropy(logits_from_cam(cam, bias), label);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("cross entropy invariant to spatial CAM permutation, selective MSE not") {
  std::mt19937_64 rng(3);
  Tensor cam = random_tensor({3, 4, 4}, rng);
  Tensor bias = random_tensor({3}, rng);
  Tensor target = random_tensor({4, 4}, rng, 0.0, 1.0);

  // Reverse spatial order within every class slice.
  Tensor perm = cam;
  for (int c = 0; c < 3; ++c)
    std::reverse(&perm[c * 16], &perm[c * 16] + 16);

  CHECK(losses::cross_entropy_cam_form(cam, bias, 1) ==
        doctest::Approx(losses::cross_entropy_cam_form(perm, bias, 1)).epsilon(1e-12));
  CHECK(losses::selective_mse(cam, target, 1) !=
        doctest::Approx(losses::selective_mse(perm, target, 1)).epsilon(1e-12));
}

TEST_CASE("selective MSE trivial cases") {
  Tensor scaled({2, 2, 2}, {0.5, 0.5, 0.5, 0.5, 0.1, 0.9, 0.3, 0.7});
  Tensor target({2, 2}, {0.5, 0.5, 0.5, 0.5});
  CHECK(losses::selective_mse(scaled, target, 0) == 0.0);
  // Slice 1 vs constant-0.5 target: mean of squared deviations.
  double expected = ((0.4 * 0.4) + (0.4 * 0.4) + (0.2 * 0.2) + (0.2 * 0.2)) / 4.0;
  CHECK(losses::selective_mse(scaled, target, 1) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("selective MSE rejects shape and label mismatch") {
  Tensor scaled({2, 2, 2});
  CHECK_THROWS_AS(losses::selective_mse(scaled, Tensor({3, 3}), 0), DataError);
  CHECK_THROWS_AS(losses::selective_mse(scaled, Tensor({2, 2}), 2), DataError);
}

TEST_CASE("selective MSE node gives exactly zero gradient off the true class") {
  std::mt19937_64 rng(4);
  Value scaled = leaf(random_tensor({3, 3, 3}, rng, 0.05, 0.95));
  Tensor target = random_tensor({3, 3}, rng, 0.0, 1.0);
  backward(ops::selective_mse(scaled, target, 1));
  for (int c = 0; c < 3; ++c)
    for (int64_t i = 0; i < 9; ++i) {
      double g = scaled->grad[c * 9 + i];
      if (c == 1)
        CHECK(g != 0.0);
      else
        CHECK(g == 0.0);
    }
}

TEST_CASE("selective MSE gradient matches finite differences") {
  std::mt19937_64 rng(5);
  Value scaled = leaf(random_tensor({2, 3, 3}, rng, 0.1, 0.9));
  Tensor target = random_tensor({3, 3}, rng, 0.0, 1.0);
  auto build = [&] { return ops::selective_mse(scaled, target, 0); };
  testutil::check_gradients(build, {scaled});
}

TEST_CASE("combined loss closed-form values") {
  // Zero losses at unit sigmas: only the regularizers remain, 2 ln 2.
  CHECK(losses::combined(0.0, 0.0, 1.0, 1.0) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  // 0.25/(2*1) + ln3/1 + ln2 + ln2 ~= 2.6099
  CHECK(losses::combined(0.25, std::log(3.0), 1.0, 1.0) ==
        doctest::Approx(0.125 + std::log(3.0) + 2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(losses::combined(0.25, std::log(3.0), 1.0, 1.0) == doctest::Approx(2.6099).epsilon(1e-4));
}

TEST_CASE("combined loss is positive for valid inputs") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> loss_dist(0.0, 5.0);
  std::uniform_real_distribution<double> sig_dist(1e-6, 4.0);
  for (int i = 0; i < 200; ++i)
    CHECK(losses::combined(loss_dist(rng), loss_dist(rng), sig_dist(rng), sig_dist(rng)) > 0.0);
}

TEST_CASE("combined gradient w.r.t. sigma_sm matches the closed form") {
  // dL/ds_sm = -L_sm / s^3 + 1/(s+1); at L_sm = 0.25, s = 1 this is 0.25.
  Value lsm = constant(Tensor::scalar(0.25));
  Value lce = constant(Tensor::scalar(1.0));
  Value ssm = leaf(Tensor::scalar(1.0));
  Value sce = leaf(Tensor::scalar(1.0));
  backward(ops::uncertainty_combine(lsm, lce, ssm, sce));
  CHECK(ssm->grad[0] == doctest::Approx(0.25).epsilon(1e-12));
  // dL/ds_ce = -2 L_ce / s^3 + 1/(s+1) = -2 + 0.5 = -1.5
  CHECK(sce->grad[0] == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("uncertainty_combine validates its domain") {
  Value pos = constant(Tensor::scalar(1.0));
  Value neg = constant(Tensor::scalar(-0.1));
  Value zero = constant(Tensor::scalar(0.0));
  CHECK_THROWS_AS(backward(ops::uncertainty_combine(neg, pos, pos, pos)), NumericalError);
  CHECK_THROWS_AS(backward(ops::uncertainty_combine(pos, neg, pos, pos)), NumericalError);
  CHECK_THROWS_AS(backward(ops::uncertainty_combine(pos, pos, zero, pos)), NumericalError);
  CHECK_THROWS_AS(backward(ops::uncertainty_combine(pos, pos, pos, zero)), NumericalError);
}

TEST_CASE("uncertainty_combine detects overflowing weights") {
  Value lsm = constant(Tensor::scalar(1.0));
  Value lce = constant(Tensor::scalar(1.0));
  Value tiny = constant(Tensor::scalar(1e-200));
  Value one = constant(Tensor::scalar(1.0));
  CHECK_THROWS_AS(ops::uncertainty_combine(lsm, lce, tiny, one), NumericalError);
}

TEST_CASE("combined_node value and finite-difference gradients") {
  UncertaintyWeights w(0.01);
  CHECK(w.sigma_ce() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.sigma_sm() == doctest::Approx(0.01).epsilon(1e-9));

  Value lsm = constant(Tensor::scalar(0.02));
  Value lce = constant(Tensor::scalar(0.8));
  Value node = losses::combined_node(lsm, lce, w);
  CHECK(node->value[0] ==
        doctest::Approx(losses::combined(0.02, 0.8, w.sigma_sm(), w.sigma_ce()))
            .epsilon(1e-12));

  auto build = [&] { return losses::combined_node(lsm, lce, w); };
  testutil::check_gradients(build, {w.sigma_sm_raw, w.sigma_ce_raw});
}

TEST_CASE("uncertainty weights reproduce tiny paper-scale initializations") {
  for (double init : {1.4e-11, 2e-9, 1e-2, 1.0}) {
    UncertaintyWeights w(init);
    CHECK(w.sigma_sm() == doctest::Approx(init).epsilon(1e-9));
    CHECK(w.sigma_sm() > 0.0);
  }
}
