#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "ggcam/errors.hpp"
#include "ggcam/network.hpp"
#include "test_util.hpp"

using namespace ggcam;
using testutil::random_tensor;

namespace {

void zero_backbone(Backbone& bb) {
  for (Value v : {bb.w1, bb.b1, bb.w2, bb.b2, bb.w3, bb.b3})
    for (int64_t i = 0; i < v->value.size(); ++i) v->value[i] = 0.0;
}

}  // namespace

TEST_CASE("zero backbone yields logits equal to the head bias") {
  std::mt19937_64 rng(1);
  for (HeadKind kind : {HeadKind::standard, HeadKind::cam}) {
    Classifier c(3, 8, 32, kind, rng);
    zero_backbone(c.backbone);
    Tensor image = random_tensor({1, 32, 32}, rng);
    Prediction p = network::predict(c, image);
    const Tensor& bias = kind == HeadKind::cam ? c.cam_head.bias->value
                                               : c.std_head.bias->value;
    for (int i = 0; i < 3; ++i)
      CHECK(p.logits[i] == doctest::Approx(bias[i]).epsilon(1e-15));
  }
}

TEST_CASE("backbone output shape is features x S/8 x S/8") {
  std::mt19937_64 rng(2);
  Backbone bb(16, rng);
  Value feat = bb.forward(constant(random_tensor({1, 64, 64}, rng)));
  CHECK(feat->value.extent(0) == 16);
  CHECK(feat->value.extent(1) == 8);
  CHECK(feat->value.extent(2) == 8);
}

TEST_CASE("classifier rejects input sizes not divisible by 8") {
  std::mt19937_64 rng(3);
  CHECK_THROWS_AS(Classifier(3, 8, 36, HeadKind::cam, rng), UsageError);
}

TEST_CASE("CAM head logits equal a standard head with identical weights") {
  std::mt19937_64 rng(4);
  Classifier cam_net(3, 8, 32, HeadKind::cam, rng);
  Classifier std_net(3, 8, 32, HeadKind::standard, rng);
  // Align every parameter so the two heads must produce the same logits.
  std_net.backbone = cam_net.backbone;
  std_net.std_head.weight->value = cam_net.cam_head.weight->value;
  std_net.std_head.bias->value = cam_net.cam_head.bias->value;

  for (int trial = 0; trial < 5; ++trial) {
    Tensor image = random_tensor({1, 32, 32}, rng);
    Prediction a = network::predict(cam_net, image);
    Prediction b = network::predict(std_net, image);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(a.logits[i] - b.logits[i]) < 1e-9);
    CHECK(a.cam.has_value());
    CHECK(a.scaled_cam.has_value());
    CHECK_FALSE(b.cam.has_value());
  }
}

TEST_CASE("predict_batch matches per-sample predict") {
  std::mt19937_64 rng(5);
  Classifier c(3, 8, 32, HeadKind::cam, rng);
  std::vector<Tensor> images;
  for (int i = 0; i < 4; ++i) images.push_back(random_tensor({1, 32, 32}, rng));
  auto batch = network::predict_batch(c, images);
  REQUIRE(batch.size() == 4);
  for (int i = 0; i < 4; ++i) {
    Prediction single = network::predict(c, images[i]);
    for (int k = 0; k < 3; ++k)
      CHECK(batch[i].logits[k] == single.logits[k]);
  }
}

TEST_CASE("parameter census separates backbone, head, and uncertainty") {
  std::mt19937_64 rng(6);
  Classifier std_net(3, 8, 32, HeadKind::standard, rng);
  auto std_census = network::parameter_census(std_net);
  // conv1: 16*1*9+16, conv2: 32*16*9+32, conv3: 8*32*9+8
  int64_t backbone = (16 * 1 * 9 + 16) + (32 * 16 * 9 + 32) + (8 * 32 * 9 + 8);
  CHECK(std_census.backbone == backbone);
  CHECK(std_census.head == 3 * 8 + 3);
  CHECK(std_census.uncertainty == 0);

  Classifier cam_net(3, 8, 32, HeadKind::cam, rng);
  UncertaintyWeights w(0.01);
  auto cam_census = network::parameter_census(cam_net, &w);
  CHECK(cam_census.backbone == backbone);
  // CAM head adds the scalar alpha on top of the same weight/bias counts.
  CHECK(cam_census.head == 3 * 8 + 3 + 1);
  CHECK(cam_census.uncertainty == 2);
  CHECK(cam_census.total() == std_census.total() + 3);
}

TEST_CASE("trainables covers every parameter exactly once") {
  std::mt19937_64 rng(7);
  Classifier c(3, 8, 32, HeadKind::cam, rng);
  auto params = network::trainables(c);
  int64_t n = 0;
  for (const auto& p : params) n += p->value.size();
  CHECK(n == network::parameter_census(c).total());
}

TEST_CASE("checkpoint round-trip is bit exact") {
  namespace fs = std::filesystem;
  std::mt19937_64 rng(8);
  for (HeadKind kind : {HeadKind::standard, HeadKind::cam}) {
    Classifier c(3, 8, 32, kind, rng);
    fs::path path = fs::temp_directory_path() / "ggcam_ckpt_test.bin";
    network::save_checkpoint(path.string(), c);
    Classifier r = network::load_checkpoint(path.string());

    CHECK(r.head_kind == kind);
    CHECK(r.num_classes == 3);
    CHECK(r.input_size == 32);
    auto a = network::trainables(c);
    auto b = network::trainables(r);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i]->value.size() == b[i]->value.size());
      for (int64_t j = 0; j < a[i]->value.size(); ++j)
        CHECK(a[i]->value[j] == b[i]->value[j]);
    }
    Tensor image = random_tensor({1, 32, 32}, rng);
    Prediction pa = network::predict(c, image);
    Prediction pb = network::predict(r, image);
    for (int i = 0; i < 3; ++i) CHECK(pa.logits[i] == pb.logits[i]);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "ggcam_bad_ckpt.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(network::load_checkpoint(path.string()), DataError);
  CHECK_THROWS_AS(network::load_checkpoint((fs::temp_directory_path() / "ggcam_missing.bin").string()),
                  DataError);
}

TEST_CASE("identical seeds give identical networks") {
  std::mt19937_64 rng_a(99), rng_b(99);
  Classifier a(3, 8, 32, HeadKind::cam, rng_a);
  Classifier b(3, 8, 32, HeadKind::cam, rng_b);
  auto pa = network::trainables(a);
  auto pb = network::trainables(b);
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i)
    for (int64_t j = 0; j < pa[i]->value.size(); ++j)
      CHECK(pa[i]->value[j] == pb[i]->value[j]);
}

TEST_CASE("full forward/backward gradient check on a tiny classifier") {
  std::mt19937_64 rng(10);
  Classifier c(2, 4, 8, HeadKind::cam, rng);
  Tensor image = random_tensor({1, 8, 8}, rng);
  auto build = [&] {
    auto nodes = network::forward(c, image);
    return ops::cross_entropy(nodes.logits, 1);
  };
  testutil::check_gradients(build, network::trainables(c));
}
