#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ggcam/cam_head.hpp"
#include "ggcam/losses.hpp"

namespace ggcam {

enum class HeadKind { standard, cam };

// Three conv-relu-pool blocks, each halving the spatial extent; a S x S
// input yields features_out x S/8 x S/8 features.
struct Backbone {
  Value w1, b1, w2, b2, w3, b3;
  int features_out = 0;

  Backbone(int features_out, std::mt19937_64& rng);
  Backbone() = default;

  Value forward(const Value& image) const;  // image: 1 x S x S
};

// GAP + linear head of a generic classification CNN.
struct StandardHead {
  Value weight;  // C x G
  Value bias;    // C

  StandardHead(int num_classes, int num_features, std::mt19937_64& rng);
  StandardHead() = default;
};

struct Classifier {
  Backbone backbone;
  HeadKind head_kind = HeadKind::standard;
  StandardHead std_head;  // valid when head_kind == standard
  CamHead cam_head;       // valid when head_kind == cam
  int num_classes = 0;
  int input_size = 0;

  Classifier(int num_classes, int num_features, int input_size, HeadKind kind,
             std::mt19937_64& rng);
  Classifier() = default;

  int cam_extent() const { return input_size / 8; }  // H == W
};

struct Prediction {
  Tensor logits;
  std::optional<Tensor> cam;         // C x H x W, cam head only
  std::optional<Tensor> scaled_cam;  // C x H x W, cam head only
};

namespace network {

// Tape forward; callers backprop through the returned nodes.
struct ForwardNodes {
  Value logits;
  Value cam;         // null for standard head
  Value scaled_cam;  // null for standard head
};
ForwardNodes forward(const Classifier& c, const Tensor& image);

// Value-level inference; no heat map ever required.
Prediction predict(const Classifier& c, const Tensor& image);
std::vector<Prediction> predict_batch(const Classifier& c,
                                      const std::vector<Tensor>& images);

// All trainable parameters in checkpoint order (head params last).
std::vector<Value> trainables(const Classifier& c);

struct ParameterCensus {
  int64_t backbone = 0;
  int64_t head = 0;
  int64_t uncertainty = 0;
  int64_t total() const { return backbone + head + uncertainty; }
};
ParameterCensus parameter_census(const Classifier& c,
                                 const UncertaintyWeights* weights = nullptr);

// Flat binary checkpoint: magic, version, config block, then
// length-prefixed named tensors in a fixed order; little-endian doubles.
void save_checkpoint(const std::string& path, const Classifier& c);
Classifier load_checkpoint(const std::string& path);

}  // namespace network

}  // namespace ggcam
