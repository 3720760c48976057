#include "ggcam/network.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "ggcam/errors.hpp"

namespace ggcam {

namespace {

Value conv_init(int cout, int cin, int k, std::mt19937_64& rng) {
  double bound = std::sqrt(1.0 / (cin * k * k));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w({cout, cin, k, k});
  for (int64_t i = 0; i < w.size(); ++i) w[i] = dist(rng);
  return leaf(std::move(w));
}

}  // namespace

Backbone::Backbone(int features_out_, std::mt19937_64& rng)
    : features_out(features_out_) {
  if (features_out < 1) throw NumericalError("backbone: bad feature count");
  w1 = conv_init(16, 1, 3, rng);
  b1 = leaf(Tensor({16}));
  w2 = conv_init(32, 16, 3, rng);
  b2 = leaf(Tensor({32}));
  w3 = conv_init(features_out, 32, 3, rng);
  b3 = leaf(Tensor({features_out}));
}

Value Backbone::forward(const Value& image) const {
  Value x = ops::maxpool2(ops::relu(ops::conv2d(image, w1, b1, 1, 1)));
  x = ops::maxpool2(ops::relu(ops::conv2d(x, w2, b2, 1, 1)));
  x = ops::maxpool2(ops::relu(ops::conv2d(x, w3, b3, 1, 1)));
  return x;
}

StandardHead::StandardHead(int num_classes, int num_features, std::mt19937_64& rng) {
  double bound = std::sqrt(1.0 / num_features);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w({num_classes, num_features});
  for (int64_t i = 0; i < w.size(); ++i) w[i] = dist(rng);
  weight = leaf(std::move(w));
  bias = leaf(Tensor({num_classes}));
}

Classifier::Classifier(int num_classes_, int num_features, int input_size_,
                       HeadKind kind, std::mt19937_64& rng)
    : backbone(num_features, rng),
      head_kind(kind),
      num_classes(num_classes_),
      input_size(input_size_) {
  if (input_size < 8 || input_size % 8 != 0)
    throw UsageError("classifier: input size must be a positive multiple of 8");
  if (kind == HeadKind::standard)
    std_head = StandardHead(num_classes, num_features, rng);
  else
    cam_head = CamHead(num_classes, num_features, rng);
}

namespace network {

ForwardNodes forward(const Classifier& c, const Tensor& image) {
  if (image.ndim() != 3 || image.extent(0) != 1 ||
      image.extent(1) != c.input_size || image.extent(2) != c.input_size)
    throw DataError("forward: image dimensions do not match configured input size");
  Value a = c.backbone.forward(constant(image));
  if (c.head_kind == HeadKind::standard) {
    Value pooled = ops::global_avg_pool(a);
    Value logits = ops::linear(pooled, c.std_head.weight, c.std_head.bias);
    return ForwardNodes{logits, nullptr, nullptr};
  }
  CamForward cf = cam::forward(a, c.cam_head);
  return ForwardNodes{cf.logits, cf.cam, cf.scaled_cam};
}

Prediction predict(const Classifier& c, const Tensor& image) {
  ForwardNodes f = forward(c, image);
  Prediction p;
  p.logits = f.logits->value;
  if (f.cam) {
    p.cam = f.cam->value;
    p.scaled_cam = f.scaled_cam->value;
  }
  return p;
}

std::vector<Prediction> predict_batch(const Classifier& c,
                                      const std::vector<Tensor>& images) {
  std::vector<Prediction> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(predict(c, img));
  return out;
}

std::vector<Value> trainables(const Classifier& c) {
  std::vector<Value> ps = {c.backbone.w1, c.backbone.b1, c.backbone.w2,
                           c.backbone.b2, c.backbone.w3, c.backbone.b3};
  if (c.head_kind == HeadKind::standard) {
    ps.push_back(c.std_head.weight);
    ps.push_back(c.std_head.bias);
  } else {
    ps.push_back(c.cam_head.weight);
    ps.push_back(c.cam_head.bias);
    ps.push_back(c.cam_head.alpha_raw);
  }
  return ps;
}

ParameterCensus parameter_census(const Classifier& c,
                                 const UncertaintyWeights* weights) {
  ParameterCensus census;
  for (const Value& v : {c.backbone.w1, c.backbone.b1, c.backbone.w2,
                         c.backbone.b2, c.backbone.w3, c.backbone.b3})
    census.backbone += v->value.size();
  if (c.head_kind == HeadKind::standard) {
    census.head = c.std_head.weight->value.size() + c.std_head.bias->value.size();
  } else {
    census.head = c.cam_head.weight->value.size() + c.cam_head.bias->value.size() +
                  c.cam_head.alpha_raw->value.size();
  }
  if (weights)
    census.uncertainty = weights->sigma_sm_raw->value.size() +
                         weights->sigma_ce_raw->value.size();
  return census;
}

namespace {

constexpr char kMagic[] = "GGCAMCKPT";
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_named_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  write_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(out, static_cast<uint32_t>(t.ndim()));
  for (int d = 0; d < t.ndim(); ++d) write_u32(out, static_cast<uint32_t>(t.extent(d)));
  // Doubles are written little-endian; this targets little-endian hosts.
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * static_cast<int64_t>(sizeof(double))));
}

Tensor read_named_tensor(std::istream& in, const std::string& expected_name) {
  uint32_t len = read_u32(in);
  std::string name(len, '\0');
  in.read(name.data(), len);
  if (!in || name != expected_name)
    throw DataError("checkpoint: expected tensor '" + expected_name + "', found '" + name + "'");
  uint32_t ndim = read_u32(in);
  std::vector<int> shape(ndim);
  for (auto& e : shape) e = static_cast<int>(read_u32(in));
  Tensor t(shape);
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * static_cast<int64_t>(sizeof(double))));
  if (!in) throw DataError("checkpoint: truncated tensor data");
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const Classifier& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic) - 1);
  write_u32(out, kVersion);
  int cam_hw = c.cam_extent();
  write_u32(out, static_cast<uint32_t>(c.backbone.features_out));
  write_u32(out, static_cast<uint32_t>(cam_hw));
  write_u32(out, static_cast<uint32_t>(cam_hw));
  write_u32(out, static_cast<uint32_t>(c.num_classes));
  write_u32(out, c.head_kind == HeadKind::cam ? 1 : 0);
  write_u32(out, static_cast<uint32_t>(c.input_size));

  write_named_tensor(out, "conv1_w", c.backbone.w1->value);
  write_named_tensor(out, "conv1_b", c.backbone.b1->value);
  write_named_tensor(out, "conv2_w", c.backbone.w2->value);
  write_named_tensor(out, "conv2_b", c.backbone.b2->value);
  write_named_tensor(out, "conv3_w", c.backbone.w3->value);
  write_named_tensor(out, "conv3_b", c.backbone.b3->value);
  if (c.head_kind == HeadKind::standard) {
    write_named_tensor(out, "head_w", c.std_head.weight->value);
    write_named_tensor(out, "head_b", c.std_head.bias->value);
  } else {
    write_named_tensor(out, "head_w", c.cam_head.weight->value);
    write_named_tensor(out, "head_b", c.cam_head.bias->value);
    write_named_tensor(out, "alpha_raw", c.cam_head.alpha_raw->value);
  }
  if (!out) throw DataError("checkpoint write failed: " + path);
}

Classifier load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, sizeof(magic)) != kMagic)
    throw DataError("checkpoint: bad magic in " + path);
  if (read_u32(in) != kVersion) throw DataError("checkpoint: unsupported version");
  uint32_t g = read_u32(in);
  read_u32(in);  // H, derivable from input size
  read_u32(in);  // W
  uint32_t num_classes = read_u32(in);
  uint32_t head_kind = read_u32(in);
  uint32_t input_size = read_u32(in);

  std::mt19937_64 rng(0);  // placeholder init, overwritten below
  Classifier c(static_cast<int>(num_classes), static_cast<int>(g),
               static_cast<int>(input_size),
               head_kind == 1 ? HeadKind::cam : HeadKind::standard, rng);
  c.backbone.w1->value = read_named_tensor(in, "conv1_w");
  c.backbone.b1->value = read_named_tensor(in, "conv1_b");
  c.backbone.w2->value = read_named_tensor(in, "conv2_w");
  c.backbone.b2->value = read_named_tensor(in, "conv2_b");
  c.backbone.w3->value = read_named_tensor(in, "conv3_w");
  c.backbone.b3->value = read_named_tensor(in, "conv3_b");
  if (c.head_kind == HeadKind::standard) {
    c.std_head.weight->value = read_named_tensor(in, "head_w");
    c.std_head.bias->value = read_named_tensor(in, "head_b");
  } else {
    c.cam_head.weight->value = read_named_tensor(in, "head_w");
    c.cam_head.bias->value = read_named_tensor(in, "head_b");
    c.cam_head.alpha_raw->value = read_named_tensor(in, "alpha_raw");
  }
  return c;
}

}  // namespace network

}  // namespace ggcam
