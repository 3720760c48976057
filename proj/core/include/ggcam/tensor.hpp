#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace ggcam {

// Dense N-dimensional array of doubles with value semantics.
// No batch convention is imposed; a batch is an explicit leading extent
// where callers need one. No broadcasting beyond what individual ops
// define for themselves.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);                       // zero-filled
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor full(std::vector<int> shape, double v);

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int extent(int d) const { return shape_[static_cast<size_t>(d)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double& at(int i) { return data_[static_cast<size_t>(i)]; }
  double at(int i) const { return data_[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  double at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  double& at(int i, int j, int k) {
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double at(int i, int j, int k) const {
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double& at(int i, int j, int k, int l) {
    return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double at(int i, int j, int k, int l) const {
    return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  // Throws NumericalError naming `context` if any element is NaN/Inf.
  void ensure_finite(const char* context) const;

  double max_element() const;
  double min_element() const;
  double sum() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

int64_t shape_product(const std::vector<int>& shape);

}  // namespace ggcam
