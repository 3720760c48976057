#include "ggcam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ggcam/errors.hpp"

namespace ggcam {

int64_t shape_product(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int e : shape) n *= e;
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_product(shape_)), 0.0) {
  for (int e : shape_) {
    if (e < 0) throw NumericalError("tensor extent negative");
  }
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != static_cast<int64_t>(data_.size()))
    throw NumericalError("tensor shape/data size mismatch");
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::ensure_finite(const char* context) const {
  if (!all_finite())
    throw NumericalError(std::string("non-finite value in ") + context);
}

double Tensor::max_element() const {
  return *std::max_element(data_.begin(), data_.end());
}

double Tensor::min_element() const {
  return *std::min_element(data_.begin(), data_.end());
}

double Tensor::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

}  // namespace ggcam
