#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "qtmt/error.hpp"

namespace qtmt::nn {

/// Dense float array, row-major with the last axis fastest. Activations are
/// rank 3 (height, width, channels); convolution kernels are rank 4
/// (kernel_h, kernel_w, in_channels, out_channels); biases are (1, 1, C).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, float fill = 0.0f) : shape_(std::move(shape)) {
    QTMT_CHECK(shape_.size() == 3 || shape_.size() == 4, ErrorCode::ShapeMismatch, "tensor rank must be 3 or 4");
    for (int d : shape_) QTMT_CHECK(d > 0, ErrorCode::ShapeMismatch, "tensor dims must be positive");
    data_.assign(element_count(shape_), fill);
  }
  Tensor(int h, int w, int c, float fill = 0.0f) : Tensor(std::vector<int>{h, w, c}, fill) {}

  static std::size_t element_count(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int height() const { return shape_[0]; }
  int width() const { return shape_[1]; }
  int channels() const { return shape_[2]; }
  std::size_t size() const { return data_.size(); }

  float& at(int y, int x, int c) { return data_[(static_cast<std::size_t>(y) * shape_[1] + x) * shape_[2] + c]; }
  float at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * shape_[1] + x) * shape_[2] + c]; }

  float& at4(int i, int j, int k, int l) {
    return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  float at4(int i, int j, int k, int l) const {
    return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool all_finite() const {
    for (float v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

inline std::string shape_string(const std::vector<int>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

}  // namespace qtmt::nn
