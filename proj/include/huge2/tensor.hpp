/* Copyright 2026 The HUGE2 Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace huge2 {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension or length mismatch while building or combining tensors.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Convolution geometry that cannot produce a valid output.
class GeometryError : public Error {
 public:
  using Error::Error;
};

struct TensorShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const { return static_cast<std::size_t>(height) * width * channels; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

struct KernelShape {
  int rows = 0;
  int cols = 0;
  int in_channels = 0;
  int out_channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(rows) * cols * in_channels * out_channels;
  }
  friend bool operator==(const KernelShape&, const KernelShape&) = default;
};

/// Rank-3 feature map, H x W x C, channel index fastest:
/// element (h, w, c) lives at ((h * W) + w) * C + c.
///
/// Extents may be zero only for the empty partial outputs produced by
/// stride phases that own no output rows; every public factory rejects them.
class Tensor3 {
 public:
  Tensor3() = default;

  Tensor3(int height, int width, int channels)
      : shape_{height, width, channels}, data_(checked_size(shape_), 0.0f) {}

  Tensor3(int height, int width, int channels, std::vector<float> values)
      : shape_{height, width, channels}, data_(std::move(values)) {
    if (data_.size() != checked_size(shape_)) {
      throw ShapeError("values: expected " + std::to_string(shape_.size()) + " elements, got " +
                       std::to_string(data_.size()));
    }
  }

  explicit Tensor3(TensorShape shape) : Tensor3(shape.height, shape.width, shape.channels) {}

  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  const TensorShape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int h, int w, int c) const {
    return (static_cast<std::size_t>(h) * shape_.width + w) * shape_.channels + c;
  }

  float& operator()(int h, int w, int c) { return data_[index(h, w, c)]; }
  float operator()(int h, int w, int c) const { return data_[index(h, w, c)]; }

  /// The C contiguous channel values at spatial position (h, w).
  std::span<float> pixel(int h, int w) {
    return {data_.data() + index(h, w, 0), static_cast<std::size_t>(shape_.channels)};
  }
  std::span<const float> pixel(int h, int w) const {
    return {data_.data() + index(h, w, 0), static_cast<std::size_t>(shape_.channels)};
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

 private:
  static std::size_t checked_size(const TensorShape& s) {
    if (s.height < 0 || s.width < 0 || s.channels < 0) {
      throw ShapeError("negative tensor extent");
    }
    return s.size();
  }

  TensorShape shape_;
  std::vector<float> data_;
};

/// Rank-4 weights, R x S x C x N, stored un-flipped with channel then filter
/// contiguous: element (m, n, c, k) lives at ((m * S) + n) * C * N + c * N + k.
/// The C x N block of one spatial tap is therefore a row-major matrix.
class Kernel4 {
 public:
  Kernel4() = default;

  Kernel4(int rows, int cols, int in_channels, int out_channels)
      : shape_{rows, cols, in_channels, out_channels}, data_(checked_size(shape_), 0.0f) {}

  Kernel4(int rows, int cols, int in_channels, int out_channels, std::vector<float> values)
      : shape_{rows, cols, in_channels, out_channels}, data_(std::move(values)) {
    if (data_.size() != checked_size(shape_)) {
      throw ShapeError("values: expected " + std::to_string(shape_.size()) + " elements, got " +
                       std::to_string(data_.size()));
    }
  }

  explicit Kernel4(KernelShape shape)
      : Kernel4(shape.rows, shape.cols, shape.in_channels, shape.out_channels) {}

  int rows() const { return shape_.rows; }
  int cols() const { return shape_.cols; }
  int in_channels() const { return shape_.in_channels; }
  int out_channels() const { return shape_.out_channels; }
  const KernelShape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int m, int n, int c, int k) const {
    return ((static_cast<std::size_t>(m) * shape_.cols + n) * shape_.in_channels + c) *
               shape_.out_channels +
           k;
  }

  float& operator()(int m, int n, int c, int k) { return data_[index(m, n, c, k)]; }
  float operator()(int m, int n, int c, int k) const { return data_[index(m, n, c, k)]; }

  /// Row-major C x N weight matrix of tap (m, n).
  std::span<const float> tap(int m, int n) const {
    return {data_.data() + index(m, n, 0, 0), tap_size()};
  }
  std::span<float> tap(int m, int n) { return {data_.data() + index(m, n, 0, 0), tap_size()}; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

 private:
  std::size_t tap_size() const {
    return static_cast<std::size_t>(shape_.in_channels) * shape_.out_channels;
  }

  static std::size_t checked_size(const KernelShape& s) {
    if (s.rows < 0 || s.cols < 0 || s.in_channels < 0 || s.out_channels < 0) {
      throw ShapeError("negative kernel extent");
    }
    return s.size();
  }

  KernelShape shape_;
  std::vector<float> data_;
};

/// Stride / padding geometry of one transposed-convolution layer.
struct DeconvConfig {
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
  int out_pad_h = 0;
  int out_pad_w = 0;

  void validate() const {
    if (stride_h < 1 || stride_w < 1) throw GeometryError("stride must be >= 1");
    if (pad_h < 0 || pad_w < 0) throw GeometryError("pad must be >= 0");
    if (out_pad_h < 0 || out_pad_h >= stride_h || out_pad_w < 0 || out_pad_w >= stride_w) {
      throw GeometryError("out_pad must lie in [0, stride)");
    }
  }

  /// s * (H - 1) + R - 2p + out_pad per axis, channels from the kernel.
  /// Throws GeometryError unless both spatial extents are positive.
  TensorShape output_shape(const TensorShape& in, const KernelShape& k) const {
    validate();
    const int h = stride_h * (in.height - 1) + k.rows - 2 * pad_h + out_pad_h;
    const int w = stride_w * (in.width - 1) + k.cols - 2 * pad_w + out_pad_w;
    if (h <= 0 || w <= 0) {
      throw GeometryError("transposed convolution output extent must be positive, got " +
                          std::to_string(h) + "x" + std::to_string(w));
    }
    return {h, w, k.out_channels};
  }
};

/// Dilation and stride of one dilated (atrous) convolution.
struct DilationConfig {
  int dil_h = 1;
  int dil_w = 1;
  int stride_h = 1;
  int stride_w = 1;

  void validate() const {
    if (dil_h < 1 || dil_w < 1) throw GeometryError("dilation must be >= 1");
    if (stride_h < 1 || stride_w < 1) throw GeometryError("stride must be >= 1");
  }
};

namespace fill {
struct zeros {};
/// 0, 1, 2, ... in flat-index order.
struct sequential {};
struct values {
  std::vector<float> data;
};
}  // namespace fill

using FillSpec = std::variant<fill::zeros, fill::sequential, fill::values>;

inline Tensor3 make_tensor(int height, int width, int channels, const FillSpec& spec) {
  if (height < 1) throw ShapeError("H must be >= 1");
  if (width < 1) throw ShapeError("W must be >= 1");
  if (channels < 1) throw ShapeError("C must be >= 1");
  Tensor3 t(height, width, channels);
  if (std::holds_alternative<fill::sequential>(spec)) {
    auto d = t.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(i);
  } else if (const auto* v = std::get_if<fill::values>(&spec)) {
    if (v->data.size() != t.size()) {
      throw ShapeError("values: expected " + std::to_string(t.size()) + " elements, got " +
                       std::to_string(v->data.size()));
    }
    std::copy(v->data.begin(), v->data.end(), t.data().begin());
  }
  return t;
}

inline Kernel4 make_kernel(int rows, int cols, int in_channels, int out_channels,
                           const FillSpec& spec) {
  if (rows < 1) throw ShapeError("R must be >= 1");
  if (cols < 1) throw ShapeError("S must be >= 1");
  if (in_channels < 1) throw ShapeError("C must be >= 1");
  if (out_channels < 1) throw ShapeError("N must be >= 1");
  Kernel4 k(rows, cols, in_channels, out_channels);
  if (std::holds_alternative<fill::sequential>(spec)) {
    auto d = k.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(i);
  } else if (const auto* v = std::get_if<fill::values>(&spec)) {
    if (v->data.size() != k.size()) {
      throw ShapeError("values: expected " + std::to_string(k.size()) + " elements, got " +
                       std::to_string(v->data.size()));
    }
    std::copy(v->data.begin(), v->data.end(), k.data().begin());
  }
  return k;
}

/// |a_i - b_i| <= atol + rtol * |b_i| for every element; false on shape mismatch.
inline bool tensors_close(const Tensor3& a, const Tensor3& b, float atol, float rtol) {
  if (a.shape() != b.shape()) return false;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(std::fabs(x[i] - y[i]) <= atol + rtol * std::fabs(y[i]))) return false;
  }
  return true;
}

inline bool kernels_close(const Kernel4& a, const Kernel4& b, float atol, float rtol) {
  if (a.shape() != b.shape()) return false;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(std::fabs(x[i] - y[i]) <= atol + rtol * std::fabs(y[i]))) return false;
  }
  return true;
}

/// Largest |a_i - b_i|; infinity on shape mismatch.
inline double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, static_cast<double>(std::fabs(a[i] - b[i])));
  }
  return worst;
}

template <class Rng>
Tensor3 random_tensor(TensorShape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  Tensor3 t(shape);
  std::uniform_real_distribution<float> dist(lo, hi);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

template <class Rng>
Kernel4 random_kernel(KernelShape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  Kernel4 k(shape);
  std::uniform_real_distribution<float> dist(lo, hi);
  for (float& v : k.data()) v = dist(rng);
  return k;
}

}  // namespace huge2
