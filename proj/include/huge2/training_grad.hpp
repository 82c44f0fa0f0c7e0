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

// Weight gradient of a strided discriminator convolution.
//
// For y = conv2d_standard(I, K, s, p) and upstream gradient G = dL/dy,
//
//     dK[m, n, c, k] = sum_{h,w} G[h, w, k] * I_pad[s*h + m, s*w + n, c],
//
// i.e. for every (c, k) pair the k-th derivative map, dilated by the stride,
// slides over the c-th input map. With a single output position this
// degenerates to the outer product dK[., ., c, k] = G[0, 0, k] * I[., ., c].
//
// The input gradient of the same convolution is
// conv2d_transpose_reference(G, K, {s, p}); generator back-propagation is not
// provided here.

#pragma once

#include <string>
#include <vector>

#include "huge2/probe.hpp"
#include "huge2/reference.hpp"
#include "huge2/tensor.hpp"
#include "huge2/untangling.hpp"

namespace huge2 {

struct GradInstance {
  Tensor3 input;          // H x W x C
  Tensor3 upstream_grad;  // H_o x W_o x N
  Vec2i stride{1, 1};
  Vec2i pad{0, 0};
  KernelShape kernel;

  /// Forward output dims of conv2d_standard for this geometry.
  TensorShape forward_shape() const {
    if (stride.h < 1 || stride.w < 1) throw GeometryError("stride must be >= 1");
    if (pad.h < 0 || pad.w < 0) throw GeometryError("pad must be >= 0");
    if (kernel.rows < 1 || kernel.cols < 1 || kernel.in_channels < 1 || kernel.out_channels < 1) {
      throw ShapeError("kernel dims must be positive");
    }
    if (input.height() + 2 * pad.h < kernel.rows || input.width() + 2 * pad.w < kernel.cols) {
      throw GeometryError("kernel larger than padded input");
    }
    return {detail::conv_extent(input.height(), pad.h, kernel.rows, stride.h),
            detail::conv_extent(input.width(), pad.w, kernel.cols, stride.w), kernel.out_channels};
  }

  void validate() const {
    detail::require_channels(input.channels(), kernel.in_channels);
    const TensorShape fwd = forward_shape();
    if (upstream_grad.shape() != fwd) {
      throw ShapeError("upstream gradient is " + std::to_string(upstream_grad.height()) + "x" +
                       std::to_string(upstream_grad.width()) + "x" +
                       std::to_string(upstream_grad.channels()) + ", forward output is " +
                       std::to_string(fwd.height) + "x" + std::to_string(fwd.width) + "x" +
                       std::to_string(fwd.channels));
    }
  }
};

/// Direct evaluation over the padded input, one tap at a time.
inline Kernel4 discriminator_weight_grad(const GradInstance& gi) {
  gi.validate();
  const Tensor3& g = gi.upstream_grad;
  const Tensor3 padded = detail::pad_crop(gi.input, gi.pad.h, gi.pad.w, gi.pad.h, gi.pad.w);
  const int channels = gi.kernel.in_channels;
  const int filters = gi.kernel.out_channels;
  Kernel4 grad(gi.kernel);
  std::vector<float> acc(static_cast<std::size_t>(channels) * filters);
  for (int m = 0; m < gi.kernel.rows; ++m) {
    for (int n = 0; n < gi.kernel.cols; ++n) {
      std::fill(acc.begin(), acc.end(), 0.0f);
      for (int h = 0; h < g.height(); ++h) {
        for (int w = 0; w < g.width(); ++w) {
          const float* src = padded.pixel(gi.stride.h * h + m, gi.stride.w * w + n).data();
          const float* gv = g.pixel(h, w).data();
          for (int c = 0; c < channels; ++c) {
            float* row = acc.data() + static_cast<std::size_t>(c) * filters;
            for (int k = 0; k < filters; ++k) {
              row[k] += src[c] * gv[k];
              HUGE2_PROBE_MAC();
            }
          }
          HUGE2_PROBE_MACS(channels * filters);
        }
      }
      std::copy(acc.begin(), acc.end(), grad.tap(m, n).begin());
    }
  }
  return grad;
}

/// Same gradient through the untangling plan: for each tap, the C x N block
/// is crop^T * G_crop, where crop is the (positions x C) input panel the tap
/// touches and G_crop the matching (positions x N) rows of the derivative maps.
inline Kernel4 weight_grad_untangled(const GradInstance& gi) {
  gi.validate();
  const GemmPlan plan = build_gemm_plan(gi.kernel, gi.input.shape(), gi.stride, {1, 1}, gi.pad);
  const Tensor3& g = gi.upstream_grad;
  const int channels = gi.kernel.in_channels;
  const int filters = gi.kernel.out_channels;
  Kernel4 grad(gi.kernel);
  std::vector<float> panel;
  std::vector<float> gpanel;
  for (const GemmEntry& e : plan.entries) {
    const std::size_t rows = e.rows();
    panel.resize(rows * channels);
    gpanel.resize(rows * filters);
    std::size_t r = 0;
    for (int i = 0; i < e.crop_h; ++i) {
      for (int j = 0; j < e.crop_w; ++j, ++r) {
        auto src = gi.input.pixel(e.in_row0 + i * plan.row_step, e.in_col0 + j * plan.col_step);
        std::copy(src.begin(), src.end(),
                  panel.begin() + static_cast<std::ptrdiff_t>(r * channels));
        auto gv = g.pixel(e.out_row0 + i, e.out_col0 + j);
        std::copy(gv.begin(), gv.end(), gpanel.begin() + static_cast<std::ptrdiff_t>(r * filters));
      }
    }
    float* block = grad.tap(e.tap_row, e.tap_col).data();
    for (std::size_t p = 0; p < rows; ++p) {
      const float* a = panel.data() + p * channels;
      const float* gv = gpanel.data() + p * filters;
      for (int c = 0; c < channels; ++c) {
        float* row = block + static_cast<std::size_t>(c) * filters;
        for (int k = 0; k < filters; ++k) {
          row[k] += a[c] * gv[k];
          HUGE2_PROBE_MAC();
        }
      }
      HUGE2_PROBE_MACS(channels * filters);
    }
  }
  return grad;
}

/// K - learning_rate * dK.
inline Kernel4 apply_weight_update(const Kernel4& kernel, const Kernel4& grad,
                                   float learning_rate) {
  if (kernel.shape() != grad.shape()) throw ShapeError("gradient dims differ from kernel dims");
  Kernel4 out = kernel;
  auto dst = out.data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= learning_rate * src[i];
  return out;
}

}  // namespace huge2
