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

// Untangling: a convolution is rewritten as one matrix product per kernel
// tap. For tap (m, n) the input positions it touches form a rectangular crop
// (rows = output positions, cols = C channels); multiplying that crop by the
// tap's C x N weight block is a 1x1 convolution, and summing the R*S
// products gives the convolution. Taps that never meet a real input sample
// are left out of the plan, so padding costs nothing.

#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "huge2/decomposition.hpp"
#include "huge2/probe.hpp"
#include "huge2/reference.hpp"
#include "huge2/tensor.hpp"

namespace huge2 {

/// A (rows, cols) pair of strides, dilations or paddings.
struct Vec2i {
  int h = 0;
  int w = 0;
};

/// One 1x1 convolution: output rectangle [out_row0, out_row0 + crop_h) x
/// [out_col0, out_col0 + crop_w) receives crop x tap(tap_row, tap_col), where
/// crop element (i, j) is input pixel (in_row0 + i*row_step, in_col0 + j*col_step).
struct GemmEntry {
  int tap_row = 0;
  int tap_col = 0;
  int in_row0 = 0;
  int in_col0 = 0;
  int out_row0 = 0;
  int out_col0 = 0;
  int crop_h = 0;
  int crop_w = 0;

  std::size_t rows() const { return static_cast<std::size_t>(crop_h) * crop_w; }
};

struct GemmPlan {
  TensorShape input;
  KernelShape kernel;
  int out_h = 0;
  int out_w = 0;
  int row_step = 1;
  int col_step = 1;
  std::vector<GemmEntry> entries;

  /// Output matrix row count H_out * W_out.
  std::size_t out_rows() const { return static_cast<std::size_t>(out_h) * out_w; }

  /// The C x N weight block an entry multiplies by.
  std::span<const float> weight_slice(const Kernel4& k, const GemmEntry& e) const {
    return k.tap(e.tap_row, e.tap_col);
  }
};

namespace detail {

inline int floor_div(int a, int b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }
inline int ceil_div(int a, int b) { return -floor_div(-a, b); }

struct AxisSpan {
  int first = 0;
  int count = 0;
};

/// Output indices t in [0, out_extent) with 0 <= t*step + offset < in_extent.
inline AxisSpan axis_span(int offset, int step, int in_extent, int out_extent) {
  const int lo = std::max(0, ceil_div(-offset, step));
  const int hi = std::min(out_extent - 1, floor_div(in_extent - 1 - offset, step));
  return {lo, std::max(0, hi - lo + 1)};
}

inline void add_entry(GemmPlan& plan, int tap_row, int tap_col, int offset_h, int offset_w) {
  const AxisSpan rows = axis_span(offset_h, plan.row_step, plan.input.height, plan.out_h);
  const AxisSpan cols = axis_span(offset_w, plan.col_step, plan.input.width, plan.out_w);
  if (rows.count == 0 || cols.count == 0) return;
  plan.entries.push_back({tap_row, tap_col, rows.first * plan.row_step + offset_h,
                          cols.first * plan.col_step + offset_w, rows.first, cols.first, rows.count,
                          cols.count});
}

}  // namespace detail

/// Plan for O[h,w,k] = sum I_pad[h*stride + dil*m, w*stride + dil*n, c] K[m,n,c,k].
inline GemmPlan build_gemm_plan(const KernelShape& kernel, const TensorShape& input, Vec2i stride,
                                Vec2i dilation, Vec2i pad = {}) {
  detail::require_channels(input.channels, kernel.in_channels);
  if (stride.h < 1 || stride.w < 1) throw GeometryError("stride must be >= 1");
  if (dilation.h < 1 || dilation.w < 1) throw GeometryError("dilation must be >= 1");
  if (pad.h < 0 || pad.w < 0) throw GeometryError("pad must be >= 0");
  const int span_h = (kernel.rows - 1) * dilation.h + 1;
  const int span_w = (kernel.cols - 1) * dilation.w + 1;
  if (input.height + 2 * pad.h < span_h || input.width + 2 * pad.w < span_w) {
    throw GeometryError("kernel does not fit the padded input");
  }
  GemmPlan plan;
  plan.input = input;
  plan.kernel = kernel;
  plan.out_h = detail::conv_extent(input.height, pad.h, span_h, stride.h);
  plan.out_w = detail::conv_extent(input.width, pad.w, span_w, stride.w);
  plan.row_step = stride.h;
  plan.col_step = stride.w;
  for (int m = 0; m < kernel.rows; ++m) {
    for (int n = 0; n < kernel.cols; ++n) {
      detail::add_entry(plan, m, n, m * dilation.h - pad.h, n * dilation.w - pad.w);
    }
  }
  return plan;
}

/// Plan for one decomposition phase: partial[t, u] accumulates
/// I[t + shift_h - j, u + shift_w - l] * sub.weights(j, l).
inline GemmPlan build_pattern_plan(const SubKernel& sub, const TensorShape& input,
                                   const TensorShape& partial) {
  detail::require_channels(input.channels, sub.origin.in_channels);
  GemmPlan plan;
  plan.input = input;
  plan.kernel = sub.weights.shape();
  plan.out_h = partial.height;
  plan.out_w = partial.width;
  for (int j = 0; j < sub.weights.rows(); ++j) {
    for (int l = 0; l < sub.weights.cols(); ++l) {
      detail::add_entry(plan, j, l, sub.shift_h - j, sub.shift_w - l);
    }
  }
  return plan;
}

/// Runs every entry of the plan and accumulates the products into one output
/// buffer, tap after tap. Within a tap the sum over C stays in registers and
/// each output element is updated once.
inline Tensor3 execute_gemm_plan(const Tensor3& input, const Kernel4& kernel, const GemmPlan& plan,
                                 int threads = 1) {
  if (input.shape() != plan.input)
    throw ShapeError("execute_gemm_plan: input dims differ from plan");
  if (kernel.shape() != plan.kernel) {
    throw ShapeError("execute_gemm_plan: kernel dims differ from plan");
  }
  const int channels = kernel.in_channels();
  const int filters = kernel.out_channels();
  Tensor3 out(plan.out_h, plan.out_w, filters);

  for (const GemmEntry& e : plan.entries) {
    const float* wts = plan.weight_slice(kernel, e).data();
    // Crop rows are independent; each one is gathered into a contiguous
    // crop_w x C panel and multiplied by the C x N block.
    detail::parallel_for(static_cast<std::size_t>(e.crop_h), threads, [&](std::size_t row) {
      thread_local std::vector<float> panel;
      thread_local std::vector<float> acc;
      panel.resize(static_cast<std::size_t>(e.crop_w) * channels);
      acc.resize(filters);
      const int i = static_cast<int>(row);
      const int in_row = e.in_row0 + i * plan.row_step;
      for (int j = 0; j < e.crop_w; ++j) {
        auto src = input.pixel(in_row, e.in_col0 + j * plan.col_step);
        std::copy(src.begin(), src.end(),
                  panel.begin() + static_cast<std::ptrdiff_t>(j) * channels);
      }
      for (int j = 0; j < e.crop_w; ++j) {
        const float* a = panel.data() + static_cast<std::size_t>(j) * channels;
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (int c = 0; c < channels; ++c) {
          const float av = a[c];
          const float* wrow = wts + static_cast<std::size_t>(c) * filters;
          for (int f = 0; f < filters; ++f) {
            acc[f] += av * wrow[f];
            HUGE2_PROBE_MAC();
          }
        }
        HUGE2_PROBE_MACS(channels * filters);
        float* dst = out.pixel(e.out_row0 + i, e.out_col0 + j).data();
        for (int f = 0; f < filters; ++f) dst[f] += acc[f];
      }
    });
  }
  return out;
}

/// Decomposition followed by per-phase untangling and scatter/combine.
inline Tensor3 conv2d_transpose_untangled(const Tensor3& input, const Kernel4& kernel,
                                          const DeconvConfig& cfg, int threads = 1) {
  detail::require_channels(input.channels(), kernel.in_channels());
  const TensorShape os = cfg.output_shape(input.shape(), kernel.shape());
  const PatternSet set = decompose_kernel(kernel, cfg);
  std::vector<Tensor3> partials(set.patterns.size());
  detail::parallel_for(partials.size(), threads, [&](std::size_t i) {
    const SubKernel& sub = set.patterns[i];
    const TensorShape ps = detail::phase_shape(os, cfg, sub.residue_h, sub.residue_w);
    if (ps.size() == 0 || sub.empty()) {
      partials[i] = Tensor3(ps);
      return;
    }
    partials[i] = execute_gemm_plan(input, sub.weights, build_pattern_plan(sub, input.shape(), ps));
  });
  return scatter_combine(partials, set, os, threads);
}

/// Dilated convolution through the untangling plan.
inline Tensor3 conv2d_dilated_untangled(const Tensor3& input, const Kernel4& kernel,
                                        const DilationConfig& cfg, int pad_h, int pad_w,
                                        int threads = 1) {
  cfg.validate();
  const GemmPlan plan = build_gemm_plan(kernel.shape(), input.shape(), {cfg.stride_h, cfg.stride_w},
                                        {cfg.dil_h, cfg.dil_w}, {pad_h, pad_w});
  return execute_gemm_plan(input, kernel, plan, threads);
}

}  // namespace huge2
