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

// Zero-free decomposition of a transposed convolution.
//
// Along one axis, output row y = s*h + m - p receives input row h through
// kernel row m. Fixing the output phase a = y mod s leaves only the kernel
// rows m = m0, m0 + s, m0 + 2s, ... with m0 = (a + p) mod s, and output row
// y = a + s*t reads input row
//
//     h = t + shift - j,   shift = (a + p - m0) / s,   m = m0 + j*s.
//
// Each phase is therefore a dense stride-1 convolution of the original
// (un-spread) input with a small sub-kernel. The s_m * s_n phases partition
// both the kernel taps and the output coordinates; their partial outputs are
// interleaved back by scatter_combine.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "huge2/probe.hpp"
#include "huge2/reference.hpp"
#include "huge2/tensor.hpp"

namespace huge2 {

/// One stride phase of one spatial axis.
struct PhaseAxis {
  int residue = 0;    // output coordinate mod stride
  int first_tap = 0;  // smallest kernel index feeding this residue
  int taps = 0;       // kernel indices first_tap, first_tap + s, ... < extent
  int shift = 0;      // input index = t + shift - j
  int outputs = 0;    // output coordinates congruent to residue

  static PhaseAxis make(int residue, int stride, int pad, int kernel_extent, int out_extent) {
    PhaseAxis p;
    p.residue = residue;
    p.first_tap = (residue + pad) % stride;
    p.taps = kernel_extent > p.first_tap ? (kernel_extent - p.first_tap + stride - 1) / stride : 0;
    p.shift = (residue + pad - p.first_tap) / stride;
    p.outputs = residue < out_extent ? (out_extent - residue + stride - 1) / stride : 0;
    return p;
  }
};

/// The kernel taps that meet real input samples for output phase
/// (residue_h, residue_w), in their original relative order.
struct SubKernel {
  int residue_h = 0;
  int residue_w = 0;
  std::vector<int> source_rows;
  std::vector<int> source_cols;
  // source_rows.size() x source_cols.size() x C x N; empty when R < s or
  // S < s leaves this phase without taps.
  Kernel4 weights;
  int shift_h = 0;
  int shift_w = 0;
  KernelShape origin;

  bool empty() const { return weights.empty(); }
};

struct PatternSet {
  int stride_h = 1;
  int stride_w = 1;
  DeconvConfig cfg;
  KernelShape origin;
  // s_m * s_n entries ordered by (residue_h, residue_w) row-major.
  std::vector<SubKernel> patterns;

  const SubKernel& at(int residue_h, int residue_w) const {
    return patterns[static_cast<std::size_t>(residue_h) * stride_w + residue_w];
  }
};

inline PatternSet decompose_kernel(const Kernel4& kernel, const DeconvConfig& cfg) {
  cfg.validate();
  PatternSet set;
  set.stride_h = cfg.stride_h;
  set.stride_w = cfg.stride_w;
  set.cfg = cfg;
  set.origin = kernel.shape();
  set.patterns.reserve(static_cast<std::size_t>(cfg.stride_h) * cfg.stride_w);

  for (int a = 0; a < cfg.stride_h; ++a) {
    // Output extents do not affect which taps a phase owns.
    const PhaseAxis rows = PhaseAxis::make(a, cfg.stride_h, cfg.pad_h, kernel.rows(), 0);
    for (int b = 0; b < cfg.stride_w; ++b) {
      const PhaseAxis cols = PhaseAxis::make(b, cfg.stride_w, cfg.pad_w, kernel.cols(), 0);
      SubKernel sub;
      sub.residue_h = a;
      sub.residue_w = b;
      sub.shift_h = rows.shift;
      sub.shift_w = cols.shift;
      sub.origin = kernel.shape();
      for (int j = 0; j < rows.taps; ++j)
        sub.source_rows.push_back(rows.first_tap + j * cfg.stride_h);
      for (int l = 0; l < cols.taps; ++l)
        sub.source_cols.push_back(cols.first_tap + l * cfg.stride_w);
      sub.weights = Kernel4(rows.taps, cols.taps, kernel.in_channels(), kernel.out_channels());
      for (int j = 0; j < rows.taps; ++j) {
        for (int l = 0; l < cols.taps; ++l) {
          auto src = kernel.tap(sub.source_rows[j], sub.source_cols[l]);
          std::copy(src.begin(), src.end(), sub.weights.tap(j, l).begin());
        }
      }
      set.patterns.push_back(std::move(sub));
    }
  }
  return set;
}

namespace detail {

inline TensorShape phase_shape(const TensorShape& out, const DeconvConfig& cfg, int a, int b) {
  const PhaseAxis rows = PhaseAxis::make(a, cfg.stride_h, cfg.pad_h, 0, out.height);
  const PhaseAxis cols = PhaseAxis::make(b, cfg.stride_w, cfg.pad_w, 0, out.width);
  return {rows.outputs, cols.outputs, out.channels};
}

}  // namespace detail

/// Dense stride-1 convolution of one phase. Returns the phase's share of the
/// final output: partial[t, u, k] == O[a + s_m*t, b + s_n*u, k].
inline Tensor3 conv_pattern(const Tensor3& input, const SubKernel& sub, const DeconvConfig& cfg,
                            int threads = 1) {
  detail::require_channels(input.channels(), sub.origin.in_channels);
  const TensorShape os = cfg.output_shape(input.shape(), sub.origin);
  const TensorShape ps = detail::phase_shape(os, cfg, sub.residue_h, sub.residue_w);
  if (ps.size() == 0 || sub.empty()) return Tensor3(ps);

  const int taps_h = sub.weights.rows();
  const int taps_w = sub.weights.cols();
  // Window rows r = t + j' map to input row r - top, with j' the flipped tap.
  const int top = taps_h - 1 - sub.shift_h;
  const int left = taps_w - 1 - sub.shift_w;
  const int bottom = ps.height + taps_h - 1 - input.height() - top;
  const int right = ps.width + taps_w - 1 - input.width() - left;
  const Tensor3 window = detail::pad_crop(input, top, left, bottom, right);
  return detail::dense_correlate(window, flip_spatial(sub.weights), 1, 1, 1, 1, ps.height, ps.width,
                                 threads);
}

/// O[y, x, k] = partial_{(y mod s_m, x mod s_n)}[y div s_m, x div s_n, k].
inline Tensor3 scatter_combine(std::span<const Tensor3> partials, const PatternSet& meta,
                               const TensorShape& out_shape, int threads = 1) {
  const auto expected = static_cast<std::size_t>(meta.stride_h) * meta.stride_w;
  if (partials.size() != expected) {
    throw ShapeError("scatter_combine: expected " + std::to_string(expected) + " partials, got " +
                     std::to_string(partials.size()));
  }
  for (int a = 0; a < meta.stride_h; ++a) {
    for (int b = 0; b < meta.stride_w; ++b) {
      const TensorShape want = detail::phase_shape(out_shape, meta.cfg, a, b);
      const Tensor3& p = partials[static_cast<std::size_t>(a) * meta.stride_w + b];
      if (p.shape() != want) {
        throw ShapeError("scatter_combine: partial (" + std::to_string(a) + "," +
                         std::to_string(b) + ") has dims " + std::to_string(p.height()) + "x" +
                         std::to_string(p.width()) + "x" + std::to_string(p.channels()) +
                         ", expected " + std::to_string(want.height) + "x" +
                         std::to_string(want.width) + "x" + std::to_string(want.channels));
      }
    }
  }

  Tensor3 out(out_shape);
  // Phases own disjoint output coordinates.
  detail::parallel_for(expected, threads, [&](std::size_t idx) {
    const int a = static_cast<int>(idx) / meta.stride_w;
    const int b = static_cast<int>(idx) % meta.stride_w;
    const Tensor3& p = partials[idx];
    for (int t = 0; t < p.height(); ++t) {
      for (int u = 0; u < p.width(); ++u) {
        const int y = a + meta.stride_h * t;
        const int x = b + meta.stride_w * u;
        auto src = p.pixel(t, u);
        std::copy(src.begin(), src.end(), out.pixel(y, x).begin());
        HUGE2_PROBE_WRITE(static_cast<std::size_t>(y) * out_shape.width + x);
      }
    }
  });
  return out;
}

/// Transposed convolution as s_m * s_n small dense convolutions on the
/// original input; no multiplications against inserted zeros.
inline Tensor3 conv2d_transpose_decomposed(const Tensor3& input, const Kernel4& kernel,
                                           const DeconvConfig& cfg, int threads = 1) {
  detail::require_channels(input.channels(), kernel.in_channels());
  const TensorShape os = cfg.output_shape(input.shape(), kernel.shape());
  const PatternSet set = decompose_kernel(kernel, cfg);
  std::vector<Tensor3> partials(set.patterns.size());
  detail::parallel_for(partials.size(), threads, [&](std::size_t i) {
    partials[i] = conv_pattern(input, set.patterns[i], cfg);
  });
  return scatter_combine(partials, set, os, threads);
}

}  // namespace huge2
