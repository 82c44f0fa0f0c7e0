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

// Analytic work and memory-traffic model of each execution path.
//
// Counting rules:
//  * every multiply-add the path's inner loops execute is one MAC, including
//    products against inserted zeros and padding in the naive paths;
//  * each MAC reads one input operand and one weight operand;
//  * partial sums live in registers for the duration of one kernel tap, so
//    an output element costs one write per tap that updates it;
//  * scatter_combine adds one write per output element.
//
// The closed forms here are written independently of the kernels; the
// probe counters (probe.hpp) check that they agree with what runs.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "huge2/decomposition.hpp"
#include "huge2/tensor.hpp"
#include "huge2/untangling.hpp"

namespace huge2 {

enum class Path {
  naive_zero_insert,
  decomposed,
  untangled,
  dilated_naive,
  dilated_untangled,
  grad_naive,
  grad_untangled,
};

inline constexpr std::array<Path, 7> kAllPaths = {
    Path::naive_zero_insert, Path::decomposed, Path::untangled,     Path::dilated_naive,
    Path::dilated_untangled, Path::grad_naive, Path::grad_untangled};

inline std::string_view path_name(Path p) {
  switch (p) {
    case Path::naive_zero_insert: return "naive_zero_insert";
    case Path::decomposed: return "decomposed";
    case Path::untangled: return "untangled";
    case Path::dilated_naive: return "dilated_naive";
    case Path::dilated_untangled: return "dilated_untangled";
    case Path::grad_naive: return "grad_naive";
    case Path::grad_untangled: return "grad_untangled";
  }
  return "?";
}

inline std::optional<Path> parse_path(std::string_view name) {
  for (Path p : kAllPaths) {
    if (path_name(p) == name) return p;
  }
  return std::nullopt;
}

/// Layer geometry. Transposed paths use stride/pad/out_pad; dilated paths
/// use dilation/stride/pad; gradient paths use the forward stride/pad.
struct Geometry {
  TensorShape input;
  KernelShape kernel;
  Vec2i stride{1, 1};
  Vec2i pad{0, 0};
  Vec2i out_pad{0, 0};
  Vec2i dilation{1, 1};

  DeconvConfig deconv() const { return {stride.h, stride.w, pad.h, pad.w, out_pad.h, out_pad.w}; }
  DilationConfig dilated() const { return {dilation.h, dilation.w, stride.h, stride.w}; }
};

struct AccessReport {
  std::uint64_t macs = 0;
  std::uint64_t input_reads = 0;
  std::uint64_t weight_reads = 0;
  std::uint64_t output_writes = 0;
  std::uint64_t peak_live_floats = 0;
  std::string path_name;

  std::uint64_t total_accesses() const { return input_reads + weight_reads + output_writes; }
  friend bool operator==(const AccessReport&, const AccessReport&) = default;
};

namespace detail {

using u64 = std::uint64_t;

// #{(h, m) : 0 <= h < in, 0 <= m < taps, 0 <= s*h + m - p < out}: input
// samples that a transposed convolution actually scatters into the output.
inline u64 scatter_pairs(int in, int taps, int stride, int pad, int out) {
  u64 n = 0;
  for (int h = 0; h < in; ++h) {
    for (int m = 0; m < taps; ++m) {
      const int y = stride * h + m - pad;
      n += (y >= 0 && y < out) ? 1 : 0;
    }
  }
  return n;
}

// #{(t, m) : 0 <= t < out, 0 <= m < taps, 0 <= t*s + d*m - p < in}: taps of
// a forward convolution that land on real samples.
inline u64 gather_pairs(int in, int taps, int stride, int dil, int pad, int out) {
  u64 n = 0;
  for (int t = 0; t < out; ++t) {
    for (int m = 0; m < taps; ++m) {
      const int x = t * stride + m * dil - pad;
      n += (x >= 0 && x < in) ? 1 : 0;
    }
  }
  return n;
}

// sum over residues a of outputs(a) * taps(a): the dense per-phase work.
inline u64 phase_pairs(int taps, int stride, int pad, int out) {
  u64 n = 0;
  for (int a = 0; a < stride; ++a) {
    const PhaseAxis p = PhaseAxis::make(a, stride, pad, taps, out);
    n += static_cast<u64>(p.outputs) * p.taps;
  }
  return n;
}

inline AccessReport per_mac(Path p, u64 macs, u64 writes, u64 peak) {
  return {macs, macs, macs, writes, peak, std::string(path_name(p))};
}

}  // namespace detail

inline AccessReport count_path(Path path, const Geometry& g) {
  using detail::u64;
  const TensorShape& in = g.input;
  const KernelShape& k = g.kernel;
  if (in.channels != k.in_channels) throw ShapeError("channel mismatch in geometry");
  const u64 cn = static_cast<u64>(k.in_channels) * k.out_channels;
  const u64 taps = static_cast<u64>(k.rows) * k.cols;
  const u64 in_size = in.size();
  const u64 k_size = k.size();

  switch (path) {
    case Path::naive_zero_insert: {
      const TensorShape os = g.deconv().output_shape(in, k);
      const u64 outputs = static_cast<u64>(os.height) * os.width;
      const u64 spread = static_cast<u64>(g.stride.h * (in.height - 1) + 1) *
                         (g.stride.w * (in.width - 1) + 1) * in.channels;
      const u64 padded =
          static_cast<u64>(os.height + k.rows - 1) * (os.width + k.cols - 1) * in.channels;
      return detail::per_mac(path, outputs * taps * cn, outputs * taps * k.out_channels,
                             in_size + spread + padded + 2 * k_size + os.size());
    }
    case Path::decomposed: {
      const DeconvConfig cfg = g.deconv();
      const TensorShape os = cfg.output_shape(in, k);
      const u64 rows = detail::phase_pairs(k.rows, cfg.stride_h, cfg.pad_h, os.height);
      const u64 cols = detail::phase_pairs(k.cols, cfg.stride_w, cfg.pad_w, os.width);
      // Largest phase window plus its flipped sub-kernel, alive one at a time.
      u64 window = 0;
      for (int a = 0; a < cfg.stride_h; ++a) {
        const PhaseAxis pr = PhaseAxis::make(a, cfg.stride_h, cfg.pad_h, k.rows, os.height);
        for (int b = 0; b < cfg.stride_w; ++b) {
          const PhaseAxis pc = PhaseAxis::make(b, cfg.stride_w, cfg.pad_w, k.cols, os.width);
          if (pr.outputs == 0 || pc.outputs == 0 || pr.taps == 0 || pc.taps == 0) continue;
          window = std::max(window, static_cast<u64>(pr.outputs + pr.taps - 1) *
                                            (pc.outputs + pc.taps - 1) * in.channels +
                                        static_cast<u64>(pr.taps) * pc.taps * cn);
        }
      }
      return detail::per_mac(
          path, rows * cols * cn,
          (rows * cols + os.height * static_cast<u64>(os.width)) * k.out_channels,
          in_size + 2 * k_size + window + 2 * os.size());
    }
    case Path::untangled: {
      const DeconvConfig cfg = g.deconv();
      const TensorShape os = cfg.output_shape(in, k);
      const u64 rows = detail::scatter_pairs(in.height, k.rows, cfg.stride_h, cfg.pad_h, os.height);
      const u64 cols = detail::scatter_pairs(in.width, k.cols, cfg.stride_w, cfg.pad_w, os.width);
      const u64 panel =
          static_cast<u64>(std::min(in.width, (os.width + cfg.stride_w - 1) / cfg.stride_w)) *
          in.channels;
      return detail::per_mac(
          path, rows * cols * cn,
          (rows * cols + os.height * static_cast<u64>(os.width)) * k.out_channels,
          in_size + 2 * k_size + panel + 2 * os.size());
    }
    case Path::dilated_naive:
    case Path::dilated_untangled:
    case Path::grad_naive:
    case Path::grad_untangled: {
      const bool dilated = path == Path::dilated_naive || path == Path::dilated_untangled;
      const Vec2i dil = dilated ? g.dilation : Vec2i{1, 1};
      if (g.stride.h < 1 || g.stride.w < 1 || dil.h < 1 || dil.w < 1) {
        throw GeometryError("stride and dilation must be >= 1");
      }
      const int span_h = (k.rows - 1) * dil.h + 1;
      const int span_w = (k.cols - 1) * dil.w + 1;
      if (in.height + 2 * g.pad.h < span_h || in.width + 2 * g.pad.w < span_w) {
        throw GeometryError("kernel does not fit the padded input");
      }
      const int oh = detail::conv_extent(in.height, g.pad.h, span_h, g.stride.h);
      const int ow = detail::conv_extent(in.width, g.pad.w, span_w, g.stride.w);
      const u64 outputs = static_cast<u64>(oh) * ow;
      const u64 padded =
          static_cast<u64>(in.height + 2 * g.pad.h) * (in.width + 2 * g.pad.w) * in.channels;
      const u64 rows = detail::gather_pairs(in.height, k.rows, g.stride.h, dil.h, g.pad.h, oh);
      const u64 cols = detail::gather_pairs(in.width, k.cols, g.stride.w, dil.w, g.pad.w, ow);
      const u64 out_size = outputs * k.out_channels;
      switch (path) {
        case Path::dilated_naive:
          return detail::per_mac(path, outputs * taps * cn, outputs * taps * k.out_channels,
                                 in_size + padded + k_size + out_size);
        case Path::dilated_untangled:
          return detail::per_mac(path, rows * cols * cn, rows * cols * k.out_channels,
                                 in_size + k_size + static_cast<u64>(ow) * in.channels + out_size);
        case Path::grad_naive:
          // The derivative maps take the weight operand's role.
          return detail::per_mac(path, outputs * taps * cn, k_size,
                                 in_size + padded + out_size + cn + k_size);
        default: {
          // Only taps whose crop is non-empty produce a block.
          u64 live_taps = 0;
          for (int m = 0; m < k.rows; ++m) {
            for (int n = 0; n < k.cols; ++n) {
              const bool row_hit =
                  detail::gather_pairs(in.height, 1, g.stride.h, 1, g.pad.h - m, oh) > 0;
              const bool col_hit =
                  detail::gather_pairs(in.width, 1, g.stride.w, 1, g.pad.w - n, ow) > 0;
              live_taps += (row_hit && col_hit) ? 1 : 0;
            }
          }
          const u64 panel = outputs * (static_cast<u64>(in.channels) + k.out_channels);
          return detail::per_mac(path, rows * cols * cn, live_taps * cn,
                                 in_size + out_size + panel + k_size);
        }
      }
    }
  }
  throw GeometryError("unknown path");
}

/// 1 - b.total / a.total, the fraction of a's memory traffic that b avoids.
inline double reduction_ratio(const AccessReport& a, const AccessReport& b) {
  if (a.total_accesses() == 0) throw Error("reduction_ratio: baseline report has zero accesses");
  return 1.0 - static_cast<double>(b.total_accesses()) / static_cast<double>(a.total_accesses());
}

}  // namespace huge2
