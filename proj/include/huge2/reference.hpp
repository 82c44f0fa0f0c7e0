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

// Naive reference convolutions. Everything else in the library is tested
// against these, so they favour the obvious loop nest over speed.
//
// Conventions:
//  * standard and dilated convolution are cross-correlations (no flip);
//  * transposed convolution is defined by scatter-accumulate,
//      O[s*h + m - p, s*w + n - p, k] += I[h, w, c] * K[m, n, c, k];
//  * the zero-insertion emulation is the only place that flips a kernel.

#pragma once

#include <string>
#include <vector>

#include "huge2/probe.hpp"
#include "huge2/tensor.hpp"

namespace huge2 {

namespace detail {

inline int conv_extent(int in, int pad, int span, int stride) {
  return (in + 2 * pad - span) / stride + 1;
}

/// Copies `in` into a buffer grown by the given margins. Negative margins
/// crop instead of pad.
inline Tensor3 pad_crop(const Tensor3& in, int top, int left, int bottom, int right) {
  const int h = in.height() + top + bottom;
  const int w = in.width() + left + right;
  if (h <= 0 || w <= 0) throw GeometryError("padding crops the input to nothing");
  Tensor3 out(h, w, in.channels());
  for (int y = std::max(0, top); y < std::min(h, in.height() + top); ++y) {
    for (int x = std::max(0, left); x < std::min(w, in.width() + left); ++x) {
      auto src = in.pixel(y - top, x - left);
      std::copy(src.begin(), src.end(), out.pixel(y, x).begin());
    }
  }
  return out;
}

/// Dense strided/dilated cross-correlation over an already padded input.
/// Every tap of every output position is multiplied, padding included.
/// Per output element the sum runs over taps row-major with the channel
/// innermost, so results are bit-reproducible for a given build.
inline Tensor3 dense_correlate(const Tensor3& padded, const Kernel4& k, int stride_h, int stride_w,
                               int dil_h, int dil_w, int out_h, int out_w, int threads = 1) {
  const int channels = k.in_channels();
  const int filters = k.out_channels();
  Tensor3 out(out_h, out_w, filters);
  parallel_for(static_cast<std::size_t>(out_h), threads, [&](std::size_t row) {
    const int oh = static_cast<int>(row);
    std::vector<float> acc(filters);
    for (int ow = 0; ow < out_w; ++ow) {
      std::fill(acc.begin(), acc.end(), 0.0f);
      for (int m = 0; m < k.rows(); ++m) {
        for (int n = 0; n < k.cols(); ++n) {
          const float* src =
              padded.pixel(oh * stride_h + m * dil_h, ow * stride_w + n * dil_w).data();
          const float* wts = k.tap(m, n).data();
          for (int c = 0; c < channels; ++c) {
            const float a = src[c];
            const float* wrow = wts + static_cast<std::size_t>(c) * filters;
            for (int f = 0; f < filters; ++f) {
              acc[f] += a * wrow[f];
              HUGE2_PROBE_MAC();
            }
          }
          HUGE2_PROBE_MACS(channels * filters);
        }
      }
      std::copy(acc.begin(), acc.end(), out.pixel(oh, ow).begin());
    }
  });
  return out;
}

inline void require_channels(int input_channels, int kernel_channels) {
  if (input_channels != kernel_channels) {
    throw ShapeError("channel mismatch: input has " + std::to_string(input_channels) +
                     ", kernel expects " + std::to_string(kernel_channels));
  }
}

}  // namespace detail

/// O[h,w,k] = sum_{c,m,n} I_pad[h*s_h + m, w*s_w + n, c] * K[m,n,c,k].
inline Tensor3 conv2d_standard(const Tensor3& input, const Kernel4& kernel, int stride_h,
                               int stride_w, int pad_h, int pad_w, int threads = 1) {
  detail::require_channels(input.channels(), kernel.in_channels());
  if (stride_h < 1 || stride_w < 1) throw GeometryError("stride must be >= 1");
  if (pad_h < 0 || pad_w < 0) throw GeometryError("pad must be >= 0");
  if (input.height() + 2 * pad_h < kernel.rows() || input.width() + 2 * pad_w < kernel.cols()) {
    throw GeometryError("kernel larger than padded input");
  }
  const int out_h = detail::conv_extent(input.height(), pad_h, kernel.rows(), stride_h);
  const int out_w = detail::conv_extent(input.width(), pad_w, kernel.cols(), stride_w);
  const Tensor3 padded = detail::pad_crop(input, pad_h, pad_w, pad_h, pad_w);
  return detail::dense_correlate(padded, kernel, stride_h, stride_w, 1, 1, out_h, out_w, threads);
}

/// Spreads the input with s-1 zeros between neighbouring rows and columns
/// (none after the last): dims (s_m(H-1)+1) x (s_n(W-1)+1) x C.
inline Tensor3 zero_insert(const Tensor3& input, int stride_h, int stride_w) {
  if (stride_h < 1 || stride_w < 1) throw GeometryError("zero-insertion stride must be >= 1");
  Tensor3 out(stride_h * (input.height() - 1) + 1, stride_w * (input.width() - 1) + 1,
              input.channels());
  for (int h = 0; h < input.height(); ++h) {
    for (int w = 0; w < input.width(); ++w) {
      auto src = input.pixel(h, w);
      std::copy(src.begin(), src.end(), out.pixel(h * stride_h, w * stride_w).begin());
    }
  }
  return out;
}

/// 180 degree spatial rotation: out(m, n) = in(R-1-m, S-1-n).
inline Kernel4 flip_spatial(const Kernel4& kernel) {
  Kernel4 out(kernel.shape());
  for (int m = 0; m < kernel.rows(); ++m) {
    for (int n = 0; n < kernel.cols(); ++n) {
      auto src = kernel.tap(kernel.rows() - 1 - m, kernel.cols() - 1 - n);
      std::copy(src.begin(), src.end(), out.tap(m, n).begin());
    }
  }
  return out;
}

/// Transposed convolution by scatter-accumulate.
inline Tensor3 conv2d_transpose_reference(const Tensor3& input, const Kernel4& kernel,
                                          const DeconvConfig& cfg) {
  detail::require_channels(input.channels(), kernel.in_channels());
  const TensorShape os = cfg.output_shape(input.shape(), kernel.shape());
  Tensor3 out(os);
  const int filters = kernel.out_channels();
  for (int h = 0; h < input.height(); ++h) {
    for (int w = 0; w < input.width(); ++w) {
      for (int c = 0; c < input.channels(); ++c) {
        const float v = input(h, w, c);
        for (int m = 0; m < kernel.rows(); ++m) {
          const int y = cfg.stride_h * h + m - cfg.pad_h;
          if (y < 0 || y >= os.height) continue;
          for (int n = 0; n < kernel.cols(); ++n) {
            const int x = cfg.stride_w * w + n - cfg.pad_w;
            if (x < 0 || x >= os.width) continue;
            for (int k = 0; k < filters; ++k) out(y, x, k) += v * kernel(m, n, c, k);
          }
        }
      }
    }
  }
  return out;
}

/// Transposed convolution emulated with a direct convolution: zero-insert,
/// pad by R-1-p (plus out_pad on the bottom/right), then a stride-1
/// correlation with the spatially flipped kernel. Pads larger than R-1 turn
/// into crops.
inline Tensor3 conv2d_transpose_via_zero_insertion(const Tensor3& input, const Kernel4& kernel,
                                                   const DeconvConfig& cfg, int threads = 1) {
  detail::require_channels(input.channels(), kernel.in_channels());
  const TensorShape os = cfg.output_shape(input.shape(), kernel.shape());
  const Tensor3 spread = zero_insert(input, cfg.stride_h, cfg.stride_w);
  const int top = kernel.rows() - 1 - cfg.pad_h;
  const int left = kernel.cols() - 1 - cfg.pad_w;
  const Tensor3 padded =
      detail::pad_crop(spread, top, left, top + cfg.out_pad_h, left + cfg.out_pad_w);
#ifdef HUGE2_MUTATE_SKIP_FLIP
  const Kernel4& taps = kernel;
#else
  const Kernel4 taps = flip_spatial(kernel);
#endif
  return detail::dense_correlate(padded, taps, 1, 1, 1, 1, os.height, os.width, threads);
}

/// O[h,w,k] = sum_{c,m,n} I_pad[h*stride + dil*m, w*stride + dil*n, c] * K[m,n,c,k].
inline Tensor3 conv2d_dilated(const Tensor3& input, const Kernel4& kernel,
                              const DilationConfig& cfg, int pad_h, int pad_w, int threads = 1) {
  detail::require_channels(input.channels(), kernel.in_channels());
  cfg.validate();
  if (pad_h < 0 || pad_w < 0) throw GeometryError("pad must be >= 0");
  const int span_h = (kernel.rows() - 1) * cfg.dil_h + 1;
  const int span_w = (kernel.cols() - 1) * cfg.dil_w + 1;
  if (input.height() + 2 * pad_h < span_h || input.width() + 2 * pad_w < span_w) {
    throw GeometryError("dilated kernel extent exceeds padded input");
  }
  const int out_h = detail::conv_extent(input.height(), pad_h, span_h, cfg.stride_h);
  const int out_w = detail::conv_extent(input.width(), pad_w, span_w, cfg.stride_w);
  const Tensor3 padded = detail::pad_crop(input, pad_h, pad_w, pad_h, pad_w);
  return detail::dense_correlate(padded, kernel, cfg.stride_h, cfg.stride_w, cfg.dil_h, cfg.dil_w,
                                 out_h, out_w, threads);
}

}  // namespace huge2
