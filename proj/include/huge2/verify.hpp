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

// Randomized self-check behind `huge2 verify`: every optimized path against
// its naive oracle, plus the partition, gradient and counter properties.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "huge2/bench.hpp"
#include "huge2/decomposition.hpp"
#include "huge2/instrumentation.hpp"
#include "huge2/probe.hpp"
#include "huge2/reference.hpp"
#include "huge2/training_grad.hpp"
#include "huge2/untangling.hpp"

namespace huge2 {

struct PropertyResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // largest error seen (or mismatch count)
  std::string detail;
};

namespace detail {

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Random transposed-convolution geometry with a positive output.
inline Geometry random_transpose_geometry(std::mt19937_64& rng, int max_hw = 8, int max_c = 4) {
  for (;;) {
    Geometry g;
    g.input = {uniform_int(rng, 1, max_hw), uniform_int(rng, 1, max_hw),
               uniform_int(rng, 1, max_c)};
    g.kernel = {uniform_int(rng, 1, 5), uniform_int(rng, 1, 5), g.input.channels,
                uniform_int(rng, 1, max_c)};
    g.stride = {uniform_int(rng, 1, 3), uniform_int(rng, 1, 3)};
    g.pad = {uniform_int(rng, 0, 2), uniform_int(rng, 0, 2)};
    g.out_pad = {uniform_int(rng, 0, g.stride.h - 1), uniform_int(rng, 0, g.stride.w - 1)};
    const int oh = g.stride.h * (g.input.height - 1) + g.kernel.rows - 2 * g.pad.h + g.out_pad.h;
    const int ow = g.stride.w * (g.input.width - 1) + g.kernel.cols - 2 * g.pad.w + g.out_pad.w;
    if (oh > 0 && ow > 0) return g;
  }
}

/// Random dilated-convolution geometry whose dilated kernel fits.
inline Geometry random_dilated_geometry(std::mt19937_64& rng, int max_hw = 12, int max_c = 4) {
  for (;;) {
    Geometry g;
    g.input = {uniform_int(rng, 1, max_hw), uniform_int(rng, 1, max_hw),
               uniform_int(rng, 1, max_c)};
    g.kernel = {uniform_int(rng, 1, 5), uniform_int(rng, 1, 5), g.input.channels,
                uniform_int(rng, 1, max_c)};
    g.dilation = {uniform_int(rng, 1, 3), uniform_int(rng, 1, 3)};
    g.stride = {uniform_int(rng, 1, 2), uniform_int(rng, 1, 2)};
    g.pad = {uniform_int(rng, 0, 2), uniform_int(rng, 0, 2)};
    if (g.input.height + 2 * g.pad.h >= (g.kernel.rows - 1) * g.dilation.h + 1 &&
        g.input.width + 2 * g.pad.w >= (g.kernel.cols - 1) * g.dilation.w + 1) {
      return g;
    }
  }
}

/// Random strided forward-convolution geometry for the weight gradient.
inline Geometry random_grad_geometry(std::mt19937_64& rng) {
  for (;;) {
    Geometry g;
    g.input = {uniform_int(rng, 2, 8), uniform_int(rng, 2, 8), uniform_int(rng, 1, 3)};
    g.kernel = {uniform_int(rng, 1, 4), uniform_int(rng, 1, 4), g.input.channels,
                uniform_int(rng, 1, 3)};
    g.stride = {uniform_int(rng, 1, 3), uniform_int(rng, 1, 3)};
    g.pad = {uniform_int(rng, 0, 1), uniform_int(rng, 0, 1)};
    if (g.input.height + 2 * g.pad.h >= g.kernel.rows &&
        g.input.width + 2 * g.pad.w >= g.kernel.cols) {
      return g;
    }
  }
}

/// Double-precision 0.5 * ||conv2d_standard(I, K) - T||^2.
inline double half_squared_error(const Tensor3& in, const std::vector<double>& k,
                                 const KernelShape& ks, const Geometry& g, const Tensor3& target) {
  double loss = 0.0;
  for (int oh = 0; oh < target.height(); ++oh) {
    for (int ow = 0; ow < target.width(); ++ow) {
      for (int f = 0; f < ks.out_channels; ++f) {
        double acc = 0.0;
        for (int m = 0; m < ks.rows; ++m) {
          for (int n = 0; n < ks.cols; ++n) {
            const int y = oh * g.stride.h + m - g.pad.h;
            const int x = ow * g.stride.w + n - g.pad.w;
            if (y < 0 || y >= in.height() || x < 0 || x >= in.width()) continue;
            for (int c = 0; c < ks.in_channels; ++c) {
              acc += static_cast<double>(in(y, x, c)) *
                     k[((static_cast<std::size_t>(m) * ks.cols + n) * ks.in_channels + c) *
                           ks.out_channels +
                       f];
            }
          }
        }
        const double d = acc - target(oh, ow, f);
        loss += 0.5 * d * d;
      }
    }
  }
  return loss;
}

}  // namespace detail

/// Central finite differences of 0.5 * ||conv2d_standard(I, K) - T||^2 with
/// respect to every kernel entry.
inline std::vector<double> finite_difference_weight_grad(const Tensor3& input,
                                                         const Kernel4& kernel, const Geometry& g,
                                                         const Tensor3& target,
                                                         double step = 1e-3) {
  std::vector<double> k(kernel.data().begin(), kernel.data().end());
  std::vector<double> grad(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double saved = k[i];
    k[i] = saved + step;
    const double up = detail::half_squared_error(input, k, kernel.shape(), g, target);
    k[i] = saved - step;
    const double down = detail::half_squared_error(input, k, kernel.shape(), g, target);
    k[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

/// Runs every property `trials` times. Throws Error when trials < 1.
inline std::vector<PropertyResult> run_verify(std::uint64_t seed, int trials) {
  if (trials < 1) throw Error("trials must be >= 1");
  constexpr float kTol = 1e-5f;
  std::mt19937_64 rng(seed);
  std::vector<PropertyResult> results = {
      {"emulation≡reference", true, 0.0, {}},
      {"decomposed≡reference", true, 0.0, {}},
      {"untangled≡reference", true, 0.0, {}},
      {"dilated_untangled≡dilated", true, 0.0, {}},
      {"adjointness", true, 0.0, {}},
      {"write-once partition", true, 0.0, {}},
      {"gradient≡finite-difference", true, 0.0, {}},
      {"gradient paths agree", true, 0.0, {}},
      {"counter consistency", true, 0.0, {}},
  };
  auto check_close = [&](PropertyResult& r, std::span<const float> got, std::span<const float> want,
                         float atol, float rtol) {
    bool ok = got.size() == want.size();
    double worst = ok ? 0.0 : INFINITY;
    for (std::size_t i = 0; ok && i < got.size(); ++i) {
      const double err = std::fabs(got[i] - want[i]);
      worst = std::max(worst, err);
      if (!(err <= atol + rtol * std::fabs(want[i]))) ok = false;
    }
    r.worst = std::max(r.worst, worst);
    r.passed = r.passed && ok;
  };
  auto count_matches = [&](PropertyResult& r, Path p, const Geometry& g, std::uint64_t executed) {
    const std::uint64_t model = count_path(p, g).macs;
    if (executed != model) {
      r.passed = false;
      r.worst += 1;
      r.detail = std::string(path_name(p)) + " executed " + std::to_string(executed) +
                 " MACs, model says " + std::to_string(model);
    }
  };

  for (int trial = 0; trial < trials; ++trial) {
    // Transposed convolution paths.
    {
      const Geometry g = detail::random_transpose_geometry(rng);
      const Tensor3 in = random_tensor(g.input, rng);
      const Kernel4 k = random_kernel(g.kernel, rng);
      const DeconvConfig cfg = g.deconv();
      const Tensor3 ref = conv2d_transpose_reference(in, k, cfg);

      probe::reset();
      const Tensor3 emu = conv2d_transpose_via_zero_insertion(in, k, cfg);
      const std::uint64_t emu_macs = probe::counters.macs;
      probe::reset();
      const Tensor3 dec = conv2d_transpose_decomposed(in, k, cfg);
      const std::uint64_t dec_macs = probe::counters.macs;
      probe::reset();
      const Tensor3 unt = conv2d_transpose_untangled(in, k, cfg);
      const std::uint64_t unt_macs = probe::counters.macs;

      check_close(results[0], emu.data(), ref.data(), kTol, kTol);
      check_close(results[1], dec.data(), ref.data(), kTol, kTol);
      check_close(results[2], unt.data(), ref.data(), kTol, kTol);
      count_matches(results[8], Path::naive_zero_insert, g, emu_macs);
      count_matches(results[8], Path::decomposed, g, dec_macs);
      count_matches(results[8], Path::untangled, g, unt_macs);

      // Adjointness: <convT(I, K), X> == <I, conv(X, K')> where K' is K with
      // its channel and filter axes swapped.
      {
        Kernel4 swapped(k.rows(), k.cols(), k.out_channels(), k.in_channels());
        for (int m = 0; m < k.rows(); ++m)
          for (int n = 0; n < k.cols(); ++n)
            for (int c = 0; c < k.in_channels(); ++c)
              for (int f = 0; f < k.out_channels(); ++f) swapped(m, n, f, c) = k(m, n, c, f);
        const Tensor3 x = random_tensor(ref.shape(), rng);
        const Tensor3 back =
            conv2d_standard(x, swapped, cfg.stride_h, cfg.stride_w, cfg.pad_h, cfg.pad_w);
        double lhs = 0.0, rhs = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) {
          lhs += static_cast<double>(ref.data()[i]) * x.data()[i];
          scale += std::fabs(static_cast<double>(ref.data()[i]) * x.data()[i]);
        }
        for (std::size_t i = 0; i < in.size(); ++i) {
          rhs += static_cast<double>(in.data()[i]) * back.data()[i];
        }
        const double err = std::fabs(lhs - rhs) / std::max(scale, 1e-12);
        results[4].worst = std::max(results[4].worst, err);
        if (back.shape() != in.shape() || err > 1e-4) results[4].passed = false;
      }

      // Write-once: tag every partial element with a unique value and check
      // the combined output is a permutation of the tags.
      const PatternSet set = decompose_kernel(k, cfg);
      std::vector<Tensor3> partials;
      float tag = 1.0f;
      for (const SubKernel& sub : set.patterns) {
        Tensor3 p(detail::phase_shape(ref.shape(), cfg, sub.residue_h, sub.residue_w));
        for (float& v : p.data()) v = tag++;
        partials.push_back(std::move(p));
      }
      const Tensor3 combined = scatter_combine(partials, set, ref.shape());
      std::vector<int> seen(static_cast<std::size_t>(tag), 0);
      bool ok = static_cast<std::size_t>(tag - 1) == combined.size();
      for (float v : combined.data()) {
        const auto idx = static_cast<std::size_t>(v);
        if (v < 1.0f || idx >= seen.size() || seen[idx]++ != 0) ok = false;
      }
      if (!ok) {
        results[5].passed = false;
        results[5].worst += 1;
      }
    }

    // Dilated convolution.
    {
      const Geometry g = detail::random_dilated_geometry(rng);
      const Tensor3 in = random_tensor(g.input, rng);
      const Kernel4 k = random_kernel(g.kernel, rng);
      probe::reset();
      const Tensor3 ref = conv2d_dilated(in, k, g.dilated(), g.pad.h, g.pad.w);
      const std::uint64_t ref_macs = probe::counters.macs;
      probe::reset();
      const Tensor3 unt = conv2d_dilated_untangled(in, k, g.dilated(), g.pad.h, g.pad.w);
      const std::uint64_t unt_macs = probe::counters.macs;
      check_close(results[3], unt.data(), ref.data(), kTol, kTol);
      count_matches(results[8], Path::dilated_naive, g, ref_macs);
      count_matches(results[8], Path::dilated_untangled, g, unt_macs);
    }

    // Discriminator weight gradient.
    {
      const Geometry g = detail::random_grad_geometry(rng);
      const Tensor3 in = random_tensor(g.input, rng);
      const Kernel4 k = random_kernel(g.kernel, rng);
      const Tensor3 y = conv2d_standard(in, k, g.stride.h, g.stride.w, g.pad.h, g.pad.w);
      const Tensor3 target = random_tensor(y.shape(), rng);
      Tensor3 upstream(y.shape());
      for (std::size_t i = 0; i < y.size(); ++i)
        upstream.data()[i] = y.data()[i] - target.data()[i];
      const GradInstance gi{in, upstream, g.stride, g.pad, g.kernel};
      probe::reset();
      const Kernel4 direct = discriminator_weight_grad(gi);
      const std::uint64_t direct_macs = probe::counters.macs;
      probe::reset();
      const Kernel4 untangled = weight_grad_untangled(gi);
      const std::uint64_t untangled_macs = probe::counters.macs;
      count_matches(results[8], Path::grad_naive, g, direct_macs);
      count_matches(results[8], Path::grad_untangled, g, untangled_macs);

      const std::vector<double> fd = finite_difference_weight_grad(in, k, g, target);
      for (const Kernel4* got : {&direct, &untangled}) {
        for (std::size_t i = 0; i < fd.size(); ++i) {
          const double err = std::fabs(got->data()[i] - fd[i]);
          results[6].worst = std::max(results[6].worst, err);
          if (err > 1e-3) results[6].passed = false;
        }
      }
      check_close(results[7], untangled.data(), direct.data(), kTol, 0.0f);
    }
  }
  return results;
}

inline bool print_verify(const std::vector<PropertyResult>& results, std::ostream& os) {
  bool all = true;
  for (const PropertyResult& r : results) {
    // Pad by code points, not bytes.
    const auto width = static_cast<std::size_t>(
        std::count_if(r.name.begin(), r.name.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
    os << (r.passed ? "PASS " : "FAIL ") << r.name << std::string(width < 28 ? 28 - width : 0, ' ')
       << " worst=" << std::setprecision(3) << std::scientific << r.worst << std::defaultfloat;
    if (!r.detail.empty()) os << "  " << r.detail;
    os << '\n';
    all = all && r.passed;
  }
  return all;
}

}  // namespace huge2
