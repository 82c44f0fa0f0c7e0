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

#include "huge2/instrumentation.hpp"

#include <gtest/gtest.h>

#include <random>

#include "huge2/bench.hpp"
#include "oracles.hpp"

namespace huge2 {
namespace {

using testing::rand_int;
using u64 = std::uint64_t;

Geometry small_layer() { return {{4, 4, 1}, {5, 5, 1, 1}, {2, 2}, {2, 2}, {1, 1}, {1, 1}}; }

// Real (non-padding, non-inserted) products of a transposed convolution,
// counted by enumerating every input sample and tap.
u64 real_products(const Geometry& g) {
  const TensorShape os = g.deconv().output_shape(g.input, g.kernel);
  u64 n = 0;
  for (int h = 0; h < g.input.height; ++h)
    for (int w = 0; w < g.input.width; ++w)
      for (int m = 0; m < g.kernel.rows; ++m)
        for (int k = 0; k < g.kernel.cols; ++k) {
          const int y = g.stride.h * h + m - g.pad.h;
          const int x = g.stride.w * w + k - g.pad.w;
          n += y >= 0 && y < os.height && x >= 0 && x < os.width;
        }
  return n * g.kernel.in_channels * g.kernel.out_channels;
}

TEST(CountPath, NaiveSmallLayer) {
  const AccessReport r = count_path(Path::naive_zero_insert, small_layer());
  EXPECT_EQ(r.macs, 1600u);
  EXPECT_EQ(r.input_reads, r.macs);
  EXPECT_EQ(r.weight_reads, r.macs);
  EXPECT_EQ(r.output_writes, 1600u);
  EXPECT_EQ(r.path_name, "naive_zero_insert");
}

TEST(CountPath, DecomposedSmallLayer) {
  const AccessReport r = count_path(Path::decomposed, small_layer());
  EXPECT_EQ(r.macs, 400u);
  EXPECT_EQ(r.macs * 4, count_path(Path::naive_zero_insert, small_layer()).macs);
}

TEST(CountPath, UntangledSkipsPadding) {
  const Geometry g = small_layer();
  EXPECT_EQ(count_path(Path::untangled, g).macs, real_products(g));
  EXPECT_LT(count_path(Path::untangled, g).macs, count_path(Path::decomposed, g).macs);
}

TEST(CountPath, UnitStrideNaiveEqualsDecomposed) {
  std::mt19937_64 rng(179);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = rand_int(rng, 1, 5);
    const int p = rand_int(rng, 0, r - 1);
    const Geometry g{{rand_int(rng, 1, 8), rand_int(rng, 1, 8), 2},
                     {r, r, 2, 3},
                     {1, 1},
                     {p, p},
                     {0, 0},
                     {1, 1}};
    if (g.input.height + r - 1 - 2 * p <= 0 || g.input.width + r - 1 - 2 * p <= 0) continue;
    AccessReport a = count_path(Path::naive_zero_insert, g);
    AccessReport b = count_path(Path::decomposed, g);
    EXPECT_EQ(a.macs, b.macs);
    EXPECT_EQ(a.input_reads, b.input_reads);
    EXPECT_EQ(a.weight_reads, b.weight_reads);
  }
}

TEST(CountPath, ZeroSkippingLawOnAlignedGeometries) {
  std::mt19937_64 rng(181);
  int checked = 0;
  while (checked < 100) {
    const int s_h = rand_int(rng, 1, 3), s_w = rand_int(rng, 1, 3);
    const int r = rand_int(rng, 1, 6), c = rand_int(rng, 1, 6);
    const int ph = rand_int(rng, 0, 2), pw = rand_int(rng, 0, 2);
    const int oh = s_h - r + 2 * ph, ow = s_w - c + 2 * pw;  // out_pad making H_out == s*H
    if (oh < 0 || oh >= s_h || ow < 0 || ow >= s_w) continue;
    const Geometry g{{rand_int(rng, 1, 9), rand_int(rng, 1, 9), rand_int(rng, 1, 4)},
                     {r, c, 0, rand_int(rng, 1, 4)},
                     {s_h, s_w},
                     {ph, pw},
                     {oh, ow},
                     {1, 1}};
    Geometry fixed = g;
    fixed.kernel.in_channels = g.input.channels;
    const TensorShape os = fixed.deconv().output_shape(fixed.input, fixed.kernel);
    ASSERT_EQ(os.height, s_h * fixed.input.height);
    ASSERT_EQ(os.width, s_w * fixed.input.width);
    EXPECT_EQ(count_path(Path::decomposed, fixed).macs * static_cast<u64>(s_h * s_w),
              count_path(Path::naive_zero_insert, fixed).macs);
    ++checked;
  }
}

TEST(CountPath, ClosedFormsAgreeWithEnumeration) {
  std::mt19937_64 rng(191);
  for (int trial = 0; trial < 40; ++trial) {
    const int s = rand_int(rng, 1, 3);
    const Geometry g{{rand_int(rng, 1, 7), rand_int(rng, 1, 7), 2},
                     {rand_int(rng, 1, 5), rand_int(rng, 1, 5), 2, 2},
                     {s, s},
                     {rand_int(rng, 0, 2), rand_int(rng, 0, 2)},
                     {0, 0},
                     {1, 1}};
    if (s * (g.input.height - 1) + g.kernel.rows - 2 * g.pad.h <= 0) continue;
    if (s * (g.input.width - 1) + g.kernel.cols - 2 * g.pad.w <= 0) continue;
    const TensorShape os = g.deconv().output_shape(g.input, g.kernel);
    EXPECT_EQ(count_path(Path::untangled, g).macs, real_products(g));
    EXPECT_EQ(count_path(Path::naive_zero_insert, g).macs,
              static_cast<u64>(os.height) * os.width * g.kernel.size());
  }
}

// In the normal build the probe adds one block per inner loop; its totals
// must still match the model for every path.
TEST(CountPath, ProbeMatchesModelForEveryPath) {
  std::mt19937_64 rng(193);
  for (int trial = 0; trial < 30; ++trial) {
    const Geometry t{{rand_int(rng, 1, 6), rand_int(rng, 1, 6), rand_int(rng, 1, 3)},
                     {rand_int(rng, 1, 5), rand_int(rng, 1, 5), 0, rand_int(rng, 1, 3)},
                     {rand_int(rng, 1, 3), rand_int(rng, 1, 3)},
                     {rand_int(rng, 0, 2), rand_int(rng, 0, 2)},
                     {0, 0},
                     {rand_int(rng, 1, 3), rand_int(rng, 1, 3)}};
    Geometry g = t;
    g.kernel.in_channels = g.input.channels;
    const Tensor3 in = random_tensor(g.input, rng);
    const Kernel4 k = random_kernel(g.kernel, rng);
    for (Path p : kAllPaths) {
      Geometry use = g;
      Tensor3 upstream;
      try {
        if (p == Path::grad_naive || p == Path::grad_untangled) {
          const GradInstance gi{in, {}, g.stride, g.pad, g.kernel};
          upstream = random_tensor(gi.forward_shape(), rng);
        }
        const AccessReport want = count_path(p, use);
        probe::reset();
        run_path(p, use, in, k, upstream, 1);
        EXPECT_EQ(probe::counters.macs, want.macs) << path_name(p) << " trial " << trial;
      } catch (const GeometryError&) {
        // Not every random geometry is valid for every path.
      }
    }
  }
}

TEST(ReductionRatio, Arithmetic) {
  AccessReport a{0, 500, 300, 200, 0, "a"};
  AccessReport b{0, 200, 100, 100, 0, "b"};
  EXPECT_DOUBLE_EQ(reduction_ratio(a, b), 0.6);
  EXPECT_DOUBLE_EQ(reduction_ratio(a, a), 0.0);
  EXPECT_THROW(reduction_ratio(AccessReport{}, b), Error);
}

TEST(ReductionRatio, DeskOutputLayerAboveBandFloor) {
  const Geometry g{{32, 32, 8}, {5, 5, 8, 3}, {2, 2}, {2, 2}, {1, 1}, {1, 1}};
  const double r =
      reduction_ratio(count_path(Path::naive_zero_insert, g), count_path(Path::untangled, g));
  EXPECT_GE(r, 0.30);
  EXPECT_LE(r, 0.90);
}

TEST(CountPath, ZeroInputProducesZeroOutput) {
  const Geometry g = small_layer();
  const Tensor3 in(g.input);
  std::mt19937_64 rng(197);
  for (Path p : {Path::naive_zero_insert, Path::decomposed, Path::untangled}) {
    const AnyTensor out = run_path(p, g, in, random_kernel(g.kernel, rng));
    for (float v : payload(out)) EXPECT_EQ(v, 0.0f);
  }
}

TEST(CountPath, DilatedAndGradientPaths) {
  const Geometry g{{7, 7, 2}, {3, 3, 2, 3}, {1, 1}, {0, 0}, {0, 0}, {2, 2}};
  const AccessReport naive = count_path(Path::dilated_naive, g);
  const AccessReport fast = count_path(Path::dilated_untangled, g);
  EXPECT_EQ(naive.macs, 3u * 3 * 9 * 6);
  EXPECT_EQ(fast.macs, naive.macs);  // no padding, nothing to skip
  const Geometry padded{{7, 7, 2}, {3, 3, 2, 3}, {1, 1}, {2, 2}, {0, 0}, {2, 2}};
  EXPECT_LT(count_path(Path::dilated_untangled, padded).macs,
            count_path(Path::dilated_naive, padded).macs);
  const Geometry grad{{8, 8, 3}, {4, 4, 3, 2}, {2, 2}, {1, 1}, {0, 0}, {1, 1}};
  EXPECT_EQ(count_path(Path::grad_naive, grad).macs, 4u * 4 * 16 * 6);
  EXPECT_LT(count_path(Path::grad_untangled, grad).macs, count_path(Path::grad_naive, grad).macs);
}

TEST(CountPath, Errors) {
  Geometry g = small_layer();
  g.kernel.in_channels = 2;
  EXPECT_THROW(count_path(Path::untangled, g), ShapeError);
  g = small_layer();
  g.out_pad = {2, 2};
  EXPECT_THROW(count_path(Path::decomposed, g), GeometryError);
  g = small_layer();
  g.dilation = {0, 1};
  EXPECT_THROW(count_path(Path::dilated_naive, g), GeometryError);
}

TEST(PathNames, RoundTrip) {
  for (Path p : kAllPaths) EXPECT_EQ(parse_path(path_name(p)), p);
  EXPECT_FALSE(parse_path("fast").has_value());
}

}  // namespace
}  // namespace huge2
