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

#include "huge2/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "huge2/tensor_io.hpp"

namespace huge2 {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("huge2_tensor_test_" + name);
}

TEST(MakeTensor, ZerosSingleElement) {
  const Tensor3 t = make_tensor(1, 1, 1, fill::zeros{});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.data()[0], 0.0f);
}

TEST(MakeTensor, SequentialFill) {
  const Tensor3 t = make_tensor(2, 2, 1, fill::sequential{});
  const std::vector<float> want{0, 1, 2, 3};
  EXPECT_TRUE(std::equal(t.data().begin(), t.data().end(), want.begin()));
}

TEST(MakeTensor, ValuesFollowChannelFastestLayout) {
  const Tensor3 t = make_tensor(2, 1, 3, fill::values{{1, 2, 3, 4, 5, 6}});
  EXPECT_EQ(t(1, 0, 2), 6.0f);
  EXPECT_EQ(t(0, 0, 1), 2.0f);
  EXPECT_EQ(t.index(1, 0, 0), 3u);
}

TEST(MakeTensor, RejectsBadDims) {
  try {
    make_tensor(0, 2, 2, fill::zeros{});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find('H'), std::string::npos);
  }
  EXPECT_THROW(make_tensor(2, -1, 2, fill::zeros{}), ShapeError);
  EXPECT_THROW(make_tensor(2, 2, 0, fill::zeros{}), ShapeError);
}

TEST(MakeTensor, RejectsLengthMismatch) {
  try {
    make_tensor(2, 2, 1, fill::values{{1, 2, 3}});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("values"), std::string::npos) << msg;
    EXPECT_NE(msg.find('4'), std::string::npos) << msg;
  }
}

TEST(MakeKernel, IndexFormula) {
  const Kernel4 k = make_kernel(2, 3, 4, 5, fill::sequential{});
  // ((m*S + n)*C + c)*N + k
  EXPECT_EQ(k(1, 2, 3, 4), static_cast<float>(((1 * 3 + 2) * 4 + 3) * 5 + 4));
  EXPECT_EQ(k.tap(1, 0).size(), 20u);
  EXPECT_EQ(k.tap(1, 0)[0], static_cast<float>(3 * 20));
  EXPECT_THROW(make_kernel(1, 1, 1, 1, fill::values{{1, 2}}), ShapeError);
  EXPECT_THROW(make_kernel(1, 0, 1, 1, fill::zeros{}), ShapeError);
}

TEST(TensorsClose, Reflexive) {
  std::mt19937_64 rng(1);
  const Tensor3 a = random_tensor({3, 4, 2}, rng);
  EXPECT_TRUE(tensors_close(a, a, 0.0f, 0.0f));
}

TEST(TensorsClose, ShapeMismatchIsFalse) {
  EXPECT_FALSE(tensors_close(make_tensor(2, 2, 1, fill::zeros{}),
                             make_tensor(2, 2, 2, fill::zeros{}), 1.0f, 1.0f));
}

TEST(TensorsClose, WithinAbsoluteTolerance) {
  const Tensor3 a = make_tensor(1, 1, 1, fill::values{{1.0f}});
  const Tensor3 b = make_tensor(1, 1, 1, fill::values{{1.0f + 5e-6f}});
  EXPECT_TRUE(tensors_close(a, b, 1e-5f, 0.0f));
  const Tensor3 c = make_tensor(1, 1, 1, fill::values{{1.0f + 5e-5f}});
  EXPECT_FALSE(tensors_close(a, c, 1e-5f, 0.0f));
  EXPECT_TRUE(tensors_close(a, c, 0.0f, 1e-4f));
}

TEST(TensorsClose, NanNeverClose) {
  const Tensor3 a = make_tensor(1, 1, 1, fill::values{{NAN}});
  EXPECT_FALSE(tensors_close(a, a, 1.0f, 1.0f));
}

TEST(DeconvConfig, OutputShape) {
  const DeconvConfig cfg{2, 2, 2, 2, 1, 1};
  const TensorShape o = cfg.output_shape({4, 4, 1024}, {5, 5, 1024, 512});
  EXPECT_EQ(o, (TensorShape{8, 8, 512}));
  EXPECT_THROW((DeconvConfig{2, 2, 0, 0, 2, 0}.validate()), GeometryError);
  EXPECT_THROW((DeconvConfig{0, 1, 0, 0, 0, 0}.validate()), GeometryError);
  EXPECT_THROW((DeconvConfig{1, 1, 3, 3, 0, 0}.output_shape({1, 1, 1}, {3, 3, 1, 1})),
               GeometryError);
}

TEST(TensorIo, RoundTripIsBitIdentical) {
  const fs::path p = temp_file("roundtrip.hug2");
  Tensor3 t = make_tensor(3, 3, 2, fill::sequential{});
  t(1, 2, 1) = -0.1f;
  save_tensor(t, p);
  const Tensor3 back = load_tensor(p);
  ASSERT_EQ(back.shape(), t.shape());
  EXPECT_EQ(std::memcmp(back.data().data(), t.data().data(), t.size() * sizeof(float)), 0);
  fs::remove(p);
}

TEST(TensorIo, KernelRoundTrip) {
  const fs::path p = temp_file("kernel.hug2");
  std::mt19937_64 rng(3);
  const Kernel4 k = random_kernel({2, 3, 4, 5}, rng);
  save_kernel(k, p);
  const Kernel4 back = load_kernel(p);
  EXPECT_TRUE(kernels_close(back, k, 0.0f, 0.0f));
  EXPECT_TRUE(std::holds_alternative<Kernel4>(load_any(p)));
  EXPECT_THROW(load_tensor(p), IoError);
  fs::remove(p);
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string u32(std::uint32_t v) { return std::string(reinterpret_cast<const char*>(&v), 4); }

IoErrorKind load_error_kind(const fs::path& p, std::string* msg) {
  try {
    load_any(p);
  } catch (const IoError& e) {
    *msg = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "expected IoError";
  return IoErrorKind::open_failed;
}

TEST(TensorIo, BadMagic) {
  const fs::path p = temp_file("magic.hug2");
  write_bytes(p, "XXXX" + std::string(1, '\3') + u32(1) + u32(1) + u32(1) + std::string(4, '\0'));
  std::string msg;
  EXPECT_EQ(load_error_kind(p, &msg), IoErrorKind::bad_magic);
  EXPECT_NE(msg.find("bad magic"), std::string::npos) << msg;
  fs::remove(p);
}

TEST(TensorIo, TruncatedPayload) {
  const fs::path p = temp_file("trunc.hug2");
  write_bytes(p, "HUG2" + std::string(1, '\3') + u32(2) + u32(2) + u32(1) + std::string(12, '\0'));
  std::string msg;
  EXPECT_EQ(load_error_kind(p, &msg), IoErrorKind::truncated);
  EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
  fs::remove(p);
}

TEST(TensorIo, DimOverflowAndBadRank) {
  const fs::path p = temp_file("overflow.hug2");
  write_bytes(p, "HUG2" + std::string(1, '\3') + u32(1u << 20) + u32(1u << 20) + u32(4));
  std::string msg;
  EXPECT_EQ(load_error_kind(p, &msg), IoErrorKind::dim_overflow);
  write_bytes(p, "HUG2" + std::string(1, '\5') + u32(1));
  EXPECT_EQ(load_error_kind(p, &msg), IoErrorKind::bad_rank);
  fs::remove(p);
}

TEST(TensorIo, MissingFile) {
  std::string msg;
  EXPECT_EQ(load_error_kind(temp_file("does_not_exist.hug2"), &msg), IoErrorKind::open_failed);
}

}  // namespace
}  // namespace huge2
