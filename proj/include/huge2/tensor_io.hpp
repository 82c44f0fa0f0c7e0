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

// HUG2 tensor files (little-endian):
//   "HUG2" | u8 rank | rank x u32 dims | product(dims) x f32 payload
// Rank 3 is a Tensor3 (H W C), rank 4 a Kernel4 (R S C N); the payload
// follows each type's flat index order. No padding, no compression.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "huge2/tensor.hpp"

namespace huge2 {

static_assert(std::endian::native == std::endian::little, "HUG2 I/O assumes a little-endian host");

enum class IoErrorKind { open_failed, write_failed, bad_magic, bad_rank, truncated, dim_overflow };

class IoError : public Error {
 public:
  IoError(IoErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

namespace detail {

inline constexpr std::array<char, 4> kMagic = {'H', 'U', 'G', '2'};
// Refuse payloads above 4 GiB of floats; anything larger is a corrupt header here.
inline constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 30;

inline void write_file(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                       std::span<const float> payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrorKind::open_failed, "cannot open for writing: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  const auto rank = static_cast<std::uint8_t>(dims.size());
  out.write(reinterpret_cast<const char*>(&rank), 1);
  out.write(reinterpret_cast<const char*>(dims.data()),
            static_cast<std::streamsize>(dims.size_bytes()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size_bytes()));
  if (!out) throw IoError(IoErrorKind::write_failed, "write failed: " + path.string());
}

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> payload;
};

inline RawTensor read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorKind::open_failed, "cannot open: " + path.string());

  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) {
    throw IoError(IoErrorKind::bad_magic, "bad magic in " + path.string());
  }
  std::uint8_t rank = 0;
  in.read(reinterpret_cast<char*>(&rank), 1);
  if (in.gcount() != 1)
    throw IoError(IoErrorKind::truncated, "truncated header in " + path.string());
  if (rank != 3 && rank != 4) {
    throw IoError(IoErrorKind::bad_rank, "unsupported rank " + std::to_string(rank));
  }

  RawTensor raw;
  raw.dims.resize(rank);
  in.read(reinterpret_cast<char*>(raw.dims.data()), rank * 4);
  if (in.gcount() != rank * 4) {
    throw IoError(IoErrorKind::truncated, "truncated header in " + path.string());
  }
  std::uint64_t count = 1;
  for (std::uint32_t d : raw.dims) {
    if (d == 0 || d > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
      throw IoError(IoErrorKind::dim_overflow, "dimension out of range: " + std::to_string(d));
    }
    count *= d;
    if (count > kMaxElements) {
      throw IoError(IoErrorKind::dim_overflow, "dims overflow element limit in " + path.string());
    }
  }

  raw.payload.resize(count);
  const auto bytes = static_cast<std::streamsize>(count * sizeof(float));
  in.read(reinterpret_cast<char*>(raw.payload.data()), bytes);
  if (in.gcount() != bytes) {
    throw IoError(IoErrorKind::truncated, "truncated payload in " + path.string() + ": expected " +
                                              std::to_string(count) + " floats");
  }
  return raw;
}

}  // namespace detail

inline void save_tensor(const Tensor3& t, const std::filesystem::path& path) {
  const std::array<std::uint32_t, 3> dims = {static_cast<std::uint32_t>(t.height()),
                                             static_cast<std::uint32_t>(t.width()),
                                             static_cast<std::uint32_t>(t.channels())};
  detail::write_file(path, dims, t.data());
}

inline void save_kernel(const Kernel4& k, const std::filesystem::path& path) {
  const std::array<std::uint32_t, 4> dims = {
      static_cast<std::uint32_t>(k.rows()), static_cast<std::uint32_t>(k.cols()),
      static_cast<std::uint32_t>(k.in_channels()), static_cast<std::uint32_t>(k.out_channels())};
  detail::write_file(path, dims, k.data());
}

/// Either rank, as stored.
using AnyTensor = std::variant<Tensor3, Kernel4>;

inline AnyTensor load_any(const std::filesystem::path& path) {
  auto raw = detail::read_file(path);
  auto d = [&](int i) { return static_cast<int>(raw.dims[i]); };
  if (raw.dims.size() == 3) return Tensor3(d(0), d(1), d(2), std::move(raw.payload));
  return Kernel4(d(0), d(1), d(2), d(3), std::move(raw.payload));
}

inline Tensor3 load_tensor(const std::filesystem::path& path) {
  auto any = load_any(path);
  if (auto* t = std::get_if<Tensor3>(&any)) return std::move(*t);
  throw IoError(IoErrorKind::bad_rank, "expected a rank-3 tensor in " + path.string());
}

inline Kernel4 load_kernel(const std::filesystem::path& path) {
  auto any = load_any(path);
  if (auto* k = std::get_if<Kernel4>(&any)) return std::move(*k);
  throw IoError(IoErrorKind::bad_rank, "expected a rank-4 kernel in " + path.string());
}

}  // namespace huge2
