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
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "huge2/decomposition.hpp"
#include "huge2/instrumentation.hpp"
#include "huge2/reference.hpp"
#include "huge2/tensor.hpp"
#include "huge2/tensor_io.hpp"
#include "huge2/training_grad.hpp"
#include "huge2/untangling.hpp"

namespace huge2 {

/// Results of two paths disagree; benchmarking a wrong kernel is meaningless.
class VerificationError : public Error {
 public:
  using Error::Error;
};

enum class LayerKind { transpose, dilated, weight_grad };

inline std::string_view kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::transpose: return "transpose";
    case LayerKind::dilated: return "dilated";
    case LayerKind::weight_grad: return "weight_grad";
  }
  return "?";
}

inline std::optional<LayerKind> parse_kind(std::string_view s) {
  if (s == "transpose") return LayerKind::transpose;
  if (s == "dilated") return LayerKind::dilated;
  if (s == "weight_grad" || s == "grad") return LayerKind::weight_grad;
  return std::nullopt;
}

/// One benchmarked layer. For `dilated` layers the stride pair holds the
/// dilation factors and the convolution itself runs at stride 1; for
/// `weight_grad` layers it is the stride of the forward convolution.
struct LayerSpec {
  std::string name;
  TensorShape input;
  KernelShape kernel;
  Vec2i stride{1, 1};
  Vec2i pad{0, 0};
  Vec2i out_pad{0, 0};
  LayerKind kind = LayerKind::transpose;

  Geometry geometry() const {
    Geometry g{input, kernel, stride, pad, out_pad, {1, 1}};
    if (kind == LayerKind::dilated) {
      g.dilation = stride;
      g.stride = {1, 1};
    }
    return g;
  }

  void validate() const {
    if (input.height < 1 || input.width < 1 || input.channels < 1) {
      throw ShapeError(name + ": input dims must be positive");
    }
    if (kernel.rows < 1 || kernel.cols < 1 || kernel.out_channels < 1) {
      throw ShapeError(name + ": kernel dims must be positive");
    }
    if (kernel.in_channels != input.channels) {
      throw ShapeError(name + ": kernel C " + std::to_string(kernel.in_channels) + " != input C " +
                       std::to_string(input.channels));
    }
    const Path check = kind == LayerKind::transpose ? Path::untangled
                       : kind == LayerKind::dilated ? Path::dilated_untangled
                                                    : Path::grad_untangled;
    if (kind != LayerKind::transpose && (out_pad.h != 0 || out_pad.w != 0)) {
      throw GeometryError(name + ": out_pad only applies to transpose layers");
    }
    count_path(check, geometry());  // throws on invalid geometry
  }
};

/// Names of the execution paths as the command line spells them.
inline constexpr std::array<std::string_view, 3> kCliPaths = {"naive", "decomposed", "untangled"};

/// The library path a command-line name selects for a layer kind, or
/// nullopt when the combination does not exist (no decomposed dilated path).
inline std::optional<Path> resolve_path(LayerKind kind, std::string_view cli) {
  switch (kind) {
    case LayerKind::transpose:
      if (cli == "naive") return Path::naive_zero_insert;
      if (cli == "decomposed") return Path::decomposed;
      if (cli == "untangled") return Path::untangled;
      break;
    case LayerKind::dilated:
      if (cli == "naive") return Path::dilated_naive;
      if (cli == "untangled") return Path::dilated_untangled;
      break;
    case LayerKind::weight_grad:
      if (cli == "naive") return Path::grad_naive;
      if (cli == "untangled") return Path::grad_untangled;
      break;
  }
  return std::nullopt;
}

inline std::string valid_paths_message() { return "valid paths: naive, decomposed, untangled"; }

namespace detail {

inline LayerSpec layer(std::string name, TensorShape in, int r, int n, Vec2i pad, Vec2i out_pad) {
  return {std::move(name), in, {r, r, in.channels, n}, {2, 2}, pad, out_pad, LayerKind::transpose};
}

// Desk-scale channel rule: counts of 16 or more shrink 16x; smaller counts
// (the 3-channel image output) are kept.
inline int desk_channels(int c) { return c >= 16 ? c / 16 : c; }

}  // namespace detail

/// Deconvolution layers of DCGAN and cGAN. Padding is chosen so every layer
/// doubles the spatial extent: pad 2 / out_pad 1 for 5x5 kernels, pad 1 /
/// out_pad 0 for 4x4 kernels. `*_desk` variants shrink channels only.
inline std::vector<LayerSpec> preset(std::string_view name) {
  using detail::layer;
  std::vector<LayerSpec> out;
  const bool desk = name.ends_with("_desk");
  const std::string_view base = desk ? name.substr(0, name.size() - 5) : name;
  if (base == "dcgan") {
    out = {layer("DC1", {4, 4, 1024}, 5, 512, {2, 2}, {1, 1}),
           layer("DC2", {8, 8, 512}, 5, 256, {2, 2}, {1, 1}),
           layer("DC3", {16, 16, 256}, 5, 128, {2, 2}, {1, 1}),
           layer("DC4", {32, 32, 128}, 5, 3, {2, 2}, {1, 1})};
  } else if (base == "cgan") {
    out = {layer("DC1", {8, 8, 256}, 4, 128, {1, 1}, {0, 0}),
           layer("DC2", {16, 16, 128}, 4, 3, {1, 1}, {0, 0})};
  } else {
    throw Error("unknown preset '" + std::string(name) +
                "' (known: dcgan, cgan, dcgan_desk, cgan_desk)");
  }
  if (desk) {
    for (LayerSpec& l : out) {
      l.input.channels = detail::desk_channels(l.input.channels);
      l.kernel.in_channels = l.input.channels;
      l.kernel.out_channels = detail::desk_channels(l.kernel.out_channels);
    }
  }
  return out;
}

/// Layer file: one layer per line,
///   name H W C R S N sm sn ph pw oh ow kind
/// Blank lines and lines starting with '#' are ignored.
inline std::vector<LayerSpec> parse_layer_file(std::istream& in,
                                               const std::string& origin = "layers") {
  std::vector<LayerSpec> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    LayerSpec l;
    std::string kind;
    fields >> l.name >> l.input.height >> l.input.width >> l.input.channels >> l.kernel.rows >>
        l.kernel.cols >> l.kernel.out_channels >> l.stride.h >> l.stride.w >> l.pad.h >> l.pad.w >>
        l.out_pad.h >> l.out_pad.w >> kind;
    std::string extra;
    if (!fields || (fields >> extra)) {
      throw ShapeError(origin + ":" + std::to_string(lineno) +
                       ": expected 14 fields: name H W C R S N sm sn ph pw oh ow kind");
    }
    const auto k = parse_kind(kind);
    if (!k)
      throw ShapeError(origin + ":" + std::to_string(lineno) + ": unknown kind '" + kind + "'");
    l.kind = *k;
    l.kernel.in_channels = l.input.channels;
    l.validate();
    out.push_back(std::move(l));
  }
  return out;
}

inline std::vector<LayerSpec> load_layer_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorKind::open_failed, "cannot open layer file: " + path.string());
  return parse_layer_file(in, path.string());
}

/// Random operands of one layer, uniform in [0, 1) so checksums are sums of
/// non-negative terms and compare well in relative terms.
struct LayerData {
  Tensor3 input;
  Kernel4 kernel;
  Tensor3 upstream;  // weight_grad layers only

  static LayerData make(const LayerSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ std::hash<std::string>{}(spec.name));
    LayerData d;
    d.input = random_tensor(spec.input, rng, 0.0f, 1.0f);
    d.kernel = random_kernel(spec.kernel, rng, 0.0f, 1.0f);
    if (spec.kind == LayerKind::weight_grad) {
      const Geometry g = spec.geometry();
      const int oh = detail::conv_extent(g.input.height, g.pad.h, g.kernel.rows, g.stride.h);
      const int ow = detail::conv_extent(g.input.width, g.pad.w, g.kernel.cols, g.stride.w);
      d.upstream = random_tensor({oh, ow, g.kernel.out_channels}, rng, 0.0f, 1.0f);
    }
    return d;
  }
};

/// Executes one path once; weight-gradient paths return the gradient kernel.
inline AnyTensor run_path(Path path, const Geometry& g, const Tensor3& input, const Kernel4& kernel,
                          const Tensor3& upstream = {}, int threads = 1) {
  switch (path) {
    case Path::naive_zero_insert:
      return conv2d_transpose_via_zero_insertion(input, kernel, g.deconv(), threads);
    case Path::decomposed: return conv2d_transpose_decomposed(input, kernel, g.deconv(), threads);
    case Path::untangled: return conv2d_transpose_untangled(input, kernel, g.deconv(), threads);
    case Path::dilated_naive:
      return conv2d_dilated(input, kernel, g.dilated(), g.pad.h, g.pad.w, threads);
    case Path::dilated_untangled:
      return conv2d_dilated_untangled(input, kernel, g.dilated(), g.pad.h, g.pad.w, threads);
    case Path::grad_naive:
    case Path::grad_untangled: {
      const GradInstance gi{input, upstream, g.stride, g.pad, kernel.shape()};
      return path == Path::grad_naive ? discriminator_weight_grad(gi) : weight_grad_untangled(gi);
    }
  }
  throw Error("unknown path");
}

inline std::span<const float> payload(const AnyTensor& t) {
  return std::visit([](const auto& x) { return x.data(); }, t);
}

inline double checksum(const AnyTensor& t) {
  double sum = 0.0;
  for (float v : payload(t)) sum += v;
  return sum;
}

struct BenchResult {
  std::string layer;
  std::string path;
  std::uint64_t wall_ns_median = 0;
  std::uint64_t wall_ns_min = 0;
  AccessReport report;
  double checksum = 0.0;
  int threads = 1;
};

/// Per layer and non-naive path: median(naive) / median(path) and
/// reduction_ratio(naive report, path report).
struct DerivedRow {
  std::string layer;
  std::string path;
  double speedup = 0.0;
  double reduction = 0.0;
  int threads = 1;
};

struct BenchTable {
  std::vector<BenchResult> results;
  std::vector<DerivedRow> derived;
};

struct BenchOptions {
  std::vector<std::string> paths{"naive", "decomposed", "untangled"};
  int repeat = 11;
  int warmup = 2;
  int threads = 1;
  std::uint64_t seed = 42;
  double checksum_rtol = 1e-4;
};

inline void validate_options(const BenchOptions& opt) {
  if (opt.paths.empty()) throw Error("at least one path is required; " + valid_paths_message());
  for (const std::string& p : opt.paths) {
    if (std::find(kCliPaths.begin(), kCliPaths.end(), p) == kCliPaths.end()) {
      throw Error("unknown path '" + p + "'; " + valid_paths_message());
    }
  }
  if (opt.repeat < 3) throw Error("repeat must be >= 3");
  if (opt.warmup < 0) throw Error("warmup must be >= 0");
  if (opt.threads < 1) throw Error("threads must be >= 1");
}

/// Times every (layer, path) pair. Paths that do not apply to a layer's kind
/// are skipped. Throws VerificationError when checksums of one layer
/// disagree beyond checksum_rtol.
inline BenchTable run_bench(const std::vector<LayerSpec>& layers, const BenchOptions& opt,
                            const std::function<void(const BenchResult&)>& on_result = {}) {
  validate_options(opt);
  using clock = std::chrono::steady_clock;
  BenchTable table;
  for (const LayerSpec& spec : layers) {
    spec.validate();
    const Geometry g = spec.geometry();
    const LayerData data = LayerData::make(spec, opt.seed);
    std::vector<BenchResult> rows;
    for (const std::string& cli : opt.paths) {
      const auto path = resolve_path(spec.kind, cli);
      if (!path) continue;
      BenchResult r;
      r.layer = spec.name;
      r.path = cli;
      r.threads = opt.threads;
      r.report = count_path(*path, g);
      AnyTensor out;
      for (int i = 0; i < opt.warmup; ++i) {
        out = run_path(*path, g, data.input, data.kernel, data.upstream, opt.threads);
      }
      std::vector<std::uint64_t> times;
      for (int i = 0; i < opt.repeat; ++i) {
        const auto t0 = clock::now();
        out = run_path(*path, g, data.input, data.kernel, data.upstream, opt.threads);
        const auto t1 = clock::now();
        times.push_back(static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
      }
      std::sort(times.begin(), times.end());
      r.wall_ns_median = times[times.size() / 2];
      r.wall_ns_min = times.front();
      r.checksum = checksum(out);
      if (!rows.empty()) {
        const double ref = rows.front().checksum;
        if (std::fabs(r.checksum - ref) > opt.checksum_rtol * std::max(std::fabs(ref), 1e-30)) {
          std::ostringstream msg;
          msg.precision(10);
          msg << spec.name << ": checksum of path " << cli << " (" << r.checksum
              << ") disagrees with " << rows.front().path << " (" << ref << ")";
          throw VerificationError(msg.str());
        }
      }
      if (on_result) on_result(r);
      rows.push_back(std::move(r));
    }
    const auto naive = std::find_if(rows.begin(), rows.end(),
                                    [](const BenchResult& r) { return r.path == "naive"; });
    if (naive != rows.end()) {
      for (const BenchResult& r : rows) {
        if (r.path == "naive") continue;
        table.derived.push_back(
            {spec.name, r.path + "_vs_naive",
             static_cast<double>(naive->wall_ns_median) /
                 static_cast<double>(std::max<std::uint64_t>(r.wall_ns_median, 1)),
             reduction_ratio(naive->report, r.report), opt.threads});
      }
    }
    for (BenchResult& r : rows) table.results.push_back(std::move(r));
  }
  return table;
}

inline constexpr std::string_view kCsvHeader =
    "layer,path,wall_ns_median,wall_ns_min,macs,input_reads,weight_reads,output_writes,checksum,"
    "threads,speedup,reduction_ratio";

/// Timing rows leave speedup/reduction_ratio empty; derived rows leave the
/// timing, count and checksum columns empty.
inline void write_csv(const BenchTable& t, std::ostream& os) {
  os << kCsvHeader << '\n';
  const auto prec = os.precision(12);
  for (const BenchResult& r : t.results) {
    os << r.layer << ',' << r.path << ',' << r.wall_ns_median << ',' << r.wall_ns_min << ','
       << r.report.macs << ',' << r.report.input_reads << ',' << r.report.weight_reads << ','
       << r.report.output_writes << ',' << r.checksum << ',' << r.threads << ",,\n";
  }
  for (const DerivedRow& d : t.derived) {
    os << d.layer << ',' << d.path << ",,,,,,,," << d.threads << ',' << d.speedup << ','
       << d.reduction << '\n';
  }
  os.precision(prec);
}

inline nlohmann::json report_json(const AccessReport& r) {
  return {{"path", r.path_name},
          {"macs", r.macs},
          {"input_reads", r.input_reads},
          {"weight_reads", r.weight_reads},
          {"output_writes", r.output_writes},
          {"peak_live_floats", r.peak_live_floats}};
}

inline void write_json(const BenchTable& t, std::ostream& os) {
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchResult& r : t.results) {
    rows.push_back({{"layer", r.layer},
                    {"path", r.path},
                    {"wall_ns_median", r.wall_ns_median},
                    {"wall_ns_min", r.wall_ns_min},
                    {"macs", r.report.macs},
                    {"input_reads", r.report.input_reads},
                    {"weight_reads", r.report.weight_reads},
                    {"output_writes", r.report.output_writes},
                    {"checksum", r.checksum},
                    {"threads", r.threads}});
  }
  nlohmann::json derived = nlohmann::json::array();
  for (const DerivedRow& d : t.derived) {
    derived.push_back({{"layer", d.layer},
                       {"path", d.path},
                       {"speedup", d.speedup},
                       {"reduction_ratio", d.reduction},
                       {"threads", d.threads}});
  }
  os << nlohmann::json{{"results", rows}, {"derived", derived}}.dump(2) << '\n';
}

}  // namespace huge2
