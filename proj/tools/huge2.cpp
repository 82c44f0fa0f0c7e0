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

// huge2: verification, benchmarking and single-run driver for the
// deconvolution kernels.
//
//   huge2 verify --seed N --trials N
//   huge2 bench <preset|layer-file> --paths a,b,c --repeat N --warmup N
//               --out f --format csv|json --threads N
//   huge2 run --input f --kernel f --kind transpose|dilated|grad
//             --stride a,b --pad a,b --out-pad a,b --path NAME --out f
//   huge2 diff f g --atol X --rtol Y
//
// Exit codes: 0 success, 1 verification/benchmark failure, 2 usage or I/O error.

#include "huge2/huge2.hpp"

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

huge2::Vec2i parse_pair(const std::string& text, const std::string& flag) {
  huge2::Vec2i v;
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> v.h)) throw CLI::ValidationError(flag, "expected a,b or a single integer");
  if (in >> comma) {
    if (comma != ',' || !(in >> v.w)) throw CLI::ValidationError(flag, "expected a,b");
  } else {
    v.w = v.h;
  }
  return v;
}

std::vector<std::string> split_paths(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct VerifyArgs {
  std::uint64_t seed = 42;
  int trials = 25;
};

int cmd_verify(const VerifyArgs& a) {
  const auto results = huge2::run_verify(a.seed, a.trials);
  return huge2::print_verify(results, std::cout) ? kOk : kFailed;
}

struct BenchArgs {
  std::string source;
  std::string paths = "naive,decomposed,untangled";
  int repeat = 11;
  int warmup = 2;
  int threads = 1;
  std::uint64_t seed = 42;
  std::string out;
  std::string format = "csv";
};

int cmd_bench(const BenchArgs& a) {
  std::vector<huge2::LayerSpec> layers;
  if (std::filesystem::exists(a.source)) {
    layers = huge2::load_layer_file(a.source);
  } else {
    layers = huge2::preset(a.source);
  }
  huge2::BenchOptions opt;
  opt.paths = split_paths(a.paths);
  opt.repeat = a.repeat;
  opt.warmup = a.warmup;
  opt.threads = a.threads;
  opt.seed = a.seed;
  huge2::validate_options(opt);

  const auto table = huge2::run_bench(layers, opt, [](const huge2::BenchResult& r) {
    std::cerr << r.layer << " " << r.path << " median " << r.wall_ns_median / 1000 << " us\n";
  });
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw huge2::IoError(huge2::IoErrorKind::open_failed, "cannot open " + a.out);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  if (a.format == "json") {
    huge2::write_json(table, os);
  } else {
    huge2::write_csv(table, os);
  }
  return kOk;
}

struct RunArgs {
  std::string input;
  std::string kernel;
  std::string grad;
  std::string kind = "transpose";
  std::string stride = "1,1";
  std::string pad = "0,0";
  std::string out_pad = "0,0";
  std::string dilation = "1,1";
  std::string path = "untangled";
  std::string out;
  int threads = 1;
};

int cmd_run(const RunArgs& a) {
  const auto kind = huge2::parse_kind(a.kind);
  if (!kind) throw CLI::ValidationError("--kind", "expected transpose, dilated or grad");
  const auto path = huge2::resolve_path(*kind, a.path);
  if (!path) {
    throw CLI::ValidationError("--path", "'" + a.path + "' is not available for kind " + a.kind +
                                             "; " + huge2::valid_paths_message());
  }
  const huge2::Tensor3 input = huge2::load_tensor(a.input);
  const huge2::Kernel4 kernel = huge2::load_kernel(a.kernel);

  huge2::Geometry g;
  g.input = input.shape();
  g.kernel = kernel.shape();
  g.stride = parse_pair(a.stride, "--stride");
  g.pad = parse_pair(a.pad, "--pad");
  g.out_pad = parse_pair(a.out_pad, "--out-pad");
  g.dilation = parse_pair(a.dilation, "--dilation");
  if (*kind == huge2::LayerKind::transpose &&
      (g.pad.h > kernel.rows() - 1 || g.pad.w > kernel.cols() - 1)) {
    throw huge2::GeometryError("transpose padding must satisfy pad <= R-1 and pad <= S-1 (pad " +
                               std::to_string(g.pad.h) + "," + std::to_string(g.pad.w) +
                               ", kernel " + std::to_string(kernel.rows()) + "x" +
                               std::to_string(kernel.cols()) + ")");
  }

  huge2::Tensor3 upstream;
  if (*kind == huge2::LayerKind::weight_grad) {
    if (a.grad.empty()) throw CLI::ValidationError("--grad", "required for --kind grad");
    upstream = huge2::load_tensor(a.grad);
  }
  const huge2::AccessReport report = huge2::count_path(*path, g);
  const huge2::AnyTensor result = huge2::run_path(*path, g, input, kernel, upstream, a.threads);
  if (const auto* t = std::get_if<huge2::Tensor3>(&result)) {
    huge2::save_tensor(*t, a.out);
  } else {
    huge2::save_kernel(std::get<huge2::Kernel4>(result), a.out);
  }
  std::cout << huge2::report_json(report).dump(2) << '\n';
  return kOk;
}

struct DiffArgs {
  std::string a;
  std::string b;
  double atol = 1e-5;
  double rtol = 1e-5;
};

int cmd_diff(const DiffArgs& d) {
  const huge2::AnyTensor x = huge2::load_any(d.a);
  const huge2::AnyTensor y = huge2::load_any(d.b);
  const bool same_rank = x.index() == y.index();
  bool close = false;
  if (same_rank) {
    if (const auto* t = std::get_if<huge2::Tensor3>(&x)) {
      close = huge2::tensors_close(*t, std::get<huge2::Tensor3>(y), static_cast<float>(d.atol),
                                   static_cast<float>(d.rtol));
    } else {
      close = huge2::kernels_close(std::get<huge2::Kernel4>(x), std::get<huge2::Kernel4>(y),
                                   static_cast<float>(d.atol), static_cast<float>(d.rtol));
    }
  }
  const double worst = huge2::max_abs_diff(huge2::payload(x), huge2::payload(y));
  std::cout << (close ? "equal" : "different") << " max_abs_diff=" << worst << '\n';
  return close ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"huge2 deconvolution kernels: verify, bench, run, diff"};
  app.require_subcommand(1);

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "randomized oracle-equivalence self-check");
  v->add_option("--seed", verify.seed, "RNG seed");
  v->add_option("--trials", verify.trials, "random instances per property");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "time execution paths over a preset or layer file");
  b->add_option("source", bench.source, "dcgan, cgan, dcgan_desk, cgan_desk or a layer file")
      ->required();
  b->add_option("--paths", bench.paths, "comma-separated: naive,decomposed,untangled");
  b->add_option("--repeat", bench.repeat, "timed runs per path (>= 3)");
  b->add_option("--warmup", bench.warmup, "untimed runs per path");
  b->add_option("--threads", bench.threads, "worker threads");
  b->add_option("--seed", bench.seed, "operand RNG seed");
  b->add_option("--out", bench.out, "output file (default: stdout)");
  b->add_option("--format", bench.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  RunArgs run;
  auto* r = app.add_subcommand("run", "execute one path once on tensors from files");
  r->add_option("--input", run.input, "input tensor (HUG2, rank 3)")->required();
  r->add_option("--kernel", run.kernel, "kernel (HUG2, rank 4)")->required();
  r->add_option("--grad", run.grad, "upstream gradient for --kind grad (HUG2, rank 3)");
  r->add_option("--kind", run.kind, "transpose, dilated or grad");
  r->add_option("--stride", run.stride, "a,b");
  r->add_option("--pad", run.pad, "a,b");
  r->add_option("--out-pad", run.out_pad, "a,b (transpose only)");
  r->add_option("--dilation", run.dilation, "a,b (dilated only)");
  r->add_option("--path", run.path, "naive, decomposed or untangled");
  r->add_option("--out", run.out, "output file")->required();
  r->add_option("--threads", run.threads, "worker threads");

  DiffArgs diff;
  auto* d = app.add_subcommand("diff", "compare two HUG2 files elementwise");
  d->add_option("a", diff.a)->required();
  d->add_option("b", diff.b)->required();
  d->add_option("--atol", diff.atol);
  d->add_option("--rtol", diff.rtol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*v) return cmd_verify(verify);
    if (*b) return cmd_bench(bench);
    if (*r) return cmd_run(run);
    if (*d) return cmd_diff(diff);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const huge2::VerificationError& e) {
    std::cerr << "verification error: " << e.what() << '\n';
    return kFailed;
  } catch (const huge2::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kUsage;
  } catch (const huge2::GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << '\n';
    return kUsage;
  } catch (const huge2::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
