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

#include "huge2/bench.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace huge2 {
namespace {

TEST(Preset, DcganShapes) {
  const auto layers = preset("dcgan");
  ASSERT_EQ(layers.size(), 4u);
  EXPECT_EQ(layers[0].name, "DC1");
  EXPECT_EQ(layers[0].input, (TensorShape{4, 4, 1024}));
  EXPECT_EQ(layers[0].kernel, (KernelShape{5, 5, 1024, 512}));
  EXPECT_EQ(layers[0].stride.h, 2);
  EXPECT_EQ(layers[0].stride.w, 2);
  EXPECT_EQ(layers[3].kernel, (KernelShape{5, 5, 128, 3}));
}

TEST(Preset, LayersChain) {
  for (const char* name : {"dcgan", "cgan"}) {
    const auto layers = preset(name);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const Geometry g = layers[i].geometry();
      const TensorShape os = g.deconv().output_shape(g.input, g.kernel);
      EXPECT_EQ(os.height, 2 * g.input.height) << name << " " << layers[i].name;
      if (i + 1 < layers.size()) {
        EXPECT_EQ(os, layers[i + 1].input) << name << " " << layers[i].name;
      }
    }
  }
}

TEST(Preset, CganShapes) {
  const auto layers = preset("cgan");
  ASSERT_EQ(layers.size(), 2u);
  EXPECT_EQ(layers[1].input, (TensorShape{16, 16, 128}));
  EXPECT_EQ(layers[1].kernel, (KernelShape{4, 4, 128, 3}));
}

TEST(Preset, DeskScaleShrinksChannelsOnly) {
  const auto layers = preset("dcgan_desk");
  ASSERT_EQ(layers.size(), 4u);
  EXPECT_EQ(layers[0].input, (TensorShape{4, 4, 64}));
  EXPECT_EQ(layers[0].kernel, (KernelShape{5, 5, 64, 32}));
  EXPECT_EQ(layers[3].input, (TensorShape{32, 32, 8}));
  EXPECT_EQ(layers[3].kernel, (KernelShape{5, 5, 8, 3}));
  EXPECT_EQ(preset("cgan_desk")[1].kernel, (KernelShape{4, 4, 8, 3}));
}

TEST(Preset, UnknownName) {
  try {
    preset("biggan");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("dcgan_desk"), std::string::npos);
  }
}

TEST(LayerFile, ParsesAllKinds) {
  std::istringstream in(
      "# name H W C R S N sm sn ph pw oh ow kind\n"
      "\n"
      "T1 4 4 8 5 5 4 2 2 2 2 1 1 transpose\n"
      "D1 7 7 2 3 3 3 2 2 0 0 0 0 dilated\n"
      "G1 8 8 3 4 4 2 2 2 1 1 0 0 weight_grad\n");
  const auto layers = parse_layer_file(in);
  ASSERT_EQ(layers.size(), 3u);
  EXPECT_EQ(layers[0].kernel, (KernelShape{5, 5, 8, 4}));
  EXPECT_EQ(layers[1].kind, LayerKind::dilated);
  EXPECT_EQ(layers[1].geometry().dilation.h, 2);
  EXPECT_EQ(layers[1].geometry().stride.h, 1);
  EXPECT_EQ(layers[2].kind, LayerKind::weight_grad);
  EXPECT_EQ(layers[2].geometry().stride.w, 2);
}

TEST(LayerFile, RejectsMalformedLines) {
  std::istringstream short_line("T1 4 4 8 5 5 4 2 2 2 2 1 transpose\n");
  EXPECT_THROW(parse_layer_file(short_line), ShapeError);
  std::istringstream bad_kind("T1 4 4 8 5 5 4 2 2 2 2 1 1 pooling\n");
  EXPECT_THROW(parse_layer_file(bad_kind), ShapeError);
  std::istringstream bad_geometry("T1 4 4 8 5 5 4 2 2 2 2 2 1 transpose\n");
  EXPECT_THROW(parse_layer_file(bad_geometry), GeometryError);
  EXPECT_THROW(load_layer_file("/nonexistent/layers.txt"), IoError);
}

TEST(BenchOptions, Validation) {
  BenchOptions opt;
  opt.paths = {"naive", "fastest"};
  try {
    validate_options(opt);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("fastest"), std::string::npos);
    EXPECT_NE(msg.find("naive, decomposed, untangled"), std::string::npos);
  }
  opt.paths = {"naive"};
  opt.repeat = 2;
  EXPECT_THROW(validate_options(opt), Error);
  opt.repeat = 3;
  EXPECT_NO_THROW(validate_options(opt));
}

BenchTable quick_bench(const std::vector<LayerSpec>& layers) {
  BenchOptions opt;
  opt.repeat = 3;
  opt.warmup = 0;
  return run_bench(layers, opt);
}

TEST(RunBench, DeskRowCounts) {
  const BenchTable t = quick_bench(preset("dcgan_desk"));
  EXPECT_EQ(t.results.size(), 12u);
  EXPECT_EQ(t.derived.size(), 8u);
  std::ostringstream csv;
  write_csv(t, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, kCsvHeader);
  EXPECT_EQ(line.rfind("layer,path,wall_ns_median,wall_ns_min,macs,input_reads,weight_reads,output_"
                       "writes,checksum",
                       0),
            0u);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 11) << line;
  }
  EXPECT_EQ(rows, 20);
}

TEST(RunBench, DerivedRowsRecomputable) {
  const BenchTable t = quick_bench(preset("cgan_desk"));
  for (const DerivedRow& d : t.derived) {
    const std::string path = d.path.substr(0, d.path.find("_vs_naive"));
    const BenchResult* naive = nullptr;
    const BenchResult* other = nullptr;
    for (const BenchResult& r : t.results) {
      if (r.layer != d.layer) continue;
      if (r.path == "naive") naive = &r;
      if (r.path == path) other = &r;
    }
    ASSERT_TRUE(naive && other);
    EXPECT_DOUBLE_EQ(d.speedup, static_cast<double>(naive->wall_ns_median) / other->wall_ns_median);
    EXPECT_DOUBLE_EQ(d.reduction, reduction_ratio(naive->report, other->report));
  }
}

TEST(RunBench, ChecksumsAgreeAcrossPaths) {
  const BenchTable t = quick_bench(preset("cgan_desk"));
  for (const BenchResult& a : t.results)
    for (const BenchResult& b : t.results) {
      if (a.layer == b.layer) {
        EXPECT_NEAR(a.checksum, b.checksum, 1e-4 * std::fabs(a.checksum));
      }
    }
}

TEST(RunBench, SkipsPathsWithoutKind) {
  std::istringstream in(
      "D1 9 9 2 3 3 2 2 2 1 1 0 0 dilated\nG1 8 8 3 4 4 2 2 2 1 1 0 0 weight_grad\n");
  const BenchTable t = quick_bench(parse_layer_file(in));
  EXPECT_EQ(t.results.size(), 4u);  // decomposed does not apply
  EXPECT_EQ(t.derived.size(), 2u);
  for (const BenchResult& r : t.results) EXPECT_NE(r.path, "decomposed");
}

TEST(RunBench, JsonHasBothTables) {
  const BenchTable t = quick_bench(preset("cgan_desk"));
  std::ostringstream os;
  write_json(t, os);
  const auto j = nlohmann::json::parse(os.str());
  EXPECT_EQ(j["results"].size(), 6u);
  EXPECT_EQ(j["derived"].size(), 4u);
  EXPECT_EQ(j["results"][0]["layer"], "DC1");
}

TEST(ResolvePath, KindSpecific) {
  EXPECT_EQ(resolve_path(LayerKind::transpose, "naive"), Path::naive_zero_insert);
  EXPECT_EQ(resolve_path(LayerKind::dilated, "untangled"), Path::dilated_untangled);
  EXPECT_EQ(resolve_path(LayerKind::weight_grad, "naive"), Path::grad_naive);
  EXPECT_FALSE(resolve_path(LayerKind::dilated, "decomposed").has_value());
  EXPECT_EQ(parse_kind("grad"), LayerKind::weight_grad);
}

TEST(LayerData, Deterministic) {
  const LayerSpec spec = preset("cgan_desk")[0];
  const LayerData a = LayerData::make(spec, 5);
  const LayerData b = LayerData::make(spec, 5);
  EXPECT_TRUE(tensors_close(a.input, b.input, 0.0f, 0.0f));
  EXPECT_TRUE(kernels_close(a.kernel, b.kernel, 0.0f, 0.0f));
  EXPECT_FALSE(tensors_close(a.input, LayerData::make(spec, 6).input, 0.0f, 0.0f));
}

}  // namespace
}  // namespace huge2
