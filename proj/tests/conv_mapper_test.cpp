#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"
#include "xbar/conv_mapper.hpp"
#include "xbar/errors.hpp"
#include "xbar/metrics.hpp"
#include "xbar/resnet20.hpp"

namespace xbar {
namespace {

ConvSpec make_spec(std::size_t kh, std::size_t kw, std::size_t ic, std::size_t oc,
                   std::size_t stride, std::size_t pad, std::uint64_t seed) {
  ConvSpec s;
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.in_channels = ic;
  s.out_channels = oc;
  s.stride = stride;
  s.padding = pad;
  s.weights = gen_kernel(KernelType::Gaussian, kh, kw, ic, oc, seed);
  return s;
}

double max_abs(const FeatureMap& fm) {
  double m = 0.0;
  for (double v : fm.data) m = std::max(m, std::abs(v));
  return m;
}

TEST(ConvMapper, UnrollShapes) {
  EXPECT_EQ(unroll_kernel(make_spec(3, 3, 3, 16, 1, 1, 1)).rows(), 27u);
  EXPECT_EQ(unroll_kernel(make_spec(3, 3, 3, 16, 1, 1, 1)).cols(), 16u);
  const Matrix sum2 = unroll_kernel(make_spec(1, 1, 16, 32, 2, 0, 1));
  EXPECT_EQ(sum2.rows(), 16u);
  EXPECT_EQ(sum2.cols(), 32u);
  ConvSpec one = make_spec(1, 1, 1, 1, 1, 0, 1);
  one.weights.data = {-0.75};
  EXPECT_EQ(unroll_kernel(one), Matrix(1, 1, -0.75));
}

TEST(ConvMapper, UnrollRowOrderIsChannelMajor) {
  const ConvSpec s = make_spec(3, 2, 4, 3, 1, 0, 9);
  const Matrix u = unroll_kernel(s);
  for (std::size_t ic = 0; ic < 4; ++ic)
    for (std::size_t kh = 0; kh < 3; ++kh)
      for (std::size_t kw = 0; kw < 2; ++kw) {
        const std::size_t row = (ic * 3 + kh) * 2 + kw;
        EXPECT_EQ(unroll_row(s, ic, kh, kw), row);
        for (std::size_t oc = 0; oc < 3; ++oc) EXPECT_EQ(u(row, oc), s.weights.at(kh, kw, ic, oc));
      }
}

TEST(ConvMapper, WindowCounts) {
  const ConvSpec conv0 = make_spec(3, 3, 3, 16, 1, 1, 1);
  const Matrix w0 = window_stream(FeatureMap(32, 32, 3, 0.5), conv0);
  EXPECT_EQ(w0.rows(), 1024u);
  EXPECT_EQ(w0.cols(), 27u);
  const ConvSpec conv7 = make_spec(3, 3, 16, 32, 2, 1, 1);
  EXPECT_EQ(window_stream(FeatureMap(32, 32, 16, 0.5), conv7).rows(), 256u);
  FeatureMap px(1, 1, 1, 0.625);
  const Matrix w = window_stream(px, make_spec(1, 1, 1, 1, 1, 0, 1));
  EXPECT_EQ(w, Matrix(1, 1, 0.625));
  EXPECT_THROW(window_stream(FeatureMap(2, 2, 1), make_spec(5, 5, 1, 1, 1, 0, 1)),
               ContractViolation);
  EXPECT_THROW(window_stream(FeatureMap(4, 4, 2), make_spec(3, 3, 1, 1, 1, 0, 1)),
               ContractViolation);
}

TEST(ConvMapper, WindowDotColumnEqualsConvolution) {
  Rng rng(17);
  for (int t = 0; t < 25; ++t) {
    const std::size_t k = 1 + rng.below(3), ic = 1 + rng.below(4), oc = 1 + rng.below(4);
    const std::size_t stride = 1 + rng.below(2), pad = rng.below(2);
    const std::size_t h = k + rng.below(6), w = k + rng.below(6);
    const ConvSpec s = make_spec(k, k, ic, oc, stride, pad, rng.next_u64());
    const FeatureMap in = gen_input(h, w, ic, 0.3, rng.next_u64());
    const FeatureMap want = testing::naive_conv(in, s.weights, stride, pad);
    const Matrix windows = window_stream(in, s);
    const Matrix u = unroll_kernel(s);
    ASSERT_EQ(windows.rows(), want.height * want.width);
    const double scale = std::max(1.0, max_abs(want));
    for (std::size_t p = 0; p < windows.rows(); ++p) {
      const Vector y = testing::naive_vmm({windows.row(p).begin(), windows.row(p).end()}, u);
      for (std::size_t o = 0; o < oc; ++o)
        EXPECT_NEAR(y[o], want.data[p * oc + o], 1e-12 * scale);
    }
    const FeatureMap ref = conv_reference(in, s);
    ASSERT_TRUE(ref.same_shape(want));
    for (std::size_t q = 0; q < ref.size(); ++q) EXPECT_NEAR(ref.data[q], want.data[q], 1e-12 * scale);
  }
}

VmmEngine ideal_engine_for(const ConvSpec& s, const FeatureMap& in) {
  const Matrix u = unroll_kernel(s);
  const CrossbarConfig c = CrossbarConfig::ideal(u.rows(), u.cols());
  EngineBuildOptions opts;
  opts.conversion = ConversionMode::None;
  opts.x_max = 1.0;
  return build_engine(u, c, window_stream(in, s), opts);
}

TEST(ConvMapper, IdealEngineMatchesNaiveConvolutionForTableShapes) {
  // Table layer shapes at reduced channel counts: 16 -> 4, 32 -> 6, 64 -> 8.
  struct Shape {
    std::size_t k, ic, oc, stride, pad, in;
  };
  const Shape shapes[] = {{3, 3, 4, 1, 1, 12}, {3, 4, 4, 1, 1, 12}, {1, 4, 4, 1, 0, 12},
                          {1, 4, 6, 2, 0, 12}, {3, 4, 6, 2, 1, 12}, {3, 6, 6, 1, 1, 8},
                          {1, 6, 8, 2, 0, 8},  {3, 6, 8, 2, 1, 8},  {3, 8, 8, 1, 1, 4},
                          {1, 8, 10, 1, 0, 1}};
  std::uint64_t seed = 1;
  for (const Shape& sh : shapes) {
    const ConvSpec s = make_spec(sh.k, sh.k, sh.ic, sh.oc, sh.stride, sh.pad, seed++);
    const FeatureMap in = gen_input(sh.in, sh.in, sh.ic, 0.4, seed++);
    const VmmEngine e = ideal_engine_for(s, in);
    const FeatureMap got = conv_execute(e, in, s);
    const FeatureMap want = testing::naive_conv(in, s.weights, sh.stride, sh.pad);
    ASSERT_TRUE(got.same_shape(want));
    const double scale = max_abs(want);
    for (std::size_t q = 0; q < got.size(); ++q)
      EXPECT_LE(std::abs(got.data[q] - want.data[q]), 1e-6 * scale);
  }
}

TEST(ConvMapper, IdentityKernelPassesInputThrough) {
  ConvSpec s = make_spec(1, 1, 1, 1, 1, 0, 1);
  s.weights.data = {1.0};
  const FeatureMap in = gen_input(5, 4, 1, 0.2, 3);
  const FeatureMap out = conv_execute(ideal_engine_for(s, in), in, s);
  ASSERT_TRUE(out.same_shape(in));
  for (std::size_t q = 0; q < in.size(); ++q) EXPECT_NEAR(out.data[q], in.data[q], 1e-9);
}

TEST(ConvMapper, TraceAndClipAccounting) {
  const ConvSpec s = make_spec(3, 3, 2, 3, 1, 1, 4);
  const FeatureMap in = gen_input(6, 6, 2, 0.0, 5);
  const VmmEngine e = ideal_engine_for(s, in);
  FeatureMap hot = in;
  hot.at(2, 2, 1) = 3.0;  // above x_max = 1
  ConvTrace trace;
  ConvExecStats stats;
  ConvExecOptions opts;
  opts.record = true;
  conv_execute(e, hot, s, opts, &trace, &stats);
  EXPECT_EQ(stats.input_clips, 9u);  // the pixel appears in 9 windows
  EXPECT_EQ(trace.ideal.rows(), 36u);
  EXPECT_EQ(trace.actual.cols(), 3u);
  FeatureMap neg = in;
  neg.at(0, 0, 0) = -0.1;
  EXPECT_THROW(conv_execute(e, neg, s), ContractViolation);
}

TEST(ConvMapper, ThreadCountDoesNotChangeOutput) {
  const ConvSpec s = make_spec(3, 3, 3, 8, 1, 1, 4);
  const FeatureMap in = gen_input(10, 10, 3, 0.3, 5);
  const Matrix u = unroll_kernel(s);
  EngineBuildOptions opts;
  opts.x_max = 1.0;
  opts.range_refine_halvings = 2;
  const VmmEngine e = build_engine(u, CrossbarConfig::defaults(27, 8), window_stream(in, s), opts);
  ConvExecOptions one, four;
  one.threads = 1;
  four.threads = 4;
  EXPECT_EQ(conv_execute(e, in, s, one), conv_execute(e, in, s, four));
}

TEST(ConvMapper, FirstLayerErrorOnRealisticCrossbar) {
  const ConvSpec s = make_spec(3, 3, 3, 16, 1, 1, 21);
  const FeatureMap image = gen_input(32, 32, 3, 0.0, 22);
  const Matrix u = unroll_kernel(s);
  EngineBuildOptions opts;
  opts.x_max = 1.0;
  const VmmEngine e = build_engine(u, CrossbarConfig::defaults(27, 16), window_stream(image, s), opts);
  ConvTrace trace;
  ConvExecOptions copts;
  copts.record = true;
  const FeatureMap got = conv_execute(e, image, s, copts, &trace);
  const FeatureMap want = testing::naive_conv(image, s.weights, 1, 1);
  Matrix ideal(1024, 16), actual(1024, 16);
  ideal.data() = want.data;
  actual.data() = got.data;
  EXPECT_LT(summarize_errors(actual, ideal).mean, 0.01);
}

TEST(IterationCount, ResNet20Table) {
  const IterationCount ic = iteration_count(resnet20_geometry());
  EXPECT_EQ(ic.total, 9089u);
  const std::vector<MappingTableRow> want = {
      {"Conv0", "3*3*3*16", "27*16", 1024},     {"Conv1-2", "3*3*16*16", "144*16", 1024},
      {"Sum1", "1*1*16*16", "16*16", 1024},     {"Conv3-6", "3*3*16*16", "144*16", 1024},
      {"Sum2", "1*1*16*32", "16*32", 256},      {"Conv7", "3*3*16*32", "144*32", 256},
      {"Conv8-12", "3*3*32*32", "288*32", 256}, {"Sum3", "1*1*32*64", "32*64", 64},
      {"Conv13", "3*3*32*64", "288*64", 64},    {"Conv14-18", "3*3*64*64", "576*64", 64},
      {"FC", "1*1*64*10", "64*10", 1}};
  const std::vector<MappingTableRow> got = resnet20_mapping_table();
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    EXPECT_EQ(got[k].name, want[k].name);
    EXPECT_EQ(got[k].kernel, want[k].kernel);
    EXPECT_EQ(got[k].crossbar, want[k].crossbar);
    EXPECT_EQ(got[k].iterations, want[k].iterations);
  }
  for (const LayerIterations& l : ic.layers)
    if (l.name == "Conv16") EXPECT_EQ(l.iterations, 64u);
}

TEST(IterationCount, SingleOneByOne) {
  LayerGeometry g{"only", make_spec(1, 1, 1, 1, 1, 0, 1), 1, 1, false};
  const IterationCount ic = iteration_count({g});
  EXPECT_EQ(ic.total, 1u);
  EXPECT_EQ(ic.layers.at(0).crossbar_rows, 1u);
}

TEST(IterationCount, DenseMappingFillsTheCrossbar) {
  for (const LayerGeometry& g : resnet20_geometry()) {
    ConvSpec s = g.spec;
    s.weights = gen_kernel(KernelType::Gaussian, s.kernel_h, s.kernel_w, s.in_channels,
                           s.out_channels, 3);
    const Matrix u = unroll_kernel(s);
    EXPECT_EQ(u.rows(), s.unrolled_rows());
    EXPECT_EQ(u.cols(), s.out_channels);
    for (std::size_t j = 0; j < u.cols(); ++j) {
      bool any = false;
      for (std::size_t i = 0; i < u.rows(); ++i) any = any || u(i, j) != 0.0;
      EXPECT_TRUE(any) << g.name;
    }
  }
}

}  // namespace
}  // namespace xbar
