#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "xbar/digital_ops.hpp"
#include "xbar/errors.hpp"
#include "xbar/metrics.hpp"
#include "xbar/random.hpp"

namespace xbar {
namespace {

TEST(Metrics, RelativeErrorBasics) {
  EXPECT_EQ(relative_error(3.0, 3.0, 2.0), 0.0);
  EXPECT_EQ(relative_error(5.0, 3.0, 2.0), 1.0);
  EXPECT_THROW(relative_error(1.0, 0.0, 0.0), ContractViolation);
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const double a = rng.normal(), i = rng.normal(), r = rng.uniform(0.1, 3.0);
    const double s = rng.uniform(1e-3, 1e3);
    EXPECT_NEAR(relative_error(a * s, i * s, r * s), relative_error(a, i, r), 1e-12);
  }
}

TEST(Metrics, BitAccuracyValues) {
  EXPECT_NEAR(bit_accuracy(0.0025), std::log2(401.0), 1e-12);
  EXPECT_GE(bit_accuracy(0.0025), 8.6);
  EXPECT_LE(bit_accuracy(0.0025), 8.7);
  EXPECT_GE(bit_accuracy(0.012), 6.3);
  EXPECT_LE(bit_accuracy(0.012), 6.5);
  EXPECT_DOUBLE_EQ(bit_accuracy(1.0), 1.0);
  EXPECT_TRUE(std::isinf(bit_accuracy(0.0)));
  EXPECT_EQ(bit_accuracy_label(0.0), "exact");
  EXPECT_EQ(bit_accuracy_label(1.0), "1.000");
  for (int b = 4; b <= 20; ++b) EXPECT_NEAR(bit_accuracy(std::ldexp(1.0, -b)), b, 0.1);
  double prev = bit_accuracy(1e-9);
  for (double e = 2e-9; e < 10.0; e *= 1.7) {
    EXPECT_LT(bit_accuracy(e), prev);
    prev = bit_accuracy(e);
  }
}

TEST(Metrics, SummaryUsesPerColumnRanges) {
  Matrix ideal(3, 2);
  Matrix actual(3, 2);
  // column 0 range 4, column 1 range 1
  const double id[3][2] = {{0, 10}, {2, 10.5}, {4, 11}};
  const double ac[3][2] = {{1, 10}, {2, 10.5}, {4, 10}};
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 2; ++j) {
      ideal(k, j) = id[k][j];
      actual(k, j) = ac[k][j];
    }
  const RelErrorStats s = summarize_errors(actual, ideal);
  EXPECT_EQ(s.count, 6u);
  EXPECT_DOUBLE_EQ(s.mean, (0.25 + 1.0) / 6.0);
  EXPECT_DOUBLE_EQ(s.worst, 1.0);
  EXPECT_EQ(s.output_range, (Vector{4.0, 1.0}));
  EXPECT_EQ(std::accumulate(s.histogram.begin(), s.histogram.end(), std::size_t{0}), s.count);
  EXPECT_GE(s.worst, s.mean);
}

TEST(Metrics, HistogramBinning) {
  const std::vector<double> errs{0.0, 5e-5, 1e-4, 0.3, 2.0};
  const RelErrorStats s = summarize_relative(errs);
  ASSERT_EQ(s.bin_edges.size(), s.histogram.size() + 1);
  EXPECT_EQ(s.histogram.front(), 2u);  // [0, 1e-4)
  EXPECT_EQ(s.histogram[1], 1u);       // [1e-4, 2.5e-4)
  EXPECT_EQ(s.histogram.back(), 1u);   // [1, inf)
}

TEST(Metrics, Sparsity) {
  EXPECT_EQ(sparsity(std::vector<double>(10, 0.0)), 1.0);
  EXPECT_EQ(sparsity(std::vector<double>(10, 0.5)), 0.0);
  EXPECT_EQ(sparsity(std::vector<double>{}), 0.0);
  Rng rng(4);
  std::vector<double> v(20000);
  for (double& x : v) x = relu(rng.normal());
  EXPECT_NEAR(sparsity(v), 0.5, 0.02);
}

TEST(Metrics, GenInputHasExactZeroCount) {
  EXPECT_EQ(sparsity(gen_input(10, 10, 1, 0.57, 3).data), 0.57);
  const FeatureMap none = gen_input(4, 4, 3, 0.0, 3);
  EXPECT_EQ(sparsity(none.data), 0.0);
  for (double x : none.data) {
    EXPECT_GT(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  EXPECT_EQ(sparsity(gen_input(4, 4, 3, 1.0, 3).data), 1.0);
  EXPECT_EQ(gen_input(5, 5, 2, 0.3, 99), gen_input(5, 5, 2, 0.3, 99));
  EXPECT_NE(gen_input(5, 5, 2, 0.3, 99), gen_input(5, 5, 2, 0.3, 98));
  const Matrix xs = gen_input_vectors(7, 100, 0.25, 6);
  for (std::size_t k = 0; k < xs.rows(); ++k) EXPECT_EQ(sparsity(xs.row(k)), 0.25);
  EXPECT_THROW(gen_input(2, 2, 1, 1.5, 1), ContractViolation);
}

TEST(Metrics, KernelTypes) {
  const std::size_t n = 3 * 3 * 16 * 16;
  const Kernel4 g = gen_kernel(KernelType::Gaussian, 3, 3, 16, 16, 11);
  ASSERT_EQ(g.size(), n);
  const double mean = std::accumulate(g.data.begin(), g.data.end(), 0.0) / double(n);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(double(n)));

  const Kernel4 d = gen_kernel(KernelType::DeadZone, 3, 3, 16, 16, 11);
  for (double w : d.data) EXPECT_GE(std::abs(w), 0.2);

  KernelOptions dense;
  dense.ternary_zero_fraction = 0.0;
  for (double w : gen_kernel(KernelType::Ternary, 3, 3, 4, 4, 2, dense).data)
    EXPECT_TRUE(w == 1.0 || w == -1.0);
  const Kernel4 t = gen_kernel(KernelType::Ternary, 3, 3, 16, 16, 2);
  EXPECT_EQ(sparsity(t.data), std::round(0.3 * double(n)) / double(n));

  EXPECT_EQ(gen_kernel(KernelType::Gaussian, 1, 1, 3, 3, 5),
            gen_kernel(KernelType::Gaussian, 1, 1, 3, 3, 5));
  EXPECT_THROW(kernel_type_from_int(4), ValidationError);
  EXPECT_EQ(kernel_type_from_int(2), KernelType::DeadZone);
}

TEST(Random, StreamsAreFixed) {
  Rng a(42), b(42);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(7);
  const auto p = c.permutation(10);
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(sorted[k], k);
  Rng d(7);
  const auto idx = d.sample_indices(100, 10);
  EXPECT_EQ(idx.size(), 10u);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 10u);
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
}

}  // namespace
}  // namespace xbar
