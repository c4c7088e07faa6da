#include "xbar/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "xbar/errors.hpp"
#include "xbar/random.hpp"

namespace xbar {

const std::vector<double>& rel_error_bin_edges() {
  static const std::vector<double> edges = {
      0.0,    1e-4, 2.5e-4, 5e-4, 1e-3, 2.5e-3, 5e-3,
      1e-2,   2.5e-2, 5e-2, 1e-1, 2.5e-1, 1.0,
      std::numeric_limits<double>::infinity()};
  return edges;
}

double relative_error(double actual, double ideal, double output_range) {
  if (!(output_range > 0.0)) throw ContractViolation("relative_error: zero output range");
  return std::abs(actual - ideal) / output_range;
}

double bit_accuracy(double rel_err) {
  require(rel_err >= 0.0, "bit_accuracy: relative error must be non-negative");
  if (rel_err == 0.0) return std::numeric_limits<double>::infinity();
  return std::log2(1.0 / rel_err + 1.0);
}

std::string bit_accuracy_label(double rel_err) {
  const double bits = bit_accuracy(rel_err);
  if (std::isinf(bits)) return "exact";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, bits, std::chars_format::fixed, 3);
  return std::string(buf, res.ptr);
}

Vector output_ranges(const Matrix& ideal) {
  Vector ranges(ideal.cols(), 0.0);
  if (ideal.rows() == 0) return ranges;
  for (std::size_t j = 0; j < ideal.cols(); ++j) {
    double lo = ideal(0, j);
    double hi = lo;
    for (std::size_t k = 1; k < ideal.rows(); ++k) {
      lo = std::min(lo, ideal(k, j));
      hi = std::max(hi, ideal(k, j));
    }
    ranges[j] = hi - lo;
  }
  return ranges;
}

Matrix relative_errors(const Matrix& actual, const Matrix& ideal, std::span<const double> ranges) {
  require(actual.rows() == ideal.rows() && actual.cols() == ideal.cols(),
          "relative_errors: shape mismatch");
  require(ranges.size() == ideal.cols(), "relative_errors: one range per column required");
  Matrix rel(actual.rows(), actual.cols());
  for (std::size_t k = 0; k < actual.rows(); ++k)
    for (std::size_t j = 0; j < actual.cols(); ++j)
      rel(k, j) = relative_error(actual(k, j), ideal(k, j), ranges[j]);
  return rel;
}

Matrix relative_errors(const Matrix& actual, const Matrix& ideal) {
  const Vector ranges = output_ranges(ideal);
  return relative_errors(actual, ideal, ranges);
}

RelErrorStats summarize_relative(std::span<const double> rel_errors) {
  RelErrorStats stats;
  stats.bin_edges = rel_error_bin_edges();
  stats.histogram.assign(stats.bin_edges.size() - 1, 0);
  double sum = 0.0;
  for (double e : rel_errors) {
    sum += e;
    stats.worst = std::max(stats.worst, e);
    const auto it = std::upper_bound(stats.bin_edges.begin(), stats.bin_edges.end(), e);
    const auto bin = static_cast<std::size_t>(std::distance(stats.bin_edges.begin(), it)) - 1;
    ++stats.histogram[std::min(bin, stats.histogram.size() - 1)];
  }
  stats.count = rel_errors.size();
  stats.mean = stats.count ? sum / double(stats.count) : 0.0;
  return stats;
}

RelErrorStats summarize_errors(const Matrix& actual, const Matrix& ideal) {
  const Vector ranges = output_ranges(ideal);
  const Matrix rel = relative_errors(actual, ideal, ranges);
  RelErrorStats stats = summarize_relative(rel.data());
  stats.output_range = ranges;
  return stats;
}

double sparsity(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const auto zeros = std::count(values.begin(), values.end(), 0.0);
  return double(zeros) / double(values.size());
}

KernelType kernel_type_from_int(int type) {
  if (type < 1 || type > 3) throw ValidationError("kernel type must be 1, 2 or 3");
  return static_cast<KernelType>(type);
}

namespace {

void fill_weights(KernelType type, std::span<double> out, std::uint64_t seed,
                  const KernelOptions& options) {
  require(options.sigma > 0.0, "gen_kernel: sigma must be positive");
  Rng rng(seed);
  switch (type) {
    case KernelType::Gaussian:
      for (double& w : out) w = rng.normal(0.0, options.sigma);
      break;
    case KernelType::DeadZone: {
      const double cut = options.dead_zone * options.sigma;
      for (double& w : out) {
        do {
          w = rng.normal(0.0, options.sigma);
        } while (std::abs(w) < cut);
      }
      break;
    }
    case KernelType::Ternary: {
      require(options.ternary_zero_fraction >= 0.0 && options.ternary_zero_fraction <= 1.0,
              "gen_kernel: ternary zero fraction must be in [0, 1]");
      for (double& w : out) w = (rng.next_u64() >> 63) ? 1.0 : -1.0;
      const auto zeros = static_cast<std::size_t>(
          std::llround(options.ternary_zero_fraction * double(out.size())));
      for (std::size_t idx : rng.sample_indices(out.size(), zeros)) out[idx] = 0.0;
      break;
    }
  }
}

void fill_sparse_uniform(std::span<double> out, double sparsity, Rng& rng) {
  for (double& v : out) v = 1.0 - rng.uniform();  // (0, 1]
  const auto zeros = static_cast<std::size_t>(std::llround(sparsity * double(out.size())));
  for (std::size_t idx : rng.sample_indices(out.size(), zeros)) out[idx] = 0.0;
}

}  // namespace

Kernel4 gen_kernel(KernelType type, std::size_t kernel_h, std::size_t kernel_w,
                   std::size_t in_channels, std::size_t out_channels, std::uint64_t seed,
                   const KernelOptions& options) {
  require(kernel_h > 0 && kernel_w > 0 && in_channels > 0 && out_channels > 0,
          "gen_kernel: all dimensions must be positive");
  Kernel4 k(kernel_h, kernel_w, in_channels, out_channels);
  fill_weights(type, k.data, seed, options);
  return k;
}

Matrix gen_weight_matrix(KernelType type, std::size_t rows, std::size_t cols,
                         std::uint64_t seed, const KernelOptions& options) {
  require(rows > 0 && cols > 0, "gen_weight_matrix: dimensions must be positive");
  Matrix a(rows, cols);
  fill_weights(type, a.data(), seed, options);
  return a;
}

FeatureMap gen_input(std::size_t height, std::size_t width, std::size_t channels,
                     double sparsity_fraction, std::uint64_t seed) {
  require(sparsity_fraction >= 0.0 && sparsity_fraction <= 1.0,
          "gen_input: sparsity must be in [0, 1]");
  FeatureMap fm(height, width, channels);
  Rng rng(seed);
  fill_sparse_uniform(fm.data, sparsity_fraction, rng);
  return fm;
}

Matrix gen_input_vectors(std::size_t count, std::size_t length, double sparsity_fraction,
                         std::uint64_t seed) {
  require(sparsity_fraction >= 0.0 && sparsity_fraction <= 1.0,
          "gen_input_vectors: sparsity must be in [0, 1]");
  Matrix x(count, length);
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) fill_sparse_uniform(x.row(k), sparsity_fraction, rng);
  return x;
}

}  // namespace xbar
