#pragma once

// Accuracy metrics and the synthetic workloads used by the layer
// experiments.
//
// relative error = |actual - ideal| / output_range, where output_range is the
// spread (max - min) of the ideal outputs of one kernel (crossbar column)
// over the evaluation set. bit accuracy = log2(1 / relative error + 1).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xbar/matrix.hpp"
#include "xbar/tensor.hpp"

namespace xbar {

struct RelErrorStats {
  double mean = 0.0;
  double worst = 0.0;
  std::size_t count = 0;
  std::vector<double> bin_edges;       // size = histogram.size() + 1
  std::vector<std::size_t> histogram;  // counts per [edge_k, edge_k+1)
  Vector output_range;                 // per column range used
};

/// Fixed histogram edges shared by all reports (last edge is +inf).
const std::vector<double>& rel_error_bin_edges();

double relative_error(double actual, double ideal, double output_range);

/// log2(1/rel_err + 1). Returns +inf for rel_err == 0; use
/// bit_accuracy_label for tables.
double bit_accuracy(double rel_err);
/// Bit accuracy as text, "exact" when rel_err == 0.
std::string bit_accuracy_label(double rel_err);

/// max - min of each column of `ideal` (samples x columns).
Vector output_ranges(const Matrix& ideal);

/// Relative errors of every entry, using per-column ranges of `ideal`.
Matrix relative_errors(const Matrix& actual, const Matrix& ideal);
Matrix relative_errors(const Matrix& actual, const Matrix& ideal, std::span<const double> ranges);

RelErrorStats summarize_errors(const Matrix& actual, const Matrix& ideal);
/// Builds stats (mean, worst, histogram) from already computed relative errors.
RelErrorStats summarize_relative(std::span<const double> rel_errors);

/// Fraction of exact zeros (0 for an empty range).
double sparsity(std::span<const double> values);

enum class KernelType { Gaussian = 1, DeadZone = 2, Ternary = 3 };

struct KernelOptions {
  double sigma = 1.0;
  double dead_zone = 0.2;            // type 2: |w| < dead_zone * sigma is redrawn
  double ternary_zero_fraction = 0.3;  // type 3
};

KernelType kernel_type_from_int(int type);

/// Seeded kernel of the given shape (kh, kw, in_c, out_c).
Kernel4 gen_kernel(KernelType type, std::size_t kernel_h, std::size_t kernel_w,
                   std::size_t in_channels, std::size_t out_channels, std::uint64_t seed,
                   const KernelOptions& options = {});

/// Seeded rows x cols weight matrix drawn like gen_kernel.
Matrix gen_weight_matrix(KernelType type, std::size_t rows, std::size_t cols,
                         std::uint64_t seed, const KernelOptions& options = {});

/// Non-negative uniform values in (0, 1] with exactly round(sparsity * n)
/// zeros at seeded-random positions.
FeatureMap gen_input(std::size_t height, std::size_t width, std::size_t channels,
                     double sparsity, std::uint64_t seed);

/// `count` input vectors of length `length`, each with exactly
/// round(sparsity * length) zeros.
Matrix gen_input_vectors(std::size_t count, std::size_t length, double sparsity,
                         std::uint64_t seed);

}  // namespace xbar
