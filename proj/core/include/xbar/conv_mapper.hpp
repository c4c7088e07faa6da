#pragma once

// Dense mapping of convolutions onto crossbars.
//
// Each output channel's 3-D kernel becomes one crossbar column. Rows are
// ordered channel-major, then kernel row, then kernel column:
//   row(ic, kh, kw) = (ic * kernel_h + kh) * kernel_w + kw
// window_stream emits the input patch of each output position in the same
// order, so window . column == convolution sum at that position.

#include <cstddef>
#include <string>
#include <vector>

#include "xbar/dac_adc.hpp"
#include "xbar/matrix.hpp"
#include "xbar/tensor.hpp"
#include "xbar/vmm_core.hpp"

namespace xbar {

struct ConvSpec {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Kernel4 weights;  // (kh, kw, in_c, out_c); may be empty for shape-only use

  std::size_t unrolled_rows() const { return kernel_h * kernel_w * in_channels; }
  /// floor((in + 2p - k) / s) + 1; throws ContractViolation if k > in + 2p.
  std::size_t output_h(std::size_t in_h) const;
  std::size_t output_w(std::size_t in_w) const;
  /// Checks positive sizes and, when present, the weight shape.
  void validate() const;
};

/// (kh*kw*in_c) x out_c matrix in the canonical row order.
Matrix unroll_kernel(const ConvSpec& spec);

/// Row index of weight (ic, kh, kw) in the unrolled matrix.
std::size_t unroll_row(const ConvSpec& spec, std::size_t ic, std::size_t kh, std::size_t kw);

/// One zero-padded window per output position, raster order; shape
/// (out_h*out_w) x unrolled_rows.
Matrix window_stream(const FeatureMap& fm, const ConvSpec& spec);

/// Direct nested-loop convolution in double precision.
FeatureMap conv_reference(const FeatureMap& fm, const ConvSpec& spec);

/// Windows x out_c matrices captured by conv_execute.
struct ConvTrace {
  Matrix ideal;   // window . unrolled kernel, exact
  Matrix actual;  // crossbar result
};

struct ConvExecOptions {
  std::size_t threads = 0;
  bool record = false;  // fill ConvTrace
};

struct ConvExecStats {
  ClipCounter dac;
  ClipCounter adc;
  std::size_t input_clips = 0;  // window entries clamped to x_max
};

/// Runs every window through the engine and reshapes to (out_h, out_w,
/// out_c). Window entries above the engine's x_max are clamped and counted.
FeatureMap conv_execute(const VmmEngine& engine, const FeatureMap& fm, const ConvSpec& spec,
                        const ConvExecOptions& options = {}, ConvTrace* trace = nullptr,
                        ConvExecStats* stats = nullptr);

/// Shape of one weight layer in a sequential iteration budget.
struct LayerGeometry {
  std::string name;
  ConvSpec spec;  // weights unused
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  bool parallel = false;  // runs alongside the main path (shortcut); excluded from total
};

struct LayerIterations {
  std::string name;
  std::size_t crossbar_rows = 0;
  std::size_t crossbar_cols = 0;
  std::size_t iterations = 0;  // output positions = crossbar invocations
  bool counted = true;
};

struct IterationCount {
  std::vector<LayerIterations> layers;
  std::size_t total = 0;
};

IterationCount iteration_count(const std::vector<LayerGeometry>& layers);

}  // namespace xbar
