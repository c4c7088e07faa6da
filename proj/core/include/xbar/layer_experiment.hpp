#pragma once

// Single-layer accuracy study on synthetic kernels and inputs: the same
// weight matrix and input stream run through several engine variants.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xbar/circuit_sim.hpp"
#include "xbar/metrics.hpp"
#include "xbar/vmm_core.hpp"

namespace xbar {

enum class LayerVariant {
  Direct,        // no conversion, nominal scale
  Original,      // full-scale flat conversion signal, no calibration
  Uncalibrated,  // optimized conversion, no calibration
  Improved,      // optimized conversion + calibration
};

const char* to_string(LayerVariant v);
LayerVariant layer_variant_from_string(const std::string& text);

struct LayerExpOptions {
  KernelType kernel_type = KernelType::Gaussian;
  KernelOptions kernel;
  std::size_t rows = 144;
  std::size_t cols = 16;
  double sparsity = 0.5;
  std::size_t samples = 200;  // evaluation input vectors
  std::uint64_t seed = 1;
  CrossbarConfig physical = CrossbarConfig::defaults(1, 1);  // rows/cols overridden
  std::optional<int> dac_bits;
  std::optional<int> adc_bits;
  std::size_t cali_samples = 10;
  std::vector<double> amplitudes = default_signal_amplitudes();
  int range_refine_halvings = 8;
  bool amplitude_sweep = false;  // add one calibrated variant per amplitude
  std::vector<LayerVariant> variants = {LayerVariant::Direct, LayerVariant::Original,
                                        LayerVariant::Uncalibrated, LayerVariant::Improved};
  std::size_t threads = 0;
};

struct VariantResult {
  std::string variant;  // variant name, or "amplitude" for sweep rows
  double amplitude = 0.0;  // chosen/forced conversion amplitude (0 for direct)
  double range_scale = 1.0;
  bool converged = true;
  RelErrorStats stats;
};

struct LayerExpResult {
  double input_sparsity = 0.0;  // measured on the generated inputs
  std::vector<VariantResult> variants;
};

LayerExpResult run_layer_experiment(const LayerExpOptions& options);

}  // namespace xbar
