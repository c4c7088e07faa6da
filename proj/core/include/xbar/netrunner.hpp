#pragma once

// Whole-network inference with crossbar conv/fc layers and exact digital ops.
//
// Error accounting at a tapped weight layer, per output element:
//   per-layer:   analog output vs the exact layer applied to the same
//                (analog-produced) input;
//   end-to-end:  analog output vs the all-software run.
// Relative errors use the per-column (per-kernel) output range of the
// reference over every image in the run. Columns whose reference range is
// zero carry no scale and are skipped (counted in flat_columns).

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xbar/circuit_sim.hpp"
#include "xbar/conv_mapper.hpp"
#include "xbar/metrics.hpp"
#include "xbar/network_model.hpp"
#include "xbar/vmm_core.hpp"

namespace xbar {

struct NetSettings {
  CrossbarConfig physical = CrossbarConfig::defaults(1, 1);  // rows/cols set per layer
  EngineBuildOptions build;
  std::size_t calibration_images = 10;
  std::size_t max_engine_samples = 512;  // window vectors handed to build_engine per layer
  double x_max_headroom = 1.25;          // engine x_max over the largest calibration input
  std::size_t threads = 0;
  std::uint64_t seed = 0;
};

using EngineSet = std::map<std::string, VmmEngine>;

/// One engine per weight layer, each built from the layer's input windows
/// produced by pushing `calibration` images through the already-built
/// analog layers before it.
EngineSet build_network_engines(const NetworkModel& model,
                                const std::vector<FeatureMap>& calibration,
                                const NetSettings& settings);

enum class RunMode { Software, Analog };

/// Output of one tapped layer for one image, windows x columns.
struct LayerTrace {
  std::string layer;
  Matrix ideal;      // exact layer on the analog input
  Matrix actual;     // analog output
  Matrix reference;  // all-software output
};

struct InferenceResult {
  Vector probabilities;
  std::size_t predicted = 0;
  std::vector<LayerTrace> traces;  // model order
  ConvExecStats stats;
};

/// Software mode ignores `engines` and `taps`. In analog mode `engines` must
/// cover every weight layer.
InferenceResult run_inference(const NetworkModel& model, const EngineSet* engines,
                              const FeatureMap& image, RunMode mode,
                              const std::set<std::string>& taps = {}, std::size_t threads = 0);

struct ErrorRow {
  std::string layer;
  std::size_t window = 0;  // output position, counted across images in run order
  std::size_t column = 0;
  double ideal = 0.0;
  double actual = 0.0;
  double rel_err = 0.0;
};

struct LayerErrorSummary {
  std::string layer;
  RelErrorStats per_layer;
  RelErrorStats end_to_end;
  std::size_t flat_columns = 0;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;              // per-layer view
  std::vector<LayerErrorSummary> layers;   // tap order
};

/// Merges traces of several images (outer index = image).
ErrorReport make_error_report(const std::vector<std::vector<LayerTrace>>& traces);

struct SweepRow {
  std::string bits;              // "none" or the width
  std::size_t images = 0;
  std::optional<double> accuracy;  // against labels, when given
  double agreement = 0.0;        // predicted class equals software's
  double final_mean = 0.0;       // end-to-end, last weight layer
  double final_worst = 0.0;
  ClipCounter dac;
  ClipCounter adc;
  std::size_t input_clips = 0;
  ErrorReport report;
};

struct SweepResult {
  std::optional<double> software_accuracy;
  std::string final_layer;
  std::vector<SweepRow> rows;
};

/// For each bit setting (applied to both DAC and ADC), rebuilds the
/// engines and runs every image in analog mode. `taps` always gains the
/// last weight layer. `labels` is empty or one label per image.
SweepResult quantization_sweep(const NetworkModel& model, const std::vector<FeatureMap>& images,
                               const std::vector<int>& labels,
                               const std::vector<std::optional<int>>& bit_list,
                               const std::set<std::string>& taps, const NetSettings& settings);

/// "all" -> every weight layer; otherwise the comma list, validated.
std::set<std::string> parse_taps(const NetworkModel& model, const std::string& text);

}  // namespace xbar
