#pragma once

// Experiment configuration shared by all subcommands: a JSON file
// (docs/config.schema.json) overlaid by command-line flags.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xbar/circuit_sim.hpp"
#include "xbar/netrunner.hpp"
#include "xbar/vmm_core.hpp"

namespace xbar::cli {

struct ExperimentConfig {
  CrossbarConfig crossbar = CrossbarConfig::defaults(1, 1);
  bool rows_set = false;  // crossbar.rows / cols given explicitly
  bool cols_set = false;

  std::optional<int> dac_bits;
  std::optional<int> adc_bits;

  std::vector<double> amplitudes = default_signal_amplitudes();
  ConvertOptions convert;
  bool range_backoff = true;
  int range_refine_halvings = 8;

  std::size_t cali_samples = 10;
  CalibrationSource cali_source = CalibrationSource::ShuffledInput;

  std::size_t calibration_images = 10;
  std::size_t max_engine_samples = 512;
  double x_max_headroom = 1.25;

  std::uint64_t seed = 1;
  std::size_t threads = 0;

  /// Throws ValidationError.
  void validate() const;

  EngineBuildOptions build_options() const;
  NetSettings net_settings() const;
};

/// Reads and validates a config file. Unknown keys are errors.
ExperimentConfig load_experiment_config(const std::string& path);
void apply_config_json(ExperimentConfig& cfg, const std::string& text, const std::string& origin);

}  // namespace xbar::cli
