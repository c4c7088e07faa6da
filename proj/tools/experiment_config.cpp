#include "experiment_config.hpp"

#include <cmath>

#include "xbar/errors.hpp"
#include "xbar/file_io.hpp"
#include "xbar/json_conv.hpp"

namespace xbar::cli {

namespace {

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  crossbar.validate();
  if (amplitudes.empty()) throw ValidationError("conversion.amplitudes must not be empty");
  for (double a : amplitudes)
    if (!(a > 0.0 && a <= 1.0))
      throw ValidationError("conversion.amplitudes entries must be in (0, 1]");
  if (convert.max_iterations < 1) throw ValidationError("conversion.max_iterations must be >= 1");
  if (!(convert.tolerance > 0.0)) throw ValidationError("conversion.tolerance must be positive");
  if (range_refine_halvings < 0 || range_refine_halvings > 30)
    throw ValidationError("conversion.range_refine_halvings must be in [0, 30]");
  if (cali_samples < 2) throw ValidationError("calibration.samples must be >= 2");
  if (calibration_images < 1) throw ValidationError("network.calibration_images must be >= 1");
  if (max_engine_samples < 2) throw ValidationError("network.max_engine_samples must be >= 2");
  if (!(x_max_headroom >= 1.0)) throw ValidationError("network.x_max_headroom must be >= 1");
}

EngineBuildOptions ExperimentConfig::build_options() const {
  EngineBuildOptions o;
  o.range_backoff = range_backoff;
  o.range_refine_halvings = range_refine_halvings;
  o.cali_source = cali_source;
  o.cali_samples = cali_samples;
  o.dac_bits = dac_bits;
  o.adc_bits = adc_bits;
  o.amplitudes = amplitudes;
  o.convert = convert;
  o.seed = seed;
  return o;
}

NetSettings ExperimentConfig::net_settings() const {
  NetSettings s;
  s.physical = crossbar;
  s.build = build_options();
  s.calibration_images = calibration_images;
  s.max_engine_samples = max_engine_samples;
  s.x_max_headroom = x_max_headroom;
  s.threads = threads;
  s.seed = seed;
  return s;
}

void apply_config_json(ExperimentConfig& cfg, const std::string& text, const std::string& origin) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError(origin + ": top level must be an object");
  reject_unknown_keys(j, {"crossbar", "quantization", "conversion", "calibration", "network",
                          "seed", "threads"},
                      "config");
  if (j.contains("crossbar")) {
    const Json& c = j.at("crossbar");
    apply_json(cfg.crossbar, c);
    cfg.rows_set = cfg.rows_set || c.contains("rows");
    cfg.cols_set = cfg.cols_set || c.contains("cols");
  }
  if (j.contains("quantization")) {
    const Json& q = j.at("quantization");
    reject_unknown_keys(q, {"dac_bits", "adc_bits"}, "quantization");
    if (q.contains("dac_bits")) cfg.dac_bits = bits_from_json(q.at("dac_bits"));
    if (q.contains("adc_bits")) cfg.adc_bits = bits_from_json(q.at("adc_bits"));
  }
  if (j.contains("conversion")) {
    const Json& c = j.at("conversion");
    reject_unknown_keys(c, {"amplitudes", "max_iterations", "tolerance", "range_backoff",
                         "range_refine_halvings"},
                        "conversion");
    read(c, "amplitudes", cfg.amplitudes, "conversion");
    read(c, "max_iterations", cfg.convert.max_iterations, "conversion");
    read(c, "tolerance", cfg.convert.tolerance, "conversion");
    read(c, "range_backoff", cfg.range_backoff, "conversion");
    read(c, "range_refine_halvings", cfg.range_refine_halvings, "conversion");
  }
  if (j.contains("calibration")) {
    const Json& c = j.at("calibration");
    reject_unknown_keys(c, {"samples", "source"}, "calibration");
    read(c, "samples", cfg.cali_samples, "calibration");
    if (c.contains("source")) {
      const std::string s = c.at("source").get<std::string>();
      if (s == "shuffled") cfg.cali_source = CalibrationSource::ShuffledInput;
      else if (s == "random") cfg.cali_source = CalibrationSource::RandomSignal;
      else throw ValidationError("calibration.source must be \"shuffled\" or \"random\"");
    }
  }
  if (j.contains("network")) {
    const Json& n = j.at("network");
    reject_unknown_keys(n, {"calibration_images", "max_engine_samples", "x_max_headroom"},
                        "network");
    read(n, "calibration_images", cfg.calibration_images, "network");
    read(n, "max_engine_samples", cfg.max_engine_samples, "network");
    read(n, "x_max_headroom", cfg.x_max_headroom, "network");
  }
  read(j, "seed", cfg.seed, "config");
  read(j, "threads", cfg.threads, "config");
}

ExperimentConfig load_experiment_config(const std::string& path) {
  ExperimentConfig cfg;
  apply_config_json(cfg, read_file(path), path);
  cfg.validate();
  return cfg;
}

}  // namespace xbar::cli
