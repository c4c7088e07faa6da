#include "xbar/vmm_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xbar/errors.hpp"
#include "xbar/metrics.hpp"
#include "xbar/parallel.hpp"
#include "xbar/random.hpp"

namespace xbar {

MappedWeights map_weights(const Matrix& a, const CrossbarConfig& config, double x_max) {
  config.validate();
  require(!a.empty(), "map_weights: weight matrix is empty");
  require(a.rows() <= config.rows && a.cols() <= config.cols,
          "map_weights: weight matrix " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " does not fit crossbar " +
              std::to_string(config.rows) + "x" + std::to_string(config.cols));
  require(x_max > 0.0 && std::isfinite(x_max), "map_weights: x_max must be positive");
  for (double w : a.data()) require(std::isfinite(w), "map_weights: non-finite weight");

  const auto [lo, hi] = std::minmax_element(a.data().begin(), a.data().end());
  const double shift = std::max(0.0, -*lo);
  const double span = *hi + shift;
  const double g_span = config.g_max - config.g_min;
  const double beta = span > 0.0 ? g_span / span : g_span;

  MappedWeights out{ConductanceMatrix(config.rows, config.cols, config.g_min), {}};
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      out.g(i, j) = std::clamp(config.g_min + beta * (a(i, j) + shift), config.g_min, config.g_max);

  out.mapping.shift = shift;
  out.mapping.beta = beta;
  out.mapping.alpha = config.v_sense_max / x_max;
  out.mapping.x_max = x_max;
  out.mapping.range_scale = 1.0;
  out.mapping.weight_rows = a.rows();
  out.mapping.weight_cols = a.cols();
  return out;
}

ConductanceMatrix compress_range(const ConductanceMatrix& g, double g_min, double scale) {
  require(scale > 0.0 && scale <= 1.0, "compress_range: scale must be in (0, 1]");
  ConductanceMatrix out = g;
  if (scale == 1.0) return out;
  for (double& v : out.g.data()) v = g_min + scale * (v - g_min);
  return out;
}

double ConversionResult::max_column_error() const {
  return column_error.empty() ? 0.0 : *std::max_element(column_error.begin(), column_error.end());
}

ConversionResult convert(const CrossbarConfig& config, const ConductanceMatrix& g_target,
                         std::span<const double> v_conv, const ConvertOptions& options) {
  config.validate();
  g_target.check_against(config);
  require(v_conv.size() == config.rows, "convert: conversion signal length mismatch");
  for (double v : v_conv)
    require(v > 0.0 && v <= config.v_sense_max, "convert: signal entries must be in (0, v_sense_max]");
  require(options.max_iterations >= 1, "convert: max_iterations must be >= 1");

  const std::size_t m = config.rows;
  const std::size_t n = config.cols;
  const Vector targets = ideal_vmm(v_conv, g_target);

  ConversionResult result;
  result.g = g_target;
  result.column_error.assign(n, 0.0);
  CrossbarSolver solver(config, result.g);

  for (int it = 1;; ++it) {
    const NodeSolution sol = solver.solve(v_conv);
    for (std::size_t j = 0; j < n; ++j)
      result.column_error[j] = std::abs(sol.i_out[j] - targets[j]) / targets[j];
    result.iterations = it;
    if (result.max_column_error() <= options.tolerance) {
      result.converged = true;
      break;
    }
    if (it >= options.max_iterations) break;

    result.clamped_high = 0;
    result.clamped_low = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double& g = result.g(i, j);
        const double i_cell = config.cell_conductance(g) * (sol.v_top(i, j) - sol.v_bot(i, j));
        if (!(i_cell > 0.0)) continue;
        const double proposed = g * (v_conv[i] * g_target(i, j)) / i_cell;
        if (proposed > config.g_max) {
          g = config.g_max;
          ++result.clamped_high;
        } else if (proposed < config.g_min) {
          g = config.g_min;
          ++result.clamped_low;
        } else {
          g = proposed;
        }
      }
    if (options.abort_on_saturation && result.over_range()) {
      result.aborted = true;
      break;
    }
    solver.update(result.g);
  }
  return result;
}

CalibrationParams nominal_calibration(const WeightMapping& mapping) {
  CalibrationParams p;
  p.gain.assign(mapping.weight_cols, 1.0 / (mapping.alpha * mapping.effective_beta()));
  p.offset.assign(mapping.weight_cols, 0.0);
  p.sample_count = 0;
  return p;
}

VmmEngine::VmmEngine(CrossbarConfig config, ConductanceMatrix g_target,
                     ConductanceMatrix g_converted, WeightMapping mapping, Vector v_conv,
                     CalibrationParams cali, DacSpec dac, AdcSpec adc)
    : config_(std::move(config)),
      g_target_(std::move(g_target)),
      g_converted_(std::move(g_converted)),
      mapping_(mapping),
      v_conv_(std::move(v_conv)),
      cali_(std::move(cali)),
      dac_(dac),
      adc_(adc) {
  config_.validate();
  g_target_.check_against(config_);
  g_converted_.check_against(config_);
  require(mapping_.weight_rows >= 1 && mapping_.weight_rows <= config_.rows &&
              mapping_.weight_cols >= 1 && mapping_.weight_cols <= config_.cols,
          "VmmEngine: mapping dimensions inconsistent with crossbar");
  require(v_conv_.empty() || v_conv_.size() == config_.rows,
          "VmmEngine: conversion signal length mismatch");
  require(cali_.gain.size() == mapping_.weight_cols && cali_.offset.size() == mapping_.weight_cols,
          "VmmEngine: calibration vector length mismatch");
  for (double g : cali_.gain)
    require(std::isfinite(g) && g != 0.0, "VmmEngine: calibration gain must be finite and nonzero");
  dac_.validate();
  adc_.validate();
  solver_ = std::make_shared<const CrossbarSolver>(config_, g_converted_);
}

VmmEngine VmmEngine::with_calibration(CalibrationParams cali) const {
  require(cali.gain.size() == output_size() && cali.offset.size() == output_size(),
          "with_calibration: vector length mismatch");
  VmmEngine copy = *this;
  copy.cali_ = std::move(cali);
  return copy;
}

VmmEngine VmmEngine::with_adc(AdcSpec adc) const {
  adc.validate();
  VmmEngine copy = *this;
  copy.adc_ = adc;
  return copy;
}

void VmmEngine::check_input(std::span<const double> x) const {
  require(x.size() == mapping_.weight_rows,
          "vmm_execute: input length " + std::to_string(x.size()) + " != " +
              std::to_string(mapping_.weight_rows));
  const double limit = mapping_.x_max * (1.0 + 1e-12);
  for (double v : x)
    require(std::isfinite(v) && v >= 0.0 && v <= limit,
            "vmm_execute: input " + std::to_string(v) + " outside [0, x_max]");
}

Vector VmmEngine::drive_voltages(std::span<const double> x, ClipCounter* dac_clips) const {
  Vector v(config_.rows, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double raw = std::min(mapping_.alpha * x[i], config_.v_sense_max);
    const Quantized q = dac_quantize(raw, dac_);
    if (dac_clips) dac_clips->add(q);
    v[i] = q.value;
  }
  return v;
}

Vector VmmEngine::analog_currents(std::span<const double> x, ClipCounter* dac_clips) const {
  check_input(x);
  const Vector v = drive_voltages(x, dac_clips);
  Vector i = solver_->output_currents(v);
  i.resize(mapping_.weight_cols);
  return i;
}

Vector VmmEngine::currents(std::span<const double> x, ClipCounter* dac_clips,
                           ClipCounter* adc_clips) const {
  Vector i = analog_currents(x, dac_clips);
  for (double& v : i) {
    const Quantized q = adc_quantize(v, adc_);
    if (adc_clips) adc_clips->add(q);
    v = q.value;
  }
  return i;
}

Vector VmmEngine::execute(std::span<const double> x, ClipCounter* dac_clips,
                          ClipCounter* adc_clips) const {
  const Vector i = currents(x, dac_clips, adc_clips);
  double sum_x = 0.0;
  for (double v : x) sum_x += v;
  const double c_eff = mapping_.effective_shift(config_.g_min);
  Vector y(i.size());
  for (std::size_t j = 0; j < i.size(); ++j)
    y[j] = cali_.gain[j] * i[j] + cali_.offset[j] - c_eff * sum_x;
  return y;
}

Vector VmmEngine::ideal_shifted(std::span<const double> x) const {
  require(x.size() == mapping_.weight_rows, "ideal: input length mismatch");
  const double inv_beta = 1.0 / mapping_.effective_beta();
  Vector y(mapping_.weight_cols, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += xi * g_target_(i, j);
  }
  for (double& v : y) v *= inv_beta;
  return y;
}

Vector VmmEngine::ideal(std::span<const double> x) const {
  Vector y = ideal_shifted(x);
  double sum_x = 0.0;
  for (double v : x) sum_x += v;
  const double c_eff = mapping_.effective_shift(config_.g_min);
  for (double& v : y) v -= c_eff * sum_x;
  return y;
}

Matrix VmmEngine::execute_batch(const Matrix& x, std::size_t threads) const {
  require(x.cols() == input_size(), "execute_batch: input width mismatch");
  Matrix out(x.rows(), output_size());
  parallel_for(
      x.rows(),
      [&](std::size_t k) {
        const Vector y = execute(x.row(k));
        std::copy(y.begin(), y.end(), out.row(k).begin());
      },
      threads);
  return out;
}

Matrix VmmEngine::ideal_batch(const Matrix& x) const {
  require(x.cols() == input_size(), "ideal_batch: input width mismatch");
  Matrix out(x.rows(), output_size());
  for (std::size_t k = 0; k < x.rows(); ++k) {
    const Vector y = ideal(x.row(k));
    std::copy(y.begin(), y.end(), out.row(k).begin());
  }
  return out;
}

Vector vmm_execute(const VmmEngine& engine, std::span<const double> x) {
  return engine.execute(x);
}

CalibrationParams get_cali_para(const VmmEngine& engine, const Matrix& cali_samples) {
  require(cali_samples.rows() >= 2, "get_cali_para: at least 2 calibration samples required");
  require(cali_samples.cols() == engine.input_size(), "get_cali_para: sample width mismatch");
  const std::size_t n = engine.output_size();
  const std::size_t count = cali_samples.rows();

  Matrix measured(count, n);
  Matrix wanted(count, n);
  parallel_for(count, [&](std::size_t k) {
    const Vector i = engine.currents(cali_samples.row(k));
    const Vector y = engine.ideal_shifted(cali_samples.row(k));
    std::copy(i.begin(), i.end(), measured.row(k).begin());
    std::copy(y.begin(), y.end(), wanted.row(k).begin());
  });

  const CalibrationParams nominal = nominal_calibration(engine.mapping());
  CalibrationParams p;
  p.gain.resize(n);
  p.offset.resize(n);
  p.sample_count = count;
  for (std::size_t j = 0; j < n; ++j) {
    double mean_i = 0.0;
    double mean_y = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      mean_i += measured(k, j);
      mean_y += wanted(k, j);
    }
    mean_i /= double(count);
    mean_y /= double(count);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const double di = measured(k, j) - mean_i;
      sxx += di * di;
      sxy += di * (wanted(k, j) - mean_y);
    }
    const double scale = std::max(std::abs(mean_i), 1e-300);
    if (!(sxx > 1e-24 * scale * scale * double(count)) || !(sxy != 0.0)) {
      p.gain[j] = nominal.gain[j];
      p.offset[j] = mean_y - p.gain[j] * mean_i;
      p.degenerate_columns.push_back(j);
      continue;
    }
    p.gain[j] = sxy / sxx;
    p.offset[j] = mean_y - p.gain[j] * mean_i;
  }
  return p;
}

AdcSpec calibrate_adc_range(const VmmEngine& engine, const Matrix& sample_inputs,
                            std::optional<int> bits) {
  require(sample_inputs.rows() > 0, "calibrate_adc_range: empty sample set");
  Matrix currents(sample_inputs.rows(), engine.output_size());
  parallel_for(sample_inputs.rows(), [&](std::size_t k) {
    const Vector i = engine.analog_currents(sample_inputs.row(k));
    std::copy(i.begin(), i.end(), currents.row(k).begin());
  });
  return adc_range_from_currents(currents, bits);
}

const std::vector<double>& default_signal_amplitudes() {
  static const std::vector<double> amps = {1.0, 0.5, 0.2, 0.1, 0.05, 0.01, 0.001};
  return amps;
}

namespace {

struct Score {
  double mean = 0.0;
  double worst = 0.0;
};

// Mean/worst relative error over columns with a nonzero ideal range.
Score score_outputs(const Matrix& actual, const Matrix& ideal) {
  const Vector ranges = output_ranges(ideal);
  double sum = 0.0;
  double worst = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < ideal.rows(); ++k)
    for (std::size_t j = 0; j < ideal.cols(); ++j) {
      if (!(ranges[j] > 0.0)) continue;
      const double e = std::abs(actual(k, j) - ideal(k, j)) / ranges[j];
      sum += e;
      worst = std::max(worst, e);
      ++count;
    }
  return {count ? sum / double(count) : 0.0, worst};
}

Matrix select_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k)
    std::copy(x.row(idx[k]).begin(), x.row(idx[k]).end(), out.row(k).begin());
  return out;
}

Vector flat_signal(const CrossbarConfig& config, double amplitude) {
  return Vector(config.rows, amplitude * config.v_sense_max);
}

VmmEngine finish_engine(VmmEngine engine, const Matrix& adc_samples, std::optional<int> adc_bits,
                        const Matrix* cali_samples) {
  if (adc_bits) engine = engine.with_adc(calibrate_adc_range(engine, adc_samples, adc_bits));
  if (cali_samples && cali_samples->rows() >= 2)
    engine = engine.with_calibration(get_cali_para(engine, *cali_samples));
  return engine;
}

Score score_conversion(const CrossbarConfig& config, const ConductanceMatrix& g_target,
                       const ConductanceMatrix& g_converted, const WeightMapping& mapping,
                       const Vector& v_conv, const DacSpec& dac, std::optional<int> adc_bits,
                       const Matrix& sample_inputs, const Matrix& cali) {
  VmmEngine engine(config, g_target, g_converted, mapping, v_conv, nominal_calibration(mapping),
                   dac, AdcSpec{});
  engine = finish_engine(std::move(engine), sample_inputs, adc_bits, &cali);
  return score_outputs(engine.execute_batch(sample_inputs), engine.ideal_batch(sample_inputs));
}

bool improves(const Score& s, const Score& best, double tie_tolerance) {
  return s.mean < best.mean * (1.0 - tie_tolerance) - 1e-300;
}

}  // namespace

SignalChoice optimize_conversion_signal(const CrossbarConfig& config,
                                        const ConductanceMatrix& g_target,
                                        const WeightMapping& mapping,
                                        const Matrix& sample_inputs,
                                        const SignalSearchOptions& options) {
  require(sample_inputs.rows() > 0, "optimize_conversion_signal: empty sample set");
  require(!options.amplitudes.empty(), "optimize_conversion_signal: no candidate amplitudes");
  require(sample_inputs.cols() == mapping.weight_rows,
          "optimize_conversion_signal: sample width mismatch");

  std::vector<double> amps = options.amplitudes;
  std::sort(amps.begin(), amps.end(), std::greater<>());
  for (double a : amps)
    require(a > 0.0 && a <= 1.0, "optimize_conversion_signal: amplitudes must be in (0, 1]");

  Rng rng(options.seed);
  const auto cali_idx = rng.sample_indices(
      sample_inputs.rows(), std::min(options.cali_samples, sample_inputs.rows()));
  const Matrix cali = select_rows(sample_inputs, cali_idx);

  SignalChoice choice;
  Score best{};
  bool have_best = false;
  for (double amp : amps) {
    const Vector v = flat_signal(config, amp);
    ConversionResult conv = convert(config, g_target, v, options.convert);
    const Score s = score_conversion(config, g_target, conv.g, mapping, v, options.dac,
                                     options.adc_bits, sample_inputs, cali);
    choice.candidates.push_back({amp, s.mean, s.worst, conv.converged});

    const bool better = !have_best || improves(s, best, options.tie_tolerance);
    if (better) {
      best = s;
      have_best = true;
      choice.amplitude = amp;
      choice.v_conv = v;
      choice.conversion = std::move(conv);
    }
  }
  return choice;
}

RangeChoice refine_range_scale(const CrossbarConfig& config, const ConductanceMatrix& g_full,
                               const WeightMapping& mapping, std::span<const double> v_conv,
                               double start_scale, ConversionResult start,
                               const Matrix& sample_inputs, const SignalSearchOptions& options,
                               int max_halvings) {
  require(sample_inputs.rows() > 0, "refine_range_scale: empty sample set");
  require(start_scale > 0.0 && start_scale <= 1.0, "refine_range_scale: scale must be in (0, 1]");
  require(max_halvings >= 0, "refine_range_scale: negative halving count");
  const Vector v(v_conv.begin(), v_conv.end());

  Rng rng(options.seed);
  const auto cali_idx = rng.sample_indices(
      sample_inputs.rows(), std::min(options.cali_samples, sample_inputs.rows()));
  const Matrix cali = select_rows(sample_inputs, cali_idx);

  auto scaled = [&](double scale) {
    WeightMapping m = mapping;
    m.range_scale = scale;
    return m;
  };

  RangeChoice choice;
  choice.range_scale = start_scale;
  choice.g_target = compress_range(g_full, config.g_min, start_scale);
  choice.conversion = std::move(start);
  Score best = score_conversion(config, choice.g_target, choice.conversion.g, scaled(start_scale),
                                v, options.dac, options.adc_bits, sample_inputs, cali);
  choice.candidates.push_back({start_scale, best.mean, best.worst, choice.conversion.converged});

  double scale = start_scale;
  for (int h = 0; h < max_halvings; ++h) {
    scale *= 0.5;
    ConductanceMatrix target = compress_range(g_full, config.g_min, scale);
    ConversionResult conv = convert(config, target, v, options.convert);
    const Score s = score_conversion(config, target, conv.g, scaled(scale), v, options.dac,
                                     options.adc_bits, sample_inputs, cali);
    choice.candidates.push_back({scale, s.mean, s.worst, conv.converged});
    if (!conv.converged || conv.over_range() || !improves(s, best, options.tie_tolerance)) break;
    best = s;
    choice.range_scale = scale;
    choice.g_target = std::move(target);
    choice.conversion = std::move(conv);
  }
  return choice;
}

RangeBackoff select_range_scale(const CrossbarConfig& config, const ConductanceMatrix& g_target,
                                std::span<const double> v_conv, const ConvertOptions& options,
                                int max_halvings) {
  ConvertOptions probe = options;
  probe.abort_on_saturation = true;
  RangeBackoff out;
  double scale = 1.0;
  for (int h = 0; h <= max_halvings; ++h, scale *= 0.5) {
    ++out.attempts;
    const ConversionResult r = convert(config, compress_range(g_target, config.g_min, scale), v_conv, probe);
    if (r.converged && !r.over_range()) {
      out.range_scale = scale;
      out.feasible = true;
      return out;
    }
  }
  out.range_scale = scale * 2.0;
  return out;
}

VmmEngine build_engine(const Matrix& a, const CrossbarConfig& config, const Matrix& input_samples,
                       const EngineBuildOptions& options, EngineBuildReport* report) {
  require(input_samples.rows() > 0, "build_engine: no input samples");
  require(input_samples.cols() == a.rows(), "build_engine: input width must equal weight rows");

  double x_max = 0.0;
  if (options.x_max) {
    x_max = *options.x_max;
  } else {
    for (double v : input_samples.data()) x_max = std::max(x_max, v);
    if (!(x_max > 0.0)) x_max = 1.0;
  }

  MappedWeights mapped = map_weights(a, config, x_max);
  WeightMapping mapping = mapped.mapping;
  ConductanceMatrix target = std::move(mapped.g);
  const DacSpec dac{options.dac_bits, 0.0, config.v_sense_max};

  EngineBuildReport local;
  EngineBuildReport& rep = report ? *report : local;
  rep = EngineBuildReport{};

  Vector v_conv = flat_signal(config, 1.0);
  const ConductanceMatrix full = target;
  ConductanceMatrix converted = target;
  if (options.conversion != ConversionMode::None) {
    if (options.range_backoff) {
      const RangeBackoff rb = select_range_scale(config, target, v_conv, options.convert);
      mapping.range_scale = rb.range_scale;
      rep.backoff_scale = rb.range_scale;
      rep.backoff_attempts = rb.attempts;
      target = compress_range(full, config.g_min, rb.range_scale);
    }
    ConversionResult conv;
    if (options.conversion == ConversionMode::Optimized) {
      SignalSearchOptions search;
      search.amplitudes = options.amplitudes;
      search.cali_samples = options.cali_samples;
      search.seed = derive_seed(options.seed, 11);
      search.convert = options.convert;
      search.dac = dac;
      search.adc_bits = options.adc_bits;
      SignalChoice choice = optimize_conversion_signal(config, target, mapping, input_samples, search);
      v_conv = choice.v_conv;
      rep.amplitude = choice.amplitude;
      rep.candidates = choice.candidates;
      conv = std::move(choice.conversion);
      if (options.range_refine_halvings > 0) {
        RangeChoice rc =
            refine_range_scale(config, full, mapping, v_conv, mapping.range_scale, std::move(conv),
                               input_samples, search, options.range_refine_halvings);
        mapping.range_scale = rc.range_scale;
        target = std::move(rc.g_target);
        conv = std::move(rc.conversion);
        rep.range_candidates = std::move(rc.candidates);
      }
    } else {
      rep.amplitude = 1.0;
      conv = convert(config, target, v_conv, options.convert);
    }
    rep.range_scale = mapping.range_scale;
    rep.conversion_iterations = conv.iterations;
    rep.conversion_converged = conv.converged;
    rep.conversion_error = conv.max_column_error();
    rep.clamped_devices = conv.clamped_high + conv.clamped_low;
    converted = std::move(conv.g);
  }

  VmmEngine engine(config, target, converted, mapping, v_conv, nominal_calibration(mapping), dac,
                   AdcSpec{});

  Rng rng(derive_seed(options.seed, 23));
  const std::size_t n = input_samples.rows();
  Matrix adc_samples;
  if (options.adc_bits) {
    const auto idx = rng.sample_indices(n, std::min(options.adc_range_samples, n));
    adc_samples = select_rows(input_samples, idx);
  }

  Matrix cali;
  if (options.calibrate) {
    const std::size_t count = std::min(options.cali_samples, n);
    if (options.cali_source == CalibrationSource::ShuffledInput) {
      rep.cali_indices = rng.sample_indices(n, count);
      cali = select_rows(input_samples, rep.cali_indices);
    } else {
      cali = Matrix(options.cali_samples, a.rows());
      for (double& v : cali.data()) v = x_max * rng.uniform();
    }
  }
  return finish_engine(std::move(engine), adc_samples, options.adc_bits,
                       options.calibrate ? &cali : nullptr);
}

}  // namespace xbar
