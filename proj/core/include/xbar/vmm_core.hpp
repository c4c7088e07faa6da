#pragma once

// Weight matrix -> calibrated crossbar computing engine.
//
// Mapping: c = max(0, -min A) shifts the weights non-negative and
// g = g_min + beta * (a + c). Because every device carries at least g_min,
// the crossbar really computes x^T (A + c_eff) * alpha * beta with
// c_eff = c + g_min / beta; the digital side recovers
// y = x^T A = y_shifted - c_eff * sum(x).
//
// Build flow: map, (optionally) back off the conductance range until the
// conversion fits inside [g_min, g_max], pick the conversion-signal
// amplitude, narrow the range further while the measured error drops,
// convert, size the ADC, then fit per-column gain/offset on a handful of
// real inputs.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xbar/circuit_sim.hpp"
#include "xbar/dac_adc.hpp"
#include "xbar/matrix.hpp"

namespace xbar {

struct WeightMapping {
  double shift = 0.0;        // c
  double alpha = 1.0;        // volts per input unit
  double beta = 1.0;         // siemens per weight unit, full-range mapping
  double x_max = 1.0;        // largest input value the engine accepts
  double range_scale = 1.0;  // conversion target = g_min + range_scale * (g - g_min)
  std::size_t weight_rows = 0;
  std::size_t weight_cols = 0;

  double effective_beta() const { return range_scale * beta; }
  /// Shift removed digitally, including the g_min floor.
  double effective_shift(double g_min) const { return shift + g_min / effective_beta(); }

  bool operator==(const WeightMapping&) const = default;
};

struct MappedWeights {
  ConductanceMatrix g;
  WeightMapping mapping;
};

/// Direct (full-range) mapping of A onto the crossbar. Positions outside A
/// are set to g_min.
MappedWeights map_weights(const Matrix& a, const CrossbarConfig& config, double x_max);

/// g_min + scale * (g - g_min), entry-wise.
ConductanceMatrix compress_range(const ConductanceMatrix& g, double g_min, double scale);

struct ConvertOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;        // per-column relative current error
  bool abort_on_saturation = false;
};

struct ConversionResult {
  ConductanceMatrix g;
  int iterations = 0;
  bool converged = false;
  Vector column_error;             // relative, per column, at the returned g
  std::size_t clamped_high = 0;    // devices held at g_max by the last update
  std::size_t clamped_low = 0;     // devices held at g_min by the last update
  bool aborted = false;

  double max_column_error() const;
  bool over_range() const { return clamped_high > 0 || clamped_low > 0; }
};

/// Finds G' with CrossbarSim(v_conv, G') ~= v_conv^T g_target by the per-cell
/// multiplicative fixed point g' <- clamp(g' * i_target / i_cell).
/// Non-convergence is reported in the result, not thrown.
ConversionResult convert(const CrossbarConfig& config, const ConductanceMatrix& g_target,
                         std::span<const double> v_conv, const ConvertOptions& options = {});

struct CalibrationParams {
  Vector gain;    // output units per ampere
  Vector offset;  // output units
  std::size_t sample_count = 0;
  std::vector<std::size_t> degenerate_columns;

  bool operator==(const CalibrationParams&) const = default;
};

/// gain = 1 / (alpha * effective beta), offset = 0.
CalibrationParams nominal_calibration(const WeightMapping& mapping);

/// An immutable, ready-to-run crossbar VMM. Cheap to copy; the factorized
/// network is shared.
class VmmEngine {
 public:
  VmmEngine(CrossbarConfig config, ConductanceMatrix g_target, ConductanceMatrix g_converted,
            WeightMapping mapping, Vector v_conv, CalibrationParams cali, DacSpec dac,
            AdcSpec adc);

  const CrossbarConfig& config() const noexcept { return config_; }
  const ConductanceMatrix& g_target() const noexcept { return g_target_; }
  const ConductanceMatrix& g_converted() const noexcept { return g_converted_; }
  const WeightMapping& mapping() const noexcept { return mapping_; }
  const Vector& v_conv() const noexcept { return v_conv_; }
  const CalibrationParams& calibration() const noexcept { return cali_; }
  const DacSpec& dac() const noexcept { return dac_; }
  const AdcSpec& adc() const noexcept { return adc_; }
  std::size_t input_size() const noexcept { return mapping_.weight_rows; }
  std::size_t output_size() const noexcept { return mapping_.weight_cols; }

  VmmEngine with_calibration(CalibrationParams cali) const;
  VmmEngine with_adc(AdcSpec adc) const;

  /// Column currents after DAC, crossbar and ADC, for the first
  /// output_size() columns.
  Vector currents(std::span<const double> x, ClipCounter* dac_clips = nullptr,
                  ClipCounter* adc_clips = nullptr) const;
  /// Column currents before the ADC.
  Vector analog_currents(std::span<const double> x, ClipCounter* dac_clips = nullptr) const;
  /// Calibrated result, equal to x^T A up to analog and quantization error.
  Vector execute(std::span<const double> x, ClipCounter* dac_clips = nullptr,
                 ClipCounter* adc_clips = nullptr) const;
  /// x^T A computed exactly from the target conductances.
  Vector ideal(std::span<const double> x) const;
  /// x^T (A + c_eff), the quantity the calibration fits.
  Vector ideal_shifted(std::span<const double> x) const;

  /// Row-wise execute over a batch (parallel, deterministic).
  Matrix execute_batch(const Matrix& x, std::size_t threads = 0) const;
  Matrix ideal_batch(const Matrix& x) const;

 private:
  void check_input(std::span<const double> x) const;
  Vector drive_voltages(std::span<const double> x, ClipCounter* dac_clips) const;

  CrossbarConfig config_;
  ConductanceMatrix g_target_;
  ConductanceMatrix g_converted_;
  WeightMapping mapping_;
  Vector v_conv_;
  CalibrationParams cali_;
  DacSpec dac_;
  AdcSpec adc_;
  std::shared_ptr<const CrossbarSolver> solver_;
};

/// y = x^T A through the engine (free-function form of VmmEngine::execute).
Vector vmm_execute(const VmmEngine& engine, std::span<const double> x);

/// Least-squares line per column from post-ADC currents to x^T (A + c_eff)
/// over the calibration samples (one per row of `cali_samples`).
CalibrationParams get_cali_para(const VmmEngine& engine, const Matrix& cali_samples);

/// ADC range with 5% headroom over the largest column current seen on the
/// samples (DAC applied, ADC bypassed).
AdcSpec calibrate_adc_range(const VmmEngine& engine, const Matrix& sample_inputs,
                            std::optional<int> bits);

struct SignalCandidate {
  double amplitude = 0.0;  // fraction of v_sense_max
  double mean_rel_error = 0.0;
  double worst_rel_error = 0.0;
  bool converged = false;
};

struct SignalChoice {
  Vector v_conv;
  double amplitude = 0.0;
  std::vector<SignalCandidate> candidates;
  ConversionResult conversion;  // for the chosen amplitude
};

const std::vector<double>& default_signal_amplitudes();

struct SignalSearchOptions {
  std::vector<double> amplitudes = default_signal_amplitudes();
  std::size_t cali_samples = 10;
  std::uint64_t seed = 0;
  ConvertOptions convert;
  DacSpec dac{};
  std::optional<int> adc_bits;
  double tie_tolerance = 1e-9;  // relative; ties go to the larger amplitude
};

/// Evaluates flat conversion signals; for each, converts, calibrates on a
/// seeded pick of `sample_inputs` and measures mean relative error over all
/// of them. Returns the best (ties toward the larger amplitude).
SignalChoice optimize_conversion_signal(const CrossbarConfig& config,
                                        const ConductanceMatrix& g_target,
                                        const WeightMapping& mapping,
                                        const Matrix& sample_inputs,
                                        const SignalSearchOptions& options = {});

/// Largest range_scale in {1, 1/2, 1/4, ...} whose conversion under v_conv
/// converges without clamping any device.
struct RangeBackoff {
  double range_scale = 1.0;
  int attempts = 0;
  bool feasible = false;
};
RangeBackoff select_range_scale(const CrossbarConfig& config, const ConductanceMatrix& g_target,
                                std::span<const double> v_conv,
                                const ConvertOptions& options = {}, int max_halvings = 10);

struct RangeCandidate {
  double range_scale = 1.0;
  double mean_rel_error = 0.0;
  double worst_rel_error = 0.0;
  bool converged = false;
};

struct RangeChoice {
  double range_scale = 1.0;
  ConductanceMatrix g_target;   // full-range target compressed to range_scale
  ConversionResult conversion;  // at range_scale
  std::vector<RangeCandidate> candidates;
};

/// Starting from `start_scale` (whose conversion is `start`), halves the
/// conversion range while the calibrated mean relative error over
/// `sample_inputs` keeps improving, at most `max_halvings` times. Smaller
/// ranges shrink the wire-drop error but leave less signal above the g_min
/// floor; the measured error decides. Scoring uses the same calibration pick
/// as optimize_conversion_signal for equal options.
RangeChoice refine_range_scale(const CrossbarConfig& config, const ConductanceMatrix& g_full,
                               const WeightMapping& mapping, std::span<const double> v_conv,
                               double start_scale, ConversionResult start,
                               const Matrix& sample_inputs, const SignalSearchOptions& options,
                               int max_halvings);

enum class CalibrationSource { ShuffledInput, RandomSignal };

enum class ConversionMode {
  None,       // direct mapping, G' = G
  Original,   // flat full-scale conversion signal
  Optimized,  // amplitude search
};

struct EngineBuildOptions {
  ConversionMode conversion = ConversionMode::Optimized;
  bool range_backoff = true;
  bool calibrate = true;
  CalibrationSource cali_source = CalibrationSource::ShuffledInput;
  std::size_t cali_samples = 10;
  std::size_t adc_range_samples = 256;
  std::optional<double> x_max;  // default: max of the input samples
  std::optional<int> dac_bits;
  std::optional<int> adc_bits;
  std::vector<double> amplitudes = default_signal_amplitudes();
  ConvertOptions convert;
  int range_refine_halvings = 8;  // optimized mode only; 0 keeps the back-off scale
  std::uint64_t seed = 0;
};

struct EngineBuildReport {
  double range_scale = 1.0;
  int backoff_attempts = 0;
  double backoff_scale = 1.0;
  std::vector<RangeCandidate> range_candidates;
  double amplitude = 0.0;
  std::vector<SignalCandidate> candidates;
  int conversion_iterations = 0;
  bool conversion_converged = true;
  double conversion_error = 0.0;
  std::size_t clamped_devices = 0;
  std::vector<std::size_t> cali_indices;
};

/// Builds a ready engine for weights `a` (rows x cols) from a stream of real
/// input vectors (one per row of `input_samples`).
VmmEngine build_engine(const Matrix& a, const CrossbarConfig& config, const Matrix& input_samples,
                       const EngineBuildOptions& options = {},
                       EngineBuildReport* report = nullptr);

/// Engine descriptor (JSON) plus little-endian float64 blob holding g_target
/// then g_converted, row-major. The descriptor refers to the blob by a path
/// relative to its own directory. `report`, when given, is stored as build
/// metadata and ignored on load.
void save_engine(const VmmEngine& engine, const std::string& json_path,
                 const std::string& blob_path, const EngineBuildReport* report = nullptr);
VmmEngine load_engine(const std::string& json_path);

}  // namespace xbar
