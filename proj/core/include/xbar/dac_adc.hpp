#pragma once

// Input DACs and ramping-counter ADCs, modeled as ideal uniform quantizers.
// A quantizer with 2^bits levels spans [lo, hi] with LSB = (hi-lo)/(2^bits-1)
// and rounds to the nearest level (ties go up). Out-of-range values clip to
// the end codes and are reported, never rejected.

#include <cstddef>
#include <optional>
#include <string>

#include "xbar/matrix.hpp"

namespace xbar {

struct DacSpec {
  std::optional<int> bits;  // nullopt = disabled (exact)
  double v_min = 0.0;
  double v_max = 0.2;

  bool enabled() const noexcept { return bits.has_value(); }
  double lsb() const;
  void validate() const;
  bool operator==(const DacSpec&) const = default;
};

struct AdcSpec {
  std::optional<int> bits;
  double i_min = 0.0;
  double i_max = 1e-3;

  bool enabled() const noexcept { return bits.has_value(); }
  double lsb() const;
  void validate() const;
  bool operator==(const AdcSpec&) const = default;
};

struct Quantized {
  double value;
  bool clipped;
};

Quantized dac_quantize(double v, const DacSpec& spec);
Quantized adc_quantize(double i, const AdcSpec& spec);

/// Running count of clip events; owned by the caller.
struct ClipCounter {
  std::size_t samples = 0;
  std::size_t clipped = 0;

  double fraction() const { return samples ? double(clipped) / double(samples) : 0.0; }
  void add(const Quantized& q) {
    ++samples;
    clipped += q.clipped ? 1 : 0;
  }
  void merge(const ClipCounter& other) {
    samples += other.samples;
    clipped += other.clipped;
  }
};

/// ADC range from observed column currents (any shape): i_min = 0,
/// i_max = headroom * max current. Throws if no current is positive.
AdcSpec adc_range_from_currents(const Matrix& currents, std::optional<int> bits,
                                double headroom = 1.05);

/// Parses "none" or an integer bit width.
std::optional<int> parse_bits(const std::string& text);
std::string bits_label(std::optional<int> bits);

}  // namespace xbar
