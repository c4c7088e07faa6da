#include "xbar/dac_adc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "xbar/errors.hpp"

namespace xbar {
namespace {

constexpr int kMinBits = 2;
constexpr int kMaxBits = 16;

void check_bits(const std::optional<int>& bits, const char* who) {
  if (bits && (*bits < kMinBits || *bits > kMaxBits))
    throw ValidationError(std::string(who) + ": bits must be in [2, 16] or none, got " +
                          std::to_string(*bits));
}

Quantized quantize(double x, std::optional<int> bits, double lo, double hi) {
  if (!bits) return {x, false};
  const auto top_code = static_cast<double>((std::uint64_t{1} << *bits) - 1);
  const double lsb = (hi - lo) / top_code;
  bool clipped = false;
  if (x < lo) {
    x = lo;
    clipped = true;
  } else if (x > hi) {
    x = hi;
    clipped = true;
  }
  double code = std::floor((x - lo) / lsb + 0.5);
  code = std::clamp(code, 0.0, top_code);
  if (code == top_code) return {hi, clipped};
  return {lo + code * lsb, clipped};
}

}  // namespace

double DacSpec::lsb() const {
  return bits ? (v_max - v_min) / double((std::uint64_t{1} << *bits) - 1) : 0.0;
}

void DacSpec::validate() const {
  check_bits(bits, "DacSpec");
  if (v_min != 0.0 || !(v_max > v_min) || !std::isfinite(v_max))
    throw ValidationError("DacSpec: require v_max > v_min = 0");
}

double AdcSpec::lsb() const {
  return bits ? (i_max - i_min) / double((std::uint64_t{1} << *bits) - 1) : 0.0;
}

void AdcSpec::validate() const {
  check_bits(bits, "AdcSpec");
  if (!(i_min >= 0.0) || !(i_max > i_min) || !std::isfinite(i_max))
    throw ValidationError("AdcSpec: require i_max > i_min >= 0");
}

Quantized dac_quantize(double v, const DacSpec& spec) {
  return quantize(v, spec.bits, spec.v_min, spec.v_max);
}

Quantized adc_quantize(double i, const AdcSpec& spec) {
  return quantize(i, spec.bits, spec.i_min, spec.i_max);
}

AdcSpec adc_range_from_currents(const Matrix& currents, std::optional<int> bits,
                                double headroom) {
  double peak = 0.0;
  for (double v : currents.data()) peak = std::max(peak, v);
  if (!(peak > 0.0))
    throw ContractViolation("calibrate_adc_range: samples produce no positive column current");
  AdcSpec spec;
  spec.bits = bits;
  spec.i_min = 0.0;
  spec.i_max = headroom * peak;
  return spec;
}

std::optional<int> parse_bits(const std::string& text) {
  if (text == "none") return std::nullopt;
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ValidationError("bit width must be an integer or 'none', got '" + text + "'");
  check_bits(value, "bit width");
  return value;
}

std::string bits_label(std::optional<int> bits) {
  return bits ? std::to_string(*bits) : std::string("none");
}

}  // namespace xbar
