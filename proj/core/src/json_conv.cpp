#include "xbar/json_conv.hpp"

#include <algorithm>
#include <string>

#include "xbar/errors.hpp"

namespace xbar {

namespace {

template <typename T>
void read_key(const Json& j, const char* key, T& out, const char* where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string(where) + "." + key + ": " + e.what());
  }
}

void require_object(const Json& j, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected a JSON object");
}

}  // namespace

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ValidationError(std::string(where) + ": unknown key '" + key + "'");
  }
}

std::optional<int> bits_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) return parse_bits(j.get<std::string>());
  if (j.is_number_integer()) return parse_bits(std::to_string(j.get<long long>()));
  throw ValidationError("bit width must be an integer or \"none\"");
}

Json bits_to_json(std::optional<int> bits) {
  return bits ? Json(*bits) : Json("none");
}

Json to_json(const CrossbarConfig& c) {
  return Json{{"rows", c.rows},           {"cols", c.cols},
              {"g_min", c.g_min},         {"g_max", c.g_max},
              {"r_wire", c.r_wire},       {"r_in", c.r_in},
              {"r_out", c.r_out},         {"r_transistor_on", c.r_transistor_on},
              {"v_sense_max", c.v_sense_max}};
}

void apply_json(CrossbarConfig& c, const Json& j) {
  constexpr const char* where = "crossbar";
  require_object(j, where);
  reject_unknown_keys(j, {"rows", "cols", "g_min", "g_max", "r_wire", "r_in", "r_out",
                          "r_transistor_on", "v_sense_max"},
                      where);
  read_key(j, "rows", c.rows, where);
  read_key(j, "cols", c.cols, where);
  read_key(j, "g_min", c.g_min, where);
  read_key(j, "g_max", c.g_max, where);
  read_key(j, "r_wire", c.r_wire, where);
  read_key(j, "r_in", c.r_in, where);
  read_key(j, "r_out", c.r_out, where);
  read_key(j, "r_transistor_on", c.r_transistor_on, where);
  read_key(j, "v_sense_max", c.v_sense_max, where);
}

Json to_json(const DacSpec& d) {
  return Json{{"bits", bits_to_json(d.bits)}, {"v_min", d.v_min}, {"v_max", d.v_max}};
}

void apply_json(DacSpec& d, const Json& j) {
  constexpr const char* where = "dac";
  require_object(j, where);
  reject_unknown_keys(j, {"bits", "v_min", "v_max"}, where);
  if (j.contains("bits")) d.bits = bits_from_json(j.at("bits"));
  read_key(j, "v_min", d.v_min, where);
  read_key(j, "v_max", d.v_max, where);
}

Json to_json(const AdcSpec& a) {
  return Json{{"bits", bits_to_json(a.bits)}, {"i_min", a.i_min}, {"i_max", a.i_max}};
}

void apply_json(AdcSpec& a, const Json& j) {
  constexpr const char* where = "adc";
  require_object(j, where);
  reject_unknown_keys(j, {"bits", "i_min", "i_max"}, where);
  if (j.contains("bits")) a.bits = bits_from_json(j.at("bits"));
  read_key(j, "i_min", a.i_min, where);
  read_key(j, "i_max", a.i_max, where);
}

Json to_json(const WeightMapping& m) {
  return Json{{"shift", m.shift},
              {"alpha", m.alpha},
              {"beta", m.beta},
              {"x_max", m.x_max},
              {"range_scale", m.range_scale},
              {"weight_rows", m.weight_rows},
              {"weight_cols", m.weight_cols}};
}

void apply_json(WeightMapping& m, const Json& j) {
  constexpr const char* where = "mapping";
  require_object(j, where);
  reject_unknown_keys(j, {"shift", "alpha", "beta", "x_max", "range_scale", "weight_rows",
                          "weight_cols"},
                      where);
  read_key(j, "shift", m.shift, where);
  read_key(j, "alpha", m.alpha, where);
  read_key(j, "beta", m.beta, where);
  read_key(j, "x_max", m.x_max, where);
  read_key(j, "range_scale", m.range_scale, where);
  read_key(j, "weight_rows", m.weight_rows, where);
  read_key(j, "weight_cols", m.weight_cols, where);
}

Json to_json(const CalibrationParams& p) {
  return Json{{"gain", p.gain},
              {"offset", p.offset},
              {"sample_count", p.sample_count},
              {"degenerate_columns", p.degenerate_columns}};
}

void apply_json(CalibrationParams& p, const Json& j) {
  constexpr const char* where = "calibration";
  require_object(j, where);
  reject_unknown_keys(j, {"gain", "offset", "sample_count", "degenerate_columns"}, where);
  read_key(j, "gain", p.gain, where);
  read_key(j, "offset", p.offset, where);
  read_key(j, "sample_count", p.sample_count, where);
  read_key(j, "degenerate_columns", p.degenerate_columns, where);
}

Json to_json(const EngineBuildReport& r) {
  Json candidates = Json::array();
  for (const auto& c : r.candidates)
    candidates.push_back({{"amplitude", c.amplitude},
                          {"mean_rel_error", c.mean_rel_error},
                          {"worst_rel_error", c.worst_rel_error},
                          {"converged", c.converged}});
  Json ranges = Json::array();
  for (const auto& c : r.range_candidates)
    ranges.push_back({{"range_scale", c.range_scale},
                      {"mean_rel_error", c.mean_rel_error},
                      {"worst_rel_error", c.worst_rel_error},
                      {"converged", c.converged}});
  return Json{{"range_scale", r.range_scale},
              {"backoff_scale", r.backoff_scale},
              {"backoff_attempts", r.backoff_attempts},
              {"range_candidates", ranges},
              {"amplitude", r.amplitude},
              {"candidates", candidates},
              {"conversion_iterations", r.conversion_iterations},
              {"conversion_converged", r.conversion_converged},
              {"conversion_error", r.conversion_error},
              {"clamped_devices", r.clamped_devices},
              {"cali_indices", r.cali_indices}};
}

}  // namespace xbar
