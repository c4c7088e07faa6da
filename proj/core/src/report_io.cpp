#include "xbar/report_io.hpp"

#include <charconv>
#include <cmath>

namespace xbar {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string error_rows_csv(const std::vector<ErrorRow>& rows) {
  std::string out = "layer,window,column,ideal,actual,rel_err\n";
  for (const auto& r : rows) {
    out += r.layer;
    out += ',' + std::to_string(r.window) + ',' + std::to_string(r.column) + ',';
    out += format_double(r.ideal) + ',' + format_double(r.actual) + ',' +
           format_double(r.rel_err) + '\n';
  }
  return out;
}

namespace {

Json finite_or_string(double v) {
  return std::isfinite(v) ? Json(v) : Json(format_double(v));
}

}  // namespace

Json to_json(const RelErrorStats& s) {
  Json edges = Json::array();
  for (double e : s.bin_edges) edges.push_back(finite_or_string(e));
  return Json{{"mean", s.mean},
              {"worst", s.worst},
              {"count", s.count},
              {"mean_bit_accuracy", s.count ? bit_accuracy_label(s.mean) : "n/a"},
              {"worst_bit_accuracy", s.count ? bit_accuracy_label(s.worst) : "n/a"},
              {"bin_edges", edges},
              {"histogram", s.histogram},
              {"output_range", s.output_range}};
}

Json to_json(const ErrorReport& r) {
  Json layers = Json::array();
  for (const auto& l : r.layers)
    layers.push_back({{"layer", l.layer},
                      {"per_layer", to_json(l.per_layer)},
                      {"end_to_end", to_json(l.end_to_end)},
                      {"flat_columns", l.flat_columns}});
  return Json{{"layers", layers}, {"rows", r.rows.size()}};
}

Json to_json(const SweepResult& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"bits", row.bits},
                    {"images", row.images},
                    {"accuracy", row.accuracy ? Json(*row.accuracy) : Json(nullptr)},
                    {"agreement", row.agreement},
                    {"final_mean_rel_error", row.final_mean},
                    {"final_worst_rel_error", row.final_worst},
                    {"dac_clips", row.dac.clipped},
                    {"dac_samples", row.dac.samples},
                    {"adc_clips", row.adc.clipped},
                    {"adc_samples", row.adc.samples},
                    {"input_clips", row.input_clips},
                    {"errors", to_json(row.report)}});
  return Json{{"software_accuracy",
               r.software_accuracy ? Json(*r.software_accuracy) : Json(nullptr)},
              {"final_layer", r.final_layer},
              {"settings", rows}};
}

Json to_json(const LayerExpResult& r) {
  Json variants = Json::array();
  for (const auto& v : r.variants)
    variants.push_back({{"variant", v.variant},
                        {"amplitude", v.amplitude},
                        {"range_scale", v.range_scale},
                        {"converged", v.converged},
                        {"stats", to_json(v.stats)}});
  return Json{{"input_sparsity", r.input_sparsity}, {"variants", variants}};
}

std::string variants_csv(const LayerExpResult& r) {
  std::string out = "variant,amplitude,range_scale,converged,count,mean,worst,mean_bits,worst_bits\n";
  for (const auto& v : r.variants) {
    out += v.variant + ',' + format_double(v.amplitude) + ',' + format_double(v.range_scale) + ',' +
           (v.converged ? "1" : "0") + ',' + std::to_string(v.stats.count) + ',' +
           format_double(v.stats.mean) + ',' + format_double(v.stats.worst) + ',' +
           bit_accuracy_label(v.stats.mean) + ',' + bit_accuracy_label(v.stats.worst) + '\n';
  }
  return out;
}

std::string histogram_csv(const LayerExpResult& r) {
  std::string out = "variant,amplitude,bin_lo,bin_hi,count\n";
  for (const auto& v : r.variants)
    for (std::size_t b = 0; b < v.stats.histogram.size(); ++b)
      out += v.variant + ',' + format_double(v.amplitude) + ',' +
             format_double(v.stats.bin_edges[b]) + ',' + format_double(v.stats.bin_edges[b + 1]) +
             ',' + std::to_string(v.stats.histogram[b]) + '\n';
  return out;
}

std::string sweep_csv(const SweepResult& r) {
  std::string out =
      "bits,images,accuracy,agreement,final_mean,final_worst,dac_clip_fraction,adc_clip_fraction\n";
  for (const auto& row : r.rows)
    out += row.bits + ',' + std::to_string(row.images) + ',' +
           (row.accuracy ? format_double(*row.accuracy) : std::string()) + ',' +
           format_double(row.agreement) + ',' + format_double(row.final_mean) + ',' +
           format_double(row.final_worst) + ',' + format_double(row.dac.fraction()) + ',' +
           format_double(row.adc.fraction()) + '\n';
  return out;
}

}  // namespace xbar
