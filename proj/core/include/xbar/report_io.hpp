#pragma once

// Machine-readable reports. Numbers are written in shortest round-trip
// form so identical results give identical bytes.

#include <string>
#include <vector>

#include "xbar/json_conv.hpp"
#include "xbar/layer_experiment.hpp"
#include "xbar/metrics.hpp"
#include "xbar/netrunner.hpp"

namespace xbar {

/// Shortest decimal that parses back to `v`; "inf"/"nan" for non-finite.
std::string format_double(double v);

/// layer,window,column,ideal,actual,rel_err
std::string error_rows_csv(const std::vector<ErrorRow>& rows);

Json to_json(const RelErrorStats& s);
Json to_json(const ErrorReport& r);  // aggregates only
Json to_json(const SweepResult& r);
Json to_json(const LayerExpResult& r);

/// variant,amplitude,range_scale,converged,count,mean,worst,mean_bits,worst_bits
std::string variants_csv(const LayerExpResult& r);
/// variant,amplitude,bin_lo,bin_hi,count
std::string histogram_csv(const LayerExpResult& r);
/// bits,images,accuracy,agreement,final_mean,final_worst,dac_clip_fraction,adc_clip_fraction
std::string sweep_csv(const SweepResult& r);

}  // namespace xbar
