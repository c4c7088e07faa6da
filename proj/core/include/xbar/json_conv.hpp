#pragma once

// JSON encodings of the configuration and engine types. Decoders overlay
// present keys onto an existing value and reject unknown keys with
// ValidationError.

#include "json.hpp"
#include "xbar/circuit_sim.hpp"
#include "xbar/dac_adc.hpp"
#include "xbar/vmm_core.hpp"

namespace xbar {

using Json = nlohmann::json;

Json to_json(const CrossbarConfig& c);
void apply_json(CrossbarConfig& c, const Json& j);

Json to_json(const DacSpec& d);
void apply_json(DacSpec& d, const Json& j);
Json to_json(const AdcSpec& a);
void apply_json(AdcSpec& a, const Json& j);

Json to_json(const WeightMapping& m);
void apply_json(WeightMapping& m, const Json& j);

Json to_json(const CalibrationParams& p);
void apply_json(CalibrationParams& p, const Json& j);

Json to_json(const EngineBuildReport& r);

/// "none" / null -> nullopt, integer -> bits (validated).
std::optional<int> bits_from_json(const Json& j);
Json bits_to_json(std::optional<int> bits);

/// Throws ValidationError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const char* where);

}  // namespace xbar
