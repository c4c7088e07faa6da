#include <filesystem>
#include <string>

#include "detail/le_io.hpp"
#include "xbar/errors.hpp"
#include "xbar/file_io.hpp"
#include "xbar/json_conv.hpp"
#include "xbar/vmm_core.hpp"

namespace xbar {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "xbar-engine";
constexpr int kVersion = 1;

}  // namespace

void save_engine(const VmmEngine& engine, const std::string& json_path,
                 const std::string& blob_path, const EngineBuildReport* report) {
  const auto& gt = engine.g_target().g;
  const auto& gc = engine.g_converted().g;
  std::string blob;
  blob.reserve(8 * (gt.size() + gc.size()));
  for (double v : gt.data()) detail::put_f64(blob, v);
  for (double v : gc.data()) detail::put_f64(blob, v);
  write_file(blob_path, blob);

  const fs::path base = fs::absolute(json_path).parent_path();
  const std::string rel = fs::absolute(blob_path).lexically_relative(base).generic_string();

  Json j{{"format", kFormat},
         {"version", kVersion},
         {"config", to_json(engine.config())},
         {"mapping", to_json(engine.mapping())},
         {"v_conv", engine.v_conv()},
         {"calibration", to_json(engine.calibration())},
         {"dac", to_json(engine.dac())},
         {"adc", to_json(engine.adc())},
         {"blob", {{"file", rel}, {"sha256", sha256_hex(blob)}, {"bytes", blob.size()}}}};
  if (report) j["build"] = to_json(*report);
  write_file(json_path, j.dump(2) + "\n");
}

VmmEngine load_engine(const std::string& json_path) {
  Json j;
  try {
    j = Json::parse(read_file(json_path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(json_path + ": " + e.what());
  }
  try {
    if (j.value("format", "") != kFormat) throw ValidationError(json_path + ": not an engine file");
    if (j.value("version", 0) != kVersion)
      throw ValidationError(json_path + ": unsupported engine version");

    CrossbarConfig config;
    apply_json(config, j.at("config"));
    config.validate();
    WeightMapping mapping;
    apply_json(mapping, j.at("mapping"));
    CalibrationParams cali;
    apply_json(cali, j.at("calibration"));
    DacSpec dac;
    apply_json(dac, j.at("dac"));
    AdcSpec adc;
    apply_json(adc, j.at("adc"));
    const Vector v_conv = j.at("v_conv").get<Vector>();

    const auto& jb = j.at("blob");
    const fs::path blob_path = fs::absolute(json_path).parent_path() / jb.at("file").get<std::string>();
    const std::string blob = read_file(blob_path.string());
    const std::size_t cells = config.rows * config.cols;
    if (blob.size() != 16 * cells)
      throw ValidationError(blob_path.string() + ": blob size does not match crossbar shape");
    if (sha256_hex(blob) != jb.at("sha256").get<std::string>())
      throw ValidationError(blob_path.string() + ": checksum mismatch");

    const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
    ConductanceMatrix gt(config.rows, config.cols, 0.0);
    ConductanceMatrix gc(config.rows, config.cols, 0.0);
    for (double& v : gt.g.data()) v = detail::get_f64(p), p += 8;
    for (double& v : gc.g.data()) v = detail::get_f64(p), p += 8;
    return VmmEngine(config, std::move(gt), std::move(gc), mapping, v_conv, std::move(cali), dac,
                     adc);
  } catch (const Json::exception& e) {
    throw ValidationError(json_path + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw ValidationError(json_path + ": " + e.what());
  }
}

}  // namespace xbar
