#include "commands.hpp"

#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "experiment_config.hpp"
#include "xbar/conv_mapper.hpp"
#include "xbar/errors.hpp"
#include "xbar/file_io.hpp"
#include "xbar/json_conv.hpp"
#include "xbar/layer_experiment.hpp"
#include "xbar/netrunner.hpp"
#include "xbar/parallel.hpp"
#include "xbar/random.hpp"
#include "xbar/report_io.hpp"
#include "xbar/resnet20.hpp"
#include "xbar/tensor_io.hpp"

namespace xbar::cli {

namespace fs = std::filesystem;

namespace {

ExperimentConfig config_or_default(const std::string& path) {
  ExperimentConfig cfg;
  if (!path.empty()) cfg = load_experiment_config(path);
  return cfg;
}

bool is_tensor_file(const std::string& bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), "MTEN", 4) == 0;
}

Json parse_json(const std::string& bytes, const std::string& origin) {
  try {
    return Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

Matrix matrix_from_tensor(const Tensor& t, const std::string& origin) {
  if (t.dims.size() != 2) throw ValidationError(origin + ": expected a rank-2 tensor");
  Matrix m(t.dims[0], t.dims[1]);
  for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = t.values[k];
  return m;
}

Matrix load_matrix(const std::string& path) {
  const std::string bytes = read_file(path);
  if (is_tensor_file(bytes)) return matrix_from_tensor(decode_tensor(bytes, path), path);
  const Json j = parse_json(bytes, path);
  try {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows.front().empty()) throw ValidationError(path + ": empty matrix");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols()) throw ValidationError(path + ": ragged matrix");
      std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
  } catch (const Json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

Vector load_vector(const std::string& path) {
  const std::string bytes = read_file(path);
  if (is_tensor_file(bytes)) {
    const Tensor t = decode_tensor(bytes, path);
    if (t.dims.size() != 1) throw ValidationError(path + ": expected a rank-1 tensor");
    return Vector(t.values.begin(), t.values.end());
  }
  try {
    return parse_json(bytes, path).get<Vector>();
  } catch (const Json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r)
    rows.push_back(Vector(m.row(r).begin(), m.row(r).end()));
  return rows;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string blob_path_for(const std::string& json_path) {
  fs::path p(json_path);
  return (p.parent_path() / (p.stem().string() + ".bin")).string();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find_first_of("xX*");
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const auto rows = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    const auto cols = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1 || rows == 0 || cols == 0) throw std::invalid_argument(text);
    return {rows, cols};
  } catch (const std::logic_error&) {
    throw ValidationError("crossbar size must look like 144x16, got '" + text + "'");
  }
}

void write_text(const fs::path& path, const std::string& text) { write_file(path.string(), text); }

}  // namespace

void configure_threads(const GlobalOptions& global) {
  if (global.threads > 0) set_default_threads(global.threads);
}

int run_simulate(const SimulateArgs& args) {
  ExperimentConfig cfg = config_or_default(args.config);
  const Matrix g = load_matrix(args.conductance);
  const Vector v = load_vector(args.input);
  CrossbarConfig config = cfg.crossbar;
  if (cfg.rows_set && config.rows != g.rows())
    throw ValidationError("conductance has " + std::to_string(g.rows()) + " rows, config says " +
                          std::to_string(config.rows));
  if (cfg.cols_set && config.cols != g.cols())
    throw ValidationError("conductance has " + std::to_string(g.cols()) + " cols, config says " +
                          std::to_string(config.cols));
  config.rows = g.rows();
  config.cols = g.cols();
  config.validate();
  const NodeSolution sol = simulate(config, ConductanceMatrix(g), v);
  const Json out{{"config", to_json(config)},
                 {"i_out", sol.i_out},
                 {"v_top", matrix_json(sol.v_top)},
                 {"v_bot", matrix_json(sol.v_bot)},
                 {"residual", sol.residual}};
  write_file(args.out, out.dump(2) + "\n");
  return 0;
}

int run_build_engine(const BuildEngineArgs& args) {
  ExperimentConfig cfg = config_or_default(args.config);
  if (args.seed) cfg.seed = *args.seed;

  const Tensor wt = read_tensor(args.weights);
  Matrix a;
  ConvSpec spec;
  bool conv = false;
  if (wt.dims.size() == 2) {
    a = matrix_from_tensor(wt, args.weights);
  } else if (wt.dims.size() == 4) {
    spec.kernel_h = wt.dims[0];
    spec.kernel_w = wt.dims[1];
    spec.in_channels = wt.dims[2];
    spec.out_channels = wt.dims[3];
    spec.stride = args.stride;
    spec.padding = args.padding;
    spec.weights = Kernel4(spec.kernel_h, spec.kernel_w, spec.in_channels, spec.out_channels);
    std::copy(wt.values.begin(), wt.values.end(), spec.weights.data.begin());
    a = unroll_kernel(spec);
    conv = true;
  } else {
    throw ValidationError(args.weights + ": weights must be rank 2 or rank 4");
  }

  const Tensor st = read_tensor(args.samples);
  Matrix samples;
  if (st.dims.size() == 2) {
    samples = matrix_from_tensor(st, args.samples);
  } else {
    if (!conv) throw ValidationError("image samples need rank-4 (kernel) weights");
    std::vector<const Matrix*> parts;
    std::vector<Matrix> windows;
    for (const auto& image : tensor_to_images(st)) windows.push_back(window_stream(image, spec));
    std::size_t rows = 0;
    for (const auto& w : windows) rows += w.rows();
    samples = Matrix(rows, a.rows());
    std::size_t at = 0;
    for (const auto& w : windows) {
      std::copy(w.data().begin(), w.data().end(), samples.data().begin() + std::ptrdiff_t(at));
      at += w.size();
    }
  }
  if (samples.cols() != a.rows())
    throw ValidationError("samples have length " + std::to_string(samples.cols()) +
                          ", weights expect " + std::to_string(a.rows()));
  for (double x : samples.data())
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("samples must be finite and >= 0");

  CrossbarConfig config = cfg.crossbar;
  if (!cfg.rows_set) config.rows = a.rows();
  if (!cfg.cols_set) config.cols = a.cols();
  config.validate();
  if (a.rows() > config.rows || a.cols() > config.cols)
    throw ValidationError("weights " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " exceed the crossbar " + std::to_string(config.rows) + "x" +
                          std::to_string(config.cols));
  for (double w : a.data())
    if (!std::isfinite(w)) throw ValidationError("weights must be finite");

  EngineBuildReport report;
  const VmmEngine engine = build_engine(a, config, samples, cfg.build_options(), &report);
  save_engine(engine, args.out, blob_path_for(args.out), &report);
  return 0;
}

int run_layer_exp(const LayerExpArgs& args, const GlobalOptions& global) {
  ExperimentConfig cfg = config_or_default(args.config);
  if (args.seed) cfg.seed = *args.seed;

  LayerExpOptions o;
  o.kernel_type = kernel_type_from_int(args.kernel_type);
  std::tie(o.rows, o.cols) = parse_size(args.crossbar_size);
  o.sparsity = args.sparsity;
  o.samples = args.samples;
  o.seed = cfg.seed;
  o.physical = cfg.crossbar;
  o.dac_bits = cfg.dac_bits;
  o.adc_bits = cfg.adc_bits;
  o.cali_samples = cfg.cali_samples;
  o.amplitudes = cfg.amplitudes;
  o.amplitude_sweep = args.amp_sweep;
  o.threads = global.threads;
  o.variants.clear();
  for (const auto& v : split_list(args.variants)) o.variants.push_back(layer_variant_from_string(v));

  const LayerExpResult result = run_layer_experiment(o);
  ensure_dir(args.out);
  const fs::path dir(args.out);
  write_text(dir / "variants.csv", variants_csv(result));
  write_text(dir / "histogram.csv", histogram_csv(result));
  Json summary = to_json(result);
  summary["kernel_type"] = args.kernel_type;
  summary["crossbar"] = to_json([&] {
    CrossbarConfig c = o.physical;
    c.rows = o.rows;
    c.cols = o.cols;
    return c;
  }());
  summary["sparsity"] = o.sparsity;
  summary["samples"] = o.samples;
  summary["seed"] = o.seed;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_net(const RunNetArgs& args, const GlobalOptions& global) {
  ExperimentConfig cfg = config_or_default(args.config);
  if (args.seed) cfg.seed = *args.seed;
  if (global.threads) cfg.threads = global.threads;

  const NetworkModel model = load_model(args.model);
  const std::vector<FeatureMap> images = tensor_to_images(read_tensor(args.images));
  std::vector<int> labels;
  if (!args.labels.empty()) {
    try {
      labels = parse_json(read_file(args.labels), args.labels).get<std::vector<int>>();
    } catch (const Json::exception& e) {
      throw ValidationError(args.labels + ": " + e.what());
    }
    if (labels.size() != images.size())
      throw ValidationError("label count does not match image count");
  }
  std::vector<std::optional<int>> bits;
  for (const auto& b : split_list(args.bits)) bits.push_back(parse_bits(b));
  const std::set<std::string> taps = parse_taps(model, args.taps);

  const SweepResult sweep =
      quantization_sweep(model, images, labels, bits, taps, cfg.net_settings());

  ensure_dir(args.out);
  const fs::path dir(args.out);
  write_text(dir / "accuracy.csv", sweep_csv(sweep));
  Json summary = to_json(sweep);
  summary["model"] = model.name;
  summary["seed"] = cfg.seed;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  for (const auto& row : sweep.rows)
    for (const auto& layer : taps) {
      std::vector<ErrorRow> rows;
      for (const auto& r : row.report.rows)
        if (r.layer == layer) rows.push_back(r);
      write_text(dir / ("errors_" + row.bits + "_" + layer + ".csv"), error_rows_csv(rows));
    }
  return 0;
}

int run_make_tiny_model(const MakeModelArgs& args) {
  NetworkModel model = make_tiny_model(args.size, args.size, args.channels, args.hidden,
                                       args.classes, kernel_type_from_int(args.kernel_type),
                                       args.seed);
  save_model(model, args.out, blob_path_for(args.out));
  return 0;
}

int run_make_resnet20(const MakeModelArgs& args) {
  NetworkModel model = make_resnet20_model(args.seed);
  save_model(model, args.out, blob_path_for(args.out));
  return 0;
}

int run_make_images(const MakeImagesArgs& args) {
  std::vector<FeatureMap> images;
  for (std::size_t n = 0; n < args.count; ++n) {
    FeatureMap fm = gen_input(args.size, args.size, args.channels, 0.0, derive_seed(args.seed, n));
    for (double& v : fm.data) v = static_cast<float>(v);
    images.push_back(std::move(fm));
  }
  write_tensor(args.out, images_to_tensor(images));
  return 0;
}

int run_mapping_table(const MappingTableArgs& args) {
  std::string csv = "layer,kernel,crossbar,iterations\n";
  for (const auto& row : resnet20_mapping_table())
    csv += row.name + "," + row.kernel + "," + row.crossbar + "," + std::to_string(row.iterations) +
           "\n";
  csv += "total,,," + std::to_string(iteration_count(resnet20_geometry()).total) + "\n";
  if (args.out.empty())
    std::cout << csv;
  else
    write_file(args.out, csv);
  return 0;
}

}  // namespace xbar::cli
