#include "xbar/netrunner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "xbar/digital_ops.hpp"
#include "xbar/errors.hpp"
#include "xbar/random.hpp"

namespace xbar {

namespace {

void add_bias(FeatureMap& fm, const LayerSpec& l) {
  if (!l.has_bias) return;
  for (std::size_t e = 0; e < fm.size(); ++e) fm.data[e] += l.bias[e % fm.channels];
}

void add_bias(Matrix& m, const LayerSpec& l) {
  if (!l.has_bias || m.empty()) return;
  for (std::size_t k = 0; k < m.rows(); ++k)
    for (std::size_t j = 0; j < m.cols(); ++j) m(k, j) += l.bias[j];
}

Matrix as_matrix(const FeatureMap& fm) {
  Matrix m(fm.height * fm.width, fm.channels);
  std::copy(fm.data.begin(), fm.data.end(), m.data().begin());
  return m;
}

FeatureMap software_weight_layer(const LayerSpec& l, const FeatureMap& in) {
  FeatureMap out = conv_reference(in, l.conv);
  add_bias(out, l);
  return out;
}

FeatureMap digital_layer(const LayerSpec& l, const std::vector<const FeatureMap*>& in) {
  switch (l.kind) {
    case LayerKind::Relu: return relu(*in[0]);
    case LayerKind::BatchNorm: return batchnorm_affine(*in[0], l.scale, l.bias);
    case LayerKind::GlobalAvgPool: return global_avg_pool(*in[0]);
    case LayerKind::Add: return shortcut_add(*in[0], *in[1]);
    case LayerKind::Softmax: {
      FeatureMap out = *in[0];
      out.data = softmax(in[0]->data);
      return out;
    }
    default: throw ContractViolation("digital_layer: '" + l.name + "' is not a digital layer");
  }
}

std::vector<const FeatureMap*> inputs_of(const NetworkModel& model, const LayerSpec& l,
                                         const std::vector<FeatureMap>& acts) {
  std::vector<const FeatureMap*> in;
  for (const auto& p : l.predecessors) in.push_back(&acts[model.index_of(p)]);
  return in;
}

std::vector<FeatureMap> software_activations(const NetworkModel& model, const FeatureMap& image) {
  std::vector<FeatureMap> acts(model.layers.size());
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const LayerSpec& l = model.layers[k];
    if (l.kind == LayerKind::Input) {
      require(image.height == l.height && image.width == l.width && image.channels == l.channels,
              "run_inference: image shape does not match the input layer");
      acts[k] = image;
    } else if (l.is_weight_layer()) {
      acts[k] = software_weight_layer(l, *inputs_of(model, l, acts)[0]);
    } else {
      acts[k] = digital_layer(l, inputs_of(model, l, acts));
    }
  }
  return acts;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

Matrix stack_rows(const std::vector<const Matrix*>& parts) {
  std::size_t rows = 0;
  std::size_t cols = parts.empty() ? 0 : parts.front()->cols();
  for (const auto* p : parts) {
    require(p->cols() == cols, "stack_rows: column count differs between images");
    rows += p->rows();
  }
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (const auto* p : parts) {
    std::copy(p->data().begin(), p->data().end(), out.data().begin() + std::ptrdiff_t(at * cols));
    at += p->rows();
  }
  return out;
}

}  // namespace

EngineSet build_network_engines(const NetworkModel& model,
                                const std::vector<FeatureMap>& calibration,
                                const NetSettings& settings) {
  require(!calibration.empty(), "build_network_engines: no calibration images");
  require(settings.x_max_headroom >= 1.0, "build_network_engines: headroom must be >= 1");
  EngineSet engines;
  std::vector<std::vector<FeatureMap>> acts(calibration.size(),
                                            std::vector<FeatureMap>(model.layers.size()));
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const LayerSpec& l = model.layers[k];
    if (l.kind == LayerKind::Input) {
      for (std::size_t n = 0; n < calibration.size(); ++n) {
        require(calibration[n].height == l.height && calibration[n].width == l.width &&
                    calibration[n].channels == l.channels,
                "build_network_engines: image shape does not match the input layer");
        acts[n][k] = calibration[n];
      }
      continue;
    }
    if (!l.is_weight_layer()) {
      for (auto& a : acts) a[k] = digital_layer(l, inputs_of(model, l, a));
      continue;
    }

    std::vector<Matrix> windows;
    std::vector<const Matrix*> parts;
    windows.reserve(calibration.size());
    for (auto& a : acts) windows.push_back(window_stream(*inputs_of(model, l, a)[0], l.conv));
    for (const auto& w : windows) parts.push_back(&w);
    Matrix all = stack_rows(parts);

    Rng rng(derive_seed(settings.seed, 1000 + k));
    if (all.rows() > settings.max_engine_samples) {
      auto idx = rng.sample_indices(all.rows(), settings.max_engine_samples);
      std::sort(idx.begin(), idx.end());
      Matrix picked(idx.size(), all.cols());
      for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy(all.row(idx[r]).begin(), all.row(idx[r]).end(), picked.row(r).begin());
      all = std::move(picked);
    }
    double peak = 0.0;
    for (double v : all.data()) peak = std::max(peak, v);

    CrossbarConfig config = settings.physical;
    config.rows = l.conv.unrolled_rows();
    config.cols = l.conv.out_channels;
    EngineBuildOptions opts = settings.build;
    opts.x_max = peak > 0.0 ? peak * settings.x_max_headroom : 1.0;
    opts.seed = derive_seed(settings.seed, 2000 + k);
    const VmmEngine engine = build_engine(unroll_kernel(l.conv), config, all, opts);

    for (auto& a : acts) {
      a[k] = conv_execute(engine, *inputs_of(model, l, a)[0], l.conv, {settings.threads, false});
      add_bias(a[k], l);
    }
    engines.emplace(l.name, engine);
  }
  return engines;
}

InferenceResult run_inference(const NetworkModel& model, const EngineSet* engines,
                              const FeatureMap& image, RunMode mode,
                              const std::set<std::string>& taps, std::size_t threads) {
  InferenceResult result;
  if (mode == RunMode::Software) {
    const auto acts = software_activations(model, image);
    result.probabilities = acts.back().data;
    result.predicted = argmax(result.probabilities);
    return result;
  }

  require(engines != nullptr, "run_inference: analog mode needs engines");
  std::vector<FeatureMap> reference;
  if (!taps.empty()) reference = software_activations(model, image);

  std::vector<FeatureMap> acts(model.layers.size());
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const LayerSpec& l = model.layers[k];
    if (l.kind == LayerKind::Input) {
      require(image.height == l.height && image.width == l.width && image.channels == l.channels,
              "run_inference: image shape does not match the input layer");
      acts[k] = image;
      continue;
    }
    if (!l.is_weight_layer()) {
      acts[k] = digital_layer(l, inputs_of(model, l, acts));
      continue;
    }
    const auto it = engines->find(l.name);
    require(it != engines->end(), "run_inference: no engine for layer '" + l.name + "'");
    const bool tapped = taps.count(l.name) > 0;
    ConvTrace trace;
    acts[k] = conv_execute(it->second, *inputs_of(model, l, acts)[0], l.conv, {threads, tapped},
                           &trace, &result.stats);
    add_bias(acts[k], l);
    if (tapped) {
      add_bias(trace.ideal, l);
      add_bias(trace.actual, l);
      result.traces.push_back(
          {l.name, std::move(trace.ideal), std::move(trace.actual), as_matrix(reference[k])});
    }
  }
  result.probabilities = acts.back().data;
  result.predicted = argmax(result.probabilities);
  return result;
}

ErrorReport make_error_report(const std::vector<std::vector<LayerTrace>>& traces) {
  std::vector<std::string> order;
  for (const auto& image : traces)
    for (const auto& t : image)
      if (std::find(order.begin(), order.end(), t.layer) == order.end()) order.push_back(t.layer);

  ErrorReport report;
  for (const auto& name : order) {
    std::vector<const Matrix*> ideal, actual, ref;
    for (const auto& image : traces)
      for (const auto& t : image)
        if (t.layer == name) {
          ideal.push_back(&t.ideal);
          actual.push_back(&t.actual);
          ref.push_back(&t.reference);
        }
    const Matrix I = stack_rows(ideal);
    const Matrix A = stack_rows(actual);
    const Matrix R = stack_rows(ref);
    require(I.rows() == A.rows() && I.rows() == R.rows() && I.cols() == R.cols(),
            "make_error_report: trace shapes differ");
    const Vector range_i = output_ranges(I);
    const Vector range_r = output_ranges(R);

    LayerErrorSummary summary;
    summary.layer = name;
    std::vector<double> per_layer, e2e;
    per_layer.reserve(I.size());
    e2e.reserve(I.size());
    for (std::size_t k = 0; k < I.rows(); ++k)
      for (std::size_t j = 0; j < I.cols(); ++j) {
        if (range_i[j] > 0.0) {
          const double e = relative_error(A(k, j), I(k, j), range_i[j]);
          per_layer.push_back(e);
          report.rows.push_back({name, k, j, I(k, j), A(k, j), e});
        }
        if (range_r[j] > 0.0) e2e.push_back(relative_error(A(k, j), R(k, j), range_r[j]));
      }
    for (double r : range_i) summary.flat_columns += r > 0.0 ? 0 : 1;
    summary.per_layer = summarize_relative(per_layer);
    summary.per_layer.output_range = range_i;
    summary.end_to_end = summarize_relative(e2e);
    summary.end_to_end.output_range = range_r;
    report.layers.push_back(std::move(summary));
  }
  return report;
}

SweepResult quantization_sweep(const NetworkModel& model, const std::vector<FeatureMap>& images,
                               const std::vector<int>& labels,
                               const std::vector<std::optional<int>>& bit_list,
                               const std::set<std::string>& taps, const NetSettings& settings) {
  require(labels.empty() || labels.size() == images.size(),
          "quantization_sweep: one label per image required");
  SweepResult result;
  const auto weight_layers = model.weight_layers();
  require(!weight_layers.empty(), "quantization_sweep: model has no weight layers");
  result.final_layer = model.layers[weight_layers.back()].name;
  if (images.empty()) return result;

  std::vector<std::size_t> software_pred(images.size());
  std::size_t correct = 0;
  for (std::size_t n = 0; n < images.size(); ++n) {
    software_pred[n] = run_inference(model, nullptr, images[n], RunMode::Software).predicted;
    if (!labels.empty() && int(software_pred[n]) == labels[n]) ++correct;
  }
  if (!labels.empty()) result.software_accuracy = double(correct) / double(images.size());

  Rng rng(derive_seed(settings.seed, 7));
  std::vector<FeatureMap> calibration;
  for (std::size_t idx : rng.sample_indices(images.size(),
                                            std::min(settings.calibration_images, images.size())))
    calibration.push_back(images[idx]);

  std::set<std::string> all_taps = taps;
  all_taps.insert(result.final_layer);

  for (const auto& bits : bit_list) {
    NetSettings s = settings;
    s.build.dac_bits = bits;
    s.build.adc_bits = bits;
    const EngineSet engines = build_network_engines(model, calibration, s);

    SweepRow row;
    row.bits = bits_label(bits);
    row.images = images.size();
    std::vector<std::vector<LayerTrace>> traces;
    std::size_t agree = 0, hit = 0;
    for (std::size_t n = 0; n < images.size(); ++n) {
      InferenceResult r =
          run_inference(model, &engines, images[n], RunMode::Analog, all_taps, settings.threads);
      agree += r.predicted == software_pred[n] ? 1 : 0;
      if (!labels.empty() && int(r.predicted) == labels[n]) ++hit;
      row.dac.merge(r.stats.dac);
      row.adc.merge(r.stats.adc);
      row.input_clips += r.stats.input_clips;
      traces.push_back(std::move(r.traces));
    }
    row.agreement = double(agree) / double(images.size());
    if (!labels.empty()) row.accuracy = double(hit) / double(images.size());
    row.report = make_error_report(traces);
    for (const auto& l : row.report.layers)
      if (l.layer == result.final_layer) {
        row.final_mean = l.end_to_end.mean;
        row.final_worst = l.end_to_end.worst;
      }
    if (!taps.count(result.final_layer)) {
      std::erase_if(row.report.rows, [&](const ErrorRow& e) { return e.layer == result.final_layer; });
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::set<std::string> parse_taps(const NetworkModel& model, const std::string& text) {
  std::set<std::string> taps;
  if (text.empty() || text == "none") return taps;
  if (text == "all") {
    for (std::size_t k : model.weight_layers()) taps.insert(model.layers[k].name);
    return taps;
  }
  std::stringstream ss(text);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    const std::size_t k = [&] {
      try {
        return model.index_of(name);
      } catch (const ContractViolation&) {
        throw ValidationError("unknown tap layer '" + name + "'");
      }
    }();
    if (!model.layers[k].is_weight_layer())
      throw ValidationError("tap layer '" + name + "' is not a conv/fc layer");
    taps.insert(name);
  }
  return taps;
}

}  // namespace xbar
