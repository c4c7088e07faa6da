#include "xbar/layer_experiment.hpp"

#include "xbar/errors.hpp"
#include "xbar/random.hpp"

namespace xbar {

namespace {

struct VariantName {
  LayerVariant v;
  const char* name;
};

constexpr VariantName kVariants[] = {
    {LayerVariant::Direct, "direct"},
    {LayerVariant::Original, "original"},
    {LayerVariant::Uncalibrated, "uncalibrated"},
    {LayerVariant::Improved, "improved"},
};

Matrix exact_product(const Matrix& x, const Matrix& a) {
  Matrix y(x.rows(), a.cols());
  for (std::size_t k = 0; k < x.rows(); ++k)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double xi = x(k, i);
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < a.cols(); ++j) y(k, j) += xi * a(i, j);
    }
  return y;
}

}  // namespace

const char* to_string(LayerVariant v) {
  for (const auto& k : kVariants)
    if (k.v == v) return k.name;
  return "unknown";
}

LayerVariant layer_variant_from_string(const std::string& text) {
  for (const auto& k : kVariants)
    if (text == k.name) return k.v;
  throw ValidationError("unknown variant '" + text + "'");
}

LayerExpResult run_layer_experiment(const LayerExpOptions& options) {
  require(options.rows > 0 && options.cols > 0, "layer experiment: empty crossbar");
  require(options.samples >= 2, "layer experiment: need at least 2 input samples");

  CrossbarConfig config = options.physical;
  config.rows = options.rows;
  config.cols = options.cols;
  config.validate();

  const Matrix a = gen_weight_matrix(options.kernel_type, options.rows, options.cols,
                                     derive_seed(options.seed, 1), options.kernel);
  const Matrix x =
      gen_input_vectors(options.samples, options.rows, options.sparsity, derive_seed(options.seed, 2));
  const Matrix ideal = exact_product(x, a);

  LayerExpResult result;
  result.input_sparsity = sparsity(x.data());

  EngineBuildOptions base;
  base.x_max = 1.0;
  base.dac_bits = options.dac_bits;
  base.adc_bits = options.adc_bits;
  base.cali_samples = options.cali_samples;
  base.amplitudes = options.amplitudes;
  base.range_refine_halvings = options.range_refine_halvings;
  base.seed = derive_seed(options.seed, 3);

  const auto evaluate = [&](const std::string& name, const EngineBuildOptions& opts) {
    EngineBuildReport report;
    const VmmEngine engine = build_engine(a, config, x, opts, &report);
    VariantResult r;
    r.variant = name;
    r.amplitude = opts.conversion == ConversionMode::None ? 0.0 : report.amplitude;
    r.range_scale = report.range_scale;
    r.converged = report.conversion_converged;
    r.stats = summarize_errors(engine.execute_batch(x, options.threads), ideal);
    result.variants.push_back(std::move(r));
  };

  for (LayerVariant v : options.variants) {
    EngineBuildOptions opts = base;
    switch (v) {
      case LayerVariant::Direct:
        opts.conversion = ConversionMode::None;
        opts.calibrate = false;
        break;
      case LayerVariant::Original:
        opts.conversion = ConversionMode::Original;
        opts.calibrate = false;
        break;
      case LayerVariant::Uncalibrated:
        opts.conversion = ConversionMode::Optimized;
        opts.calibrate = false;
        break;
      case LayerVariant::Improved:
        opts.conversion = ConversionMode::Optimized;
        opts.calibrate = true;
        break;
    }
    evaluate(to_string(v), opts);
  }

  if (options.amplitude_sweep) {
    for (double amp : options.amplitudes) {
      EngineBuildOptions opts = base;
      opts.conversion = ConversionMode::Optimized;
      opts.amplitudes = {amp};
      opts.calibrate = true;
      evaluate("amplitude", opts);
    }
  }
  return result;
}

}  // namespace xbar
