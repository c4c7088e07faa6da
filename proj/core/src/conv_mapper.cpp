#include "xbar/conv_mapper.hpp"

#include <algorithm>
#include <string>

#include "xbar/errors.hpp"
#include "xbar/parallel.hpp"

namespace xbar {

namespace {

std::size_t output_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t p) {
  require(s > 0, "conv: stride must be positive");
  require(k <= in + 2 * p, "conv: kernel larger than padded input");
  return (in + 2 * p - k) / s + 1;
}

}  // namespace

std::size_t ConvSpec::output_h(std::size_t in_h) const {
  return output_extent(in_h, kernel_h, stride, padding);
}

std::size_t ConvSpec::output_w(std::size_t in_w) const {
  return output_extent(in_w, kernel_w, stride, padding);
}

void ConvSpec::validate() const {
  require(kernel_h > 0 && kernel_w > 0 && in_channels > 0 && out_channels > 0 && stride > 0,
          "ConvSpec: sizes and stride must be positive");
  if (!weights.data.empty())
    require(weights.kernel_h == kernel_h && weights.kernel_w == kernel_w &&
                weights.in_channels == in_channels && weights.out_channels == out_channels,
            "ConvSpec: weight tensor shape does not match the kernel geometry");
}

std::size_t unroll_row(const ConvSpec& spec, std::size_t ic, std::size_t kh, std::size_t kw) {
  return (ic * spec.kernel_h + kh) * spec.kernel_w + kw;
}

Matrix unroll_kernel(const ConvSpec& spec) {
  spec.validate();
  require(!spec.weights.data.empty(), "unroll_kernel: spec has no weights");
  Matrix a(spec.unrolled_rows(), spec.out_channels);
  for (std::size_t ic = 0; ic < spec.in_channels; ++ic)
    for (std::size_t kh = 0; kh < spec.kernel_h; ++kh)
      for (std::size_t kw = 0; kw < spec.kernel_w; ++kw) {
        const std::size_t r = unroll_row(spec, ic, kh, kw);
        for (std::size_t oc = 0; oc < spec.out_channels; ++oc)
          a(r, oc) = spec.weights.at(kh, kw, ic, oc);
      }
  return a;
}

Matrix window_stream(const FeatureMap& fm, const ConvSpec& spec) {
  spec.validate();
  require(fm.channels == spec.in_channels,
          "window_stream: feature map has " + std::to_string(fm.channels) +
              " channels, kernel expects " + std::to_string(spec.in_channels));
  const std::size_t oh = spec.output_h(fm.height);
  const std::size_t ow = spec.output_w(fm.width);
  Matrix windows(oh * ow, spec.unrolled_rows());
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      auto row = windows.row(y * ow + x);
      for (std::size_t ic = 0; ic < spec.in_channels; ++ic)
        for (std::size_t kh = 0; kh < spec.kernel_h; ++kh) {
          const auto iy = static_cast<long long>(y * spec.stride + kh) -
                          static_cast<long long>(spec.padding);
          if (iy < 0 || iy >= static_cast<long long>(fm.height)) continue;
          for (std::size_t kw = 0; kw < spec.kernel_w; ++kw) {
            const auto ix = static_cast<long long>(x * spec.stride + kw) -
                            static_cast<long long>(spec.padding);
            if (ix < 0 || ix >= static_cast<long long>(fm.width)) continue;
            row[unroll_row(spec, ic, kh, kw)] =
                fm.at(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), ic);
          }
        }
    }
  return windows;
}

FeatureMap conv_reference(const FeatureMap& fm, const ConvSpec& spec) {
  spec.validate();
  require(!spec.weights.data.empty(), "conv_reference: spec has no weights");
  require(fm.channels == spec.in_channels, "conv_reference: channel mismatch");
  const std::size_t oh = spec.output_h(fm.height);
  const std::size_t ow = spec.output_w(fm.width);
  FeatureMap out(oh, ow, spec.out_channels);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
        double acc = 0.0;
        for (std::size_t ic = 0; ic < spec.in_channels; ++ic)
          for (std::size_t kh = 0; kh < spec.kernel_h; ++kh)
            for (std::size_t kw = 0; kw < spec.kernel_w; ++kw) {
              const auto iy = static_cast<long long>(y * spec.stride + kh) -
                              static_cast<long long>(spec.padding);
              const auto ix = static_cast<long long>(x * spec.stride + kw) -
                              static_cast<long long>(spec.padding);
              if (iy < 0 || ix < 0 || iy >= static_cast<long long>(fm.height) ||
                  ix >= static_cast<long long>(fm.width))
                continue;
              acc += fm.at(std::size_t(iy), std::size_t(ix), ic) * spec.weights.at(kh, kw, ic, oc);
            }
        out.at(y, x, oc) = acc;
      }
  return out;
}

FeatureMap conv_execute(const VmmEngine& engine, const FeatureMap& fm, const ConvSpec& spec,
                        const ConvExecOptions& options, ConvTrace* trace, ConvExecStats* stats) {
  require(engine.input_size() == spec.unrolled_rows() && engine.output_size() == spec.out_channels,
          "conv_execute: engine shape does not match the convolution");
  Matrix windows = window_stream(fm, spec);
  const std::size_t oh = spec.output_h(fm.height);
  const std::size_t ow = spec.output_w(fm.width);
  const std::size_t count = windows.rows();

  std::size_t input_clips = 0;
  const double x_max = engine.mapping().x_max;
  for (double& v : windows.data()) {
    require(v >= 0.0, "conv_execute: negative activation (inputs must be non-negative)");
    if (v > x_max) {
      v = x_max;
      ++input_clips;
    }
  }

  Matrix actual(count, spec.out_channels);
  std::vector<ClipCounter> dac_clips(count);
  std::vector<ClipCounter> adc_clips(count);
  parallel_for(
      count,
      [&](std::size_t k) {
        const Vector y = engine.execute(windows.row(k), &dac_clips[k], &adc_clips[k]);
        std::copy(y.begin(), y.end(), actual.row(k).begin());
      },
      options.threads);

  if (stats) {
    for (std::size_t k = 0; k < count; ++k) {
      stats->dac.merge(dac_clips[k]);
      stats->adc.merge(adc_clips[k]);
    }
    stats->input_clips += input_clips;
  }

  if (options.record && trace) {
    const Matrix a = unroll_kernel(spec);
    const Matrix raw = window_stream(fm, spec);
    trace->ideal = Matrix(count, spec.out_channels);
    for (std::size_t k = 0; k < count; ++k)
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const double xr = raw(k, r);
        if (xr == 0.0) continue;
        for (std::size_t oc = 0; oc < a.cols(); ++oc) trace->ideal(k, oc) += xr * a(r, oc);
      }
    trace->actual = actual;
  }

  FeatureMap out(oh, ow, spec.out_channels);
  std::copy(actual.data().begin(), actual.data().end(), out.data.begin());
  return out;
}

IterationCount iteration_count(const std::vector<LayerGeometry>& layers) {
  IterationCount result;
  for (const auto& layer : layers) {
    LayerIterations it;
    it.name = layer.name;
    it.crossbar_rows = layer.spec.unrolled_rows();
    it.crossbar_cols = layer.spec.out_channels;
    it.iterations = layer.spec.output_h(layer.in_h) * layer.spec.output_w(layer.in_w);
    it.counted = !layer.parallel;
    if (it.counted) result.total += it.iterations;
    result.layers.push_back(std::move(it));
  }
  return result;
}

}  // namespace xbar
