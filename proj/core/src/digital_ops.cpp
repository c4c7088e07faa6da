#include "xbar/digital_ops.hpp"

#include <algorithm>
#include <cmath>

#include "xbar/errors.hpp"

namespace xbar {

double relu(double x) { return x > 0.0 ? x : 0.0; }

FeatureMap relu(const FeatureMap& fm) {
  FeatureMap out = fm;
  for (double& v : out.data) v = relu(v);
  return out;
}

FeatureMap batchnorm_affine(const FeatureMap& fm, std::span<const double> scale,
                            std::span<const double> bias) {
  require(scale.size() == fm.channels && bias.size() == fm.channels,
          "batchnorm_affine: parameter count must equal channel count");
  FeatureMap out = fm;
  for (std::size_t e = 0; e < out.size(); ++e) {
    const std::size_t c = e % fm.channels;
    out.data[e] = scale[c] * fm.data[e] + bias[c];
  }
  return out;
}

FeatureMap global_avg_pool(const FeatureMap& fm) {
  require(fm.height > 0 && fm.width > 0, "global_avg_pool: empty feature map");
  FeatureMap out(1, 1, fm.channels);
  for (std::size_t r = 0; r < fm.height; ++r)
    for (std::size_t c = 0; c < fm.width; ++c)
      for (std::size_t ch = 0; ch < fm.channels; ++ch) out.data[ch] += fm.at(r, c, ch);
  const double n = double(fm.height * fm.width);
  for (double& v : out.data) v /= n;
  return out;
}

FeatureMap shortcut_add(const FeatureMap& a, const FeatureMap& b) {
  require(a.same_shape(b), "shortcut_add: operand shapes differ");
  FeatureMap out = a;
  for (std::size_t e = 0; e < out.size(); ++e) out.data[e] += b.data[e];
  return out;
}

Vector softmax(std::span<const double> v) {
  require(!v.empty(), "softmax: empty input");
  const double peak = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[k] = std::exp(v[k] - peak);
    sum += out[k];
  }
  for (double& p : out) p /= sum;
  return out;
}

}  // namespace xbar
