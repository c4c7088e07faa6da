#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace xbar {

/// Feature map in (row, col, channel) order.
struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return data[(r * width + c) * channels + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return data[(r * width + c) * channels + ch];
  }
  bool same_shape(const FeatureMap& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool operator==(const FeatureMap&) const = default;
};

/// Convolution kernel indexed (kh, kw, in_c, out_c), row-major.
struct Kernel4 {
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<double> data;

  Kernel4() = default;
  Kernel4(std::size_t kh, std::size_t kw, std::size_t ic, std::size_t oc, double fill = 0.0)
      : kernel_h(kh), kernel_w(kw), in_channels(ic), out_channels(oc),
        data(kh * kw * ic * oc, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  double& at(std::size_t kh, std::size_t kw, std::size_t ic, std::size_t oc) {
    return data[((kh * kernel_w + kw) * in_channels + ic) * out_channels + oc];
  }
  double at(std::size_t kh, std::size_t kw, std::size_t ic, std::size_t oc) const {
    return data[((kh * kernel_w + kw) * in_channels + ic) * out_channels + oc];
  }
  bool operator==(const Kernel4&) const = default;
};

}  // namespace xbar
