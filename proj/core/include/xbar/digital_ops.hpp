#pragma once

// Exact digital layers that run beside the crossbars.

#include <span>

#include "xbar/matrix.hpp"
#include "xbar/tensor.hpp"

namespace xbar {

double relu(double x);
FeatureMap relu(const FeatureMap& fm);

/// y = scale[c] * x + bias[c] per channel.
FeatureMap batchnorm_affine(const FeatureMap& fm, std::span<const double> scale,
                            std::span<const double> bias);

/// Mean over height and width -> 1 x 1 x C.
FeatureMap global_avg_pool(const FeatureMap& fm);

FeatureMap shortcut_add(const FeatureMap& a, const FeatureMap& b);

/// Max-subtracted softmax.
Vector softmax(std::span<const double> v);

}  // namespace xbar
