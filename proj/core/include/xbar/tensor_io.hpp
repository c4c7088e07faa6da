#pragma once

// Tensor files: "MTEN", u32 version (1), u32 rank, u32 dims[rank], then
// float32 values, row-major. All fields little-endian. Images are rank 3
// (H, W, C); batches are rank 4 (N, H, W, C).

#include <cstdint>
#include <string>
#include <vector>

#include "xbar/tensor.hpp"

namespace xbar {

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
};

Tensor read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor& t);

Tensor decode_tensor(const std::string& bytes, const std::string& origin = "<memory>");
std::string encode_tensor(const Tensor& t);

/// Rank-3 tensor -> one image; rank-4 -> N images. Other ranks fail.
std::vector<FeatureMap> tensor_to_images(const Tensor& t);
Tensor images_to_tensor(const std::vector<FeatureMap>& images);
Tensor image_to_tensor(const FeatureMap& image);

}  // namespace xbar
