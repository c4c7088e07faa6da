#pragma once

// CNN graphs mixing crossbar layers (conv, fc) with digital ops.
//
// Manifest (JSON):
//   {"name", "blob_file", "blob_sha256",
//    "layers": [{"name", "kind", "params", "predecessors", "blob_offset", "blob_len"}]}
// kinds: input, conv, fc, relu, batchnorm, global_avg_pool, add, softmax.
// The blob holds little-endian float32 values. A conv/fc layer stores its
// unrolled (rows x out_channels) matrix row-major, then out_channels biases
// when params.bias is true. A batchnorm layer stores scale[C] then bias[C].
// blob_offset and blob_len are in bytes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xbar/conv_mapper.hpp"
#include "xbar/matrix.hpp"
#include "xbar/metrics.hpp"

namespace xbar {

enum class LayerKind { Input, Conv, Fc, Relu, BatchNorm, GlobalAvgPool, Add, Softmax };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& text);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Relu;
  std::vector<std::string> predecessors;

  ConvSpec conv;          // conv and fc (fc is a 1x1 conv over a 1x1xC map)
  bool has_bias = false;  // conv and fc
  Vector bias;            // conv/fc bias, or batchnorm bias
  Vector scale;           // batchnorm scale

  std::size_t height = 0;  // input layer shape
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t blob_offset = 0;
  std::size_t blob_len = 0;

  bool is_weight_layer() const { return kind == LayerKind::Conv || kind == LayerKind::Fc; }
};

struct LayerShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  bool operator==(const LayerShape&) const = default;
};

struct NetworkModel {
  std::string name;
  std::vector<LayerSpec> layers;  // topological order
  std::string blob_file;
  std::string blob_sha256;

  /// Throws ContractViolation for an unknown name.
  std::size_t index_of(const std::string& layer) const;
  std::vector<std::size_t> weight_layers() const;
};

/// Checks graph structure and shapes; returns each layer's output shape.
/// Throws ValidationError.
std::vector<LayerShape> validate_model(const NetworkModel& model);

/// Reads the manifest and the blob it names (relative to the manifest),
/// verifying the checksum, offsets and shapes.
NetworkModel load_model(const std::string& manifest_path);

/// Writes the blob and manifest; assigns blob offsets and the checksum.
void save_model(NetworkModel& model, const std::string& manifest_path,
                const std::string& blob_path);

/// conv -> relu -> conv -> relu -> conv(num_classes) -> pool -> softmax
/// with weights from gen_kernel. Weights are rounded to float32.
NetworkModel make_tiny_model(std::size_t height, std::size_t width, std::size_t channels,
                             std::size_t hidden, std::size_t num_classes, KernelType type,
                             std::uint64_t seed);

/// ResNet-20 topology with seeded He-scaled Gaussian weights and identity
/// batch norm. Not a trained network.
NetworkModel make_resnet20_model(std::uint64_t seed);

}  // namespace xbar
