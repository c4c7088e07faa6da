#pragma once

// ResNet-20 for 32x32x3 inputs under dense mapping: 19 convolutions, three
// 1x1 projection shortcuts (Sum1..Sum3) and the final FC on the pooled
// 1x1x64 feature. Stage boundaries (Conv7, Conv13, Sum2, Sum3) use stride 2;
// every 3x3 convolution pads by 1.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xbar/conv_mapper.hpp"

namespace xbar {

/// Per-layer geometry in execution order; shortcuts are marked parallel.
std::vector<LayerGeometry> resnet20_geometry();

/// One row of the grouped mapping table ("Conv1-2", "3*3*16*16", ...).
struct MappingTableRow {
  std::string name;
  std::string kernel;    // kh*kw*in*out
  std::string crossbar;  // rows*cols
  std::size_t iterations = 0;
};

/// Grouped dense-mapping table of resnet20_geometry().
std::vector<MappingTableRow> resnet20_mapping_table();

/// Groups consecutive layers of identical shape and iteration count whose
/// names share a prefix, e.g. Conv1, Conv2 -> "Conv1-2".
std::vector<MappingTableRow> group_mapping_rows(const std::vector<LayerGeometry>& layers);

}  // namespace xbar
