#include "xbar/resnet20.hpp"

#include <string>

namespace xbar {

namespace {

LayerGeometry conv(std::string name, std::size_t k, std::size_t in_c, std::size_t out_c,
                   std::size_t stride, std::size_t in_hw, bool parallel = false) {
  LayerGeometry g;
  g.name = std::move(name);
  g.spec.kernel_h = k;
  g.spec.kernel_w = k;
  g.spec.in_channels = in_c;
  g.spec.out_channels = out_c;
  g.spec.stride = stride;
  g.spec.padding = k == 3 ? 1 : 0;
  g.in_h = in_hw;
  g.in_w = in_hw;
  g.parallel = parallel;
  return g;
}

std::string prefix_of(const std::string& name) {
  std::size_t end = name.size();
  while (end > 0 && name[end - 1] >= '0' && name[end - 1] <= '9') --end;
  return name.substr(0, end);
}

std::string suffix_of(const std::string& name) { return name.substr(prefix_of(name).size()); }

}  // namespace

std::vector<LayerGeometry> resnet20_geometry() {
  std::vector<LayerGeometry> l;
  l.push_back(conv("Conv0", 3, 3, 16, 1, 32));
  for (int i = 1; i <= 6; ++i) {
    l.push_back(conv("Conv" + std::to_string(i), 3, 16, 16, 1, 32));
    if (i == 2) l.push_back(conv("Sum1", 1, 16, 16, 1, 32, true));
  }
  l.push_back(conv("Sum2", 1, 16, 32, 2, 32, true));
  l.push_back(conv("Conv7", 3, 16, 32, 2, 32));
  for (int i = 8; i <= 12; ++i) l.push_back(conv("Conv" + std::to_string(i), 3, 32, 32, 1, 16));
  l.push_back(conv("Sum3", 1, 32, 64, 2, 16, true));
  l.push_back(conv("Conv13", 3, 32, 64, 2, 16));
  for (int i = 14; i <= 18; ++i) l.push_back(conv("Conv" + std::to_string(i), 3, 64, 64, 1, 8));
  l.push_back(conv("FC", 1, 64, 10, 1, 1));
  return l;
}

std::vector<MappingTableRow> group_mapping_rows(const std::vector<LayerGeometry>& layers) {
  const IterationCount counts = iteration_count(layers);
  std::vector<MappingTableRow> rows;
  std::string last_kernel;
  std::string first_suffix;
  std::string last_prefix;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& s = layers[k].spec;
    const std::string kernel = std::to_string(s.kernel_h) + "*" + std::to_string(s.kernel_w) +
                               "*" + std::to_string(s.in_channels) + "*" +
                               std::to_string(s.out_channels);
    const std::string crossbar =
        std::to_string(counts.layers[k].crossbar_rows) + "*" +
        std::to_string(counts.layers[k].crossbar_cols);
    const std::string prefix = prefix_of(layers[k].name);
    const std::string suffix = suffix_of(layers[k].name);
    const bool extend = !rows.empty() && prefix == last_prefix && !suffix.empty() &&
                        kernel == last_kernel && rows.back().crossbar == crossbar &&
                        rows.back().iterations == counts.layers[k].iterations;
    if (extend) {
      rows.back().name = prefix + first_suffix + "-" + suffix;
    } else {
      rows.push_back({layers[k].name, kernel, crossbar, counts.layers[k].iterations});
      first_suffix = suffix;
    }
    last_kernel = kernel;
    last_prefix = prefix;
  }
  return rows;
}

std::vector<MappingTableRow> resnet20_mapping_table() {
  return group_mapping_rows(resnet20_geometry());
}

}  // namespace xbar
