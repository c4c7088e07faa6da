#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace xbar::cli {

struct GlobalOptions {
  std::size_t threads = 0;
};

struct SimulateArgs {
  std::string config, conductance, input, out;
};

struct BuildEngineArgs {
  std::string config, weights, samples, out;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::optional<std::uint64_t> seed;
};

struct LayerExpArgs {
  std::string config;
  int kernel_type = 1;
  std::string crossbar_size = "144x16";
  double sparsity = 0.5;
  std::size_t samples = 200;
  std::string variants = "direct,original,uncalibrated,improved";
  bool amp_sweep = false;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct RunNetArgs {
  std::string config, model, images, labels;
  std::string bits = "none,8,6,4";
  std::string taps = "all";
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct MakeModelArgs {
  std::size_t size = 8;
  std::size_t channels = 3;
  std::size_t hidden = 8;
  std::size_t classes = 10;
  int kernel_type = 1;
  std::uint64_t seed = 1;
  std::string out;
};

struct MakeImagesArgs {
  std::size_t count = 20;
  std::size_t size = 8;
  std::size_t channels = 3;
  std::uint64_t seed = 1;
  std::string out;
};

struct MappingTableArgs {
  std::string out;
};

/// --threads, else XBAR_THREADS, else 1.
void configure_threads(const GlobalOptions& global);

int run_simulate(const SimulateArgs& args);
int run_build_engine(const BuildEngineArgs& args);
int run_layer_exp(const LayerExpArgs& args, const GlobalOptions& global);
int run_net(const RunNetArgs& args, const GlobalOptions& global);
int run_make_tiny_model(const MakeModelArgs& args);
int run_make_resnet20(const MakeModelArgs& args);
int run_make_images(const MakeImagesArgs& args);
int run_mapping_table(const MappingTableArgs& args);

}  // namespace xbar::cli
