// xbar: command-line front end.
//
// Exit codes: 0 success, 1 usage or file error, 2 validation error,
// 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "xbar/errors.hpp"
#include "xbar/parallel.hpp"

int main(int argc, char** argv) {
  using namespace xbar::cli;
  CLI::App app{"Memristor-crossbar CNN inference simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  GlobalOptions global;
  app.add_option("--threads", global.threads,
                 "Worker threads (default: XBAR_THREADS, else 1)")
      ->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Solve one crossbar and write currents and node voltages");
  simulate->add_option("--config", sim.config, "Experiment config JSON")->check(CLI::ExistingFile);
  simulate->add_option("--conductance", sim.conductance,
                       "Conductances in siemens: JSON array of rows or rank-2 tensor file")
      ->required();
  simulate->add_option("--input", sim.input, "Input voltages: JSON array or rank-1 tensor file")
      ->required();
  simulate->add_option("--out", sim.out, "Output JSON path")->required();

  BuildEngineArgs build;
  auto* build_cmd = app.add_subcommand("build-engine", "Map, convert and calibrate one weight matrix");
  build_cmd->add_option("--config", build.config, "Experiment config JSON")->check(CLI::ExistingFile);
  build_cmd->add_option("--weights", build.weights,
                        "Weights: rank-2 (rows, cols) or rank-4 (kh, kw, in_c, out_c) tensor")
      ->required();
  build_cmd->add_option("--samples", build.samples,
                        "Input vectors: rank-2 (n, rows) tensor, or images (rank 3/4) "
                        "lowered with the kernel geometry")
      ->required();
  build_cmd->add_option("--stride", build.stride, "Convolution stride for image samples");
  build_cmd->add_option("--padding", build.padding, "Zero padding for image samples");
  build_cmd->add_option("--seed", build.seed, "Overrides the config seed");
  build_cmd->add_option("--out", build.out, "Engine descriptor path (blob written as <stem>.bin)")
      ->required();

  LayerExpArgs layer;
  auto* layer_cmd = app.add_subcommand("layer-exp", "Single-layer accuracy study on synthetic data");
  layer_cmd->add_option("--config", layer.config, "Experiment config JSON")->check(CLI::ExistingFile);
  layer_cmd->add_option("--kernel-type", layer.kernel_type, "1 Gaussian, 2 dead-zone, 3 ternary")
      ->check(CLI::Range(1, 3));
  layer_cmd->add_option("--crossbar-size", layer.crossbar_size, "ROWSxCOLS, e.g. 144x16");
  layer_cmd->add_option("--sparsity", layer.sparsity, "Input sparsity in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  layer_cmd->add_option("--samples", layer.samples, "Evaluation input vectors")
      ->check(CLI::Range(2, 1000000));
  layer_cmd->add_option("--variants", layer.variants,
                        "Comma list of direct,original,uncalibrated,improved");
  layer_cmd->add_flag("--conv-amp-sweep", layer.amp_sweep,
                      "Add one calibrated variant per conversion amplitude");
  layer_cmd->add_option("--seed", layer.seed, "Overrides the config seed");
  layer_cmd->add_option("--out", layer.out, "Output directory")->required();

  RunNetArgs net;
  auto* net_cmd = app.add_subcommand("run-net", "Quantization sweep with per-layer error reports");
  net_cmd->add_option("--config", net.config, "Experiment config JSON")->check(CLI::ExistingFile);
  net_cmd->add_option("--model", net.model, "Model manifest JSON")->required();
  net_cmd->add_option("--images", net.images, "Image tensor file (rank 3 or 4)")->required();
  net_cmd->add_option("--labels", net.labels, "Optional JSON array of class labels");
  net_cmd->add_option("--bits", net.bits, "Comma list of bit settings, e.g. none,8,6,4");
  net_cmd->add_option("--taps", net.taps, "Weight layers to report: all, none or a comma list");
  net_cmd->add_option("--seed", net.seed, "Overrides the config seed");
  net_cmd->add_option("--out", net.out, "Output directory")->required();

  MakeModelArgs tiny;
  auto* tiny_cmd = app.add_subcommand("make-tiny-model", "Write a seeded 3-conv example model");
  tiny_cmd->add_option("--size", tiny.size, "Input height and width");
  tiny_cmd->add_option("--channels", tiny.channels, "Input channels");
  tiny_cmd->add_option("--hidden", tiny.hidden, "Hidden channels");
  tiny_cmd->add_option("--classes", tiny.classes, "Output classes");
  tiny_cmd->add_option("--kernel-type", tiny.kernel_type, "1, 2 or 3")->check(CLI::Range(1, 3));
  tiny_cmd->add_option("--seed", tiny.seed, "Weight seed");
  tiny_cmd->add_option("--out", tiny.out, "Manifest path (blob written as <stem>.bin)")->required();

  MakeModelArgs resnet;
  auto* resnet_cmd =
      app.add_subcommand("make-resnet20", "Write a ResNet-20 manifest with seeded random weights");
  resnet_cmd->add_option("--seed", resnet.seed, "Weight seed");
  resnet_cmd->add_option("--out", resnet.out, "Manifest path (blob written as <stem>.bin)")->required();

  MakeImagesArgs images;
  auto* images_cmd = app.add_subcommand("make-images", "Write seeded synthetic images in [0, 1]");
  images_cmd->add_option("--count", images.count, "Number of images")->check(CLI::PositiveNumber);
  images_cmd->add_option("--size", images.size, "Height and width")->check(CLI::PositiveNumber);
  images_cmd->add_option("--channels", images.channels, "Channels")->check(CLI::PositiveNumber);
  images_cmd->add_option("--seed", images.seed, "Seed");
  images_cmd->add_option("--out", images.out, "Tensor file path")->required();

  MappingTableArgs table;
  auto* table_cmd = app.add_subcommand("mapping-table", "Print the ResNet-20 dense-mapping table as CSV");
  table_cmd->add_option("--out", table.out, "Output CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    configure_threads(global);
    if (*simulate) return run_simulate(sim);
    if (*build_cmd) return run_build_engine(build);
    if (*layer_cmd) return run_layer_exp(layer, global);
    if (*net_cmd) return run_net(net, global);
    if (*tiny_cmd) return run_make_tiny_model(tiny);
    if (*resnet_cmd) return run_make_resnet20(resnet);
    if (*images_cmd) return run_make_images(images);
    if (*table_cmd) return run_mapping_table(table);
  } catch (const xbar::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const xbar::SolverError& e) {
    std::cerr << "numeric failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return 3;
  } catch (const xbar::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const xbar::ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const xbar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
