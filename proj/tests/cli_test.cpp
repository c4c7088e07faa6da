#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "test_support.hpp"
#include "xbar/json_conv.hpp"
#include "xbar/metrics.hpp"
#include "xbar/tensor_io.hpp"
#include "xbar/vmm_core.hpp"

namespace xbar {
namespace {

namespace fs = std::filesystem;

int xbar_cli(const std::string& args) {
  const std::string cmd = std::string(XBAR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, SimulateOneByOne) {
  testing::TempDir dir("cli_sim");
  testing::spit(dir.file("g.json"), "[[5e-5]]");
  testing::spit(dir.file("v.json"), "[0.2]");
  ASSERT_EQ(xbar_cli("simulate --conductance " + dir.file("g.json") + " --input " +
                     dir.file("v.json") + " --out " + dir.file("out.json")),
            0);
  const Json out = Json::parse(testing::slurp(dir.file("out.json")));
  // 0.2 V over 1 + 1 + 20000 + 1 + 1 ohm
  EXPECT_NEAR(out.at("i_out").at(0).get<double>(), 0.2 / 20004.0, 1e-18);
  EXPECT_LE(out.at("residual").get<double>(), 1e-12);
}

TEST(Cli, ExitCodes) {
  testing::TempDir dir("cli_codes");
  testing::spit(dir.file("g.json"), "[[5e-5, 1e-5], [2e-5, 3e-5]]");
  testing::spit(dir.file("v.json"), "[0.1, 0.2]");
  const std::string sim = "simulate --conductance " + dir.file("g.json") + " --out " +
                          dir.file("o.json") + " --input ";
  EXPECT_EQ(xbar_cli(sim + dir.file("v.json")), 0);
  EXPECT_EQ(xbar_cli(sim + dir.file("missing.json")), 1);
  EXPECT_EQ(xbar_cli("no-such-command"), 1);

  testing::spit(dir.file("bits.json"), R"({"quantization": {"dac_bits": 0}})");
  EXPECT_EQ(xbar_cli(sim + dir.file("v.json") + " --config " + dir.file("bits.json")), 2);

  testing::spit(dir.file("big.json"), "[[5e-5, 1e-2], [2e-5, 3e-5]]");
  EXPECT_EQ(xbar_cli("simulate --conductance " + dir.file("big.json") + " --input " +
                     dir.file("v.json") + " --out " + dir.file("o.json")),
            2);
  testing::spit(dir.file("short.json"), "[0.1]");
  EXPECT_EQ(xbar_cli(sim + dir.file("short.json")), 2);
}

TEST(Cli, NetworkWorkflow) {
  testing::TempDir dir("cli_net");
  ASSERT_EQ(xbar_cli("make-tiny-model --size 8 --hidden 4 --seed 2 --out " + dir.file("m.json")),
            0);
  ASSERT_EQ(xbar_cli("make-images --count 3 --size 8 --channels 3 --seed 5 --out " +
                     dir.file("img.mten")),
            0);
  testing::spit(dir.file("cfg.json"),
                R"({"network": {"calibration_images": 2, "max_engine_samples": 64},
                    "conversion": {"range_refine_halvings": 1}})");
  const std::string run = "run-net --config " + dir.file("cfg.json") + " --model " +
                          dir.file("m.json") + " --images " + dir.file("img.mten");
  ASSERT_EQ(xbar_cli(run + " --bits none,8,6,4 --taps all --out " + dir.file("a")), 0);
  const std::string csv = testing::slurp(dir.file("a/accuracy.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  for (const char* bits : {"none", "8", "6", "4"})
    for (const char* layer : {"conv1", "conv2", "conv3"})
      EXPECT_TRUE(fs::exists(dir.file("a/errors_" + std::string(bits) + "_" + layer + ".csv")));

  ASSERT_EQ(xbar_cli("--threads 2 " + run + " --bits 8 --taps conv2 --out " + dir.file("b")), 0);
  ASSERT_EQ(xbar_cli("--threads 1 " + run + " --bits 8 --taps conv2 --out " + dir.file("c")), 0);
  EXPECT_EQ(testing::slurp(dir.file("b/errors_8_conv2.csv")),
            testing::slurp(dir.file("c/errors_8_conv2.csv")));
  EXPECT_EQ(testing::slurp(dir.file("b/summary.json")), testing::slurp(dir.file("c/summary.json")));

  EXPECT_EQ(xbar_cli(run + " --bits 8 --taps conv7 --out " + dir.file("d")), 2);
}

TEST(Cli, BuildEngineIsIdempotent) {
  testing::TempDir dir("cli_engine");
  const Matrix a = gen_weight_matrix(KernelType::Gaussian, 12, 4, 3);
  const Matrix xs = gen_input_vectors(30, 12, 0.4, 4);
  Tensor w{{12, 4}, {}};
  for (double v : a.data()) w.values.push_back(float(v));
  Tensor s{{30, 12}, {}};
  for (double v : xs.data()) s.values.push_back(float(v));
  testing::spit(dir.file("w.mten"), encode_tensor(w));
  testing::spit(dir.file("s.mten"), encode_tensor(s));
  testing::spit(dir.file("cfg.json"), R"({"conversion": {"range_refine_halvings": 1}})");
  const std::string base = "build-engine --config " + dir.file("cfg.json") + " --weights " +
                           dir.file("w.mten") + " --samples " + dir.file("s.mten");
  ASSERT_EQ(xbar_cli(base + " --out " + dir.file("e.json")), 0);
  const std::string json1 = testing::slurp(dir.file("e.json"));
  const std::string blob1 = testing::slurp(dir.file("e.bin"));
  ASSERT_EQ(xbar_cli(base + " --out " + dir.file("e.json")), 0);
  EXPECT_EQ(testing::slurp(dir.file("e.json")), json1);
  EXPECT_EQ(testing::slurp(dir.file("e.bin")), blob1);
  EXPECT_NO_THROW(load_engine(dir.file("e.json")));

  Tensor bad{{30, 11}, std::vector<float>(330, 0.5f)};
  testing::spit(dir.file("bad.mten"), encode_tensor(bad));
  EXPECT_EQ(xbar_cli("build-engine --weights " + dir.file("w.mten") + " --samples " +
                     dir.file("bad.mten") + " --out " + dir.file("x.json")),
            2);
}

TEST(Cli, MappingTable) {
  testing::TempDir dir("cli_table");
  ASSERT_EQ(xbar_cli("mapping-table --out " + dir.file("t.csv")), 0);
  const std::string csv = testing::slurp(dir.file("t.csv"));
  EXPECT_NE(csv.find("Conv1-2,3*3*16*16,144*16,1024"), std::string::npos);
  EXPECT_NE(csv.find("FC,1*1*64*10,64*10,1"), std::string::npos);
  EXPECT_NE(csv.find("9089"), std::string::npos);
}

}  // namespace
}  // namespace xbar
