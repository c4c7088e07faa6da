#include <gtest/gtest.h>

#include <filesystem>

#include "test_support.hpp"
#include "xbar/errors.hpp"
#include "xbar/file_io.hpp"
#include "xbar/json_conv.hpp"
#include "xbar/metrics.hpp"
#include "xbar/tensor_io.hpp"
#include "xbar/vmm_core.hpp"

namespace xbar {
namespace {

VmmEngine small_engine(std::uint64_t seed, EngineBuildReport* report = nullptr) {
  const CrossbarConfig c = CrossbarConfig::defaults(18, 5);
  const Matrix a = gen_weight_matrix(KernelType::DeadZone, 18, 5, seed);
  EngineBuildOptions opts;
  opts.seed = seed;
  opts.dac_bits = 8;
  opts.adc_bits = 8;
  opts.range_refine_halvings = 2;
  return build_engine(a, c, gen_input_vectors(40, 18, 0.5, seed + 1), opts, report);
}

TEST(EngineIo, RoundTripPreservesBehaviour) {
  testing::TempDir dir("engine");
  EngineBuildReport report;
  const VmmEngine e = small_engine(3, &report);
  save_engine(e, dir.file("e.json"), dir.file("e.bin"), &report);
  const VmmEngine back = load_engine(dir.file("e.json"));
  EXPECT_EQ(back.g_target(), e.g_target());
  EXPECT_EQ(back.g_converted(), e.g_converted());
  EXPECT_EQ(back.mapping(), e.mapping());
  EXPECT_EQ(back.calibration(), e.calibration());
  EXPECT_EQ(back.dac(), e.dac());
  EXPECT_EQ(back.adc(), e.adc());
  EXPECT_EQ(back.v_conv(), e.v_conv());
  Matrix xs = gen_input_vectors(10, 18, 0.3, 8);
  for (double& v : xs.data()) v *= 0.5 * e.mapping().x_max;
  EXPECT_EQ(back.execute_batch(xs), e.execute_batch(xs));

  const Json j = Json::parse(testing::slurp(dir.file("e.json")));
  EXPECT_EQ(j.at("format"), "xbar-engine");
  EXPECT_EQ(j.at("blob").at("file"), "e.bin");
  EXPECT_EQ(j.at("blob").at("bytes"), 2u * 18u * 5u * 8u);
  EXPECT_TRUE(j.contains("build"));
}

TEST(EngineIo, RebuildIsByteIdentical) {
  testing::TempDir dir("engine_rebuild");
  save_engine(small_engine(5), dir.file("a.json"), dir.file("a.bin"));
  save_engine(small_engine(5), dir.file("b.json"), dir.file("b.bin"));
  EXPECT_EQ(testing::slurp(dir.file("a.bin")), testing::slurp(dir.file("b.bin")));
  std::string ja = testing::slurp(dir.file("a.json"));
  std::string jb = testing::slurp(dir.file("b.json"));
  // only the blob name differs
  const auto pos = jb.find("\"b.bin\"");
  ASSERT_NE(pos, std::string::npos);
  jb.replace(pos, 7, "\"a.bin\"");
  EXPECT_EQ(ja, jb);
}

TEST(EngineIo, CorruptFilesAreRejected) {
  testing::TempDir dir("engine_bad");
  save_engine(small_engine(7), dir.file("e.json"), dir.file("e.bin"));
  std::string blob = testing::slurp(dir.file("e.bin"));

  std::string flipped = blob;
  flipped[17] ^= 0x01;
  testing::spit(dir.file("e.bin"), flipped);
  EXPECT_THROW(load_engine(dir.file("e.json")), ValidationError);

  testing::spit(dir.file("e.bin"), blob.substr(0, blob.size() - 8));
  EXPECT_THROW(load_engine(dir.file("e.json")), ValidationError);

  testing::spit(dir.file("e.bin"), blob);
  EXPECT_NO_THROW(load_engine(dir.file("e.json")));

  testing::spit(dir.file("e.json"), "{\"format\": \"something-else\"}");
  EXPECT_THROW(load_engine(dir.file("e.json")), ValidationError);
  testing::spit(dir.file("e.json"), "{ not json");
  EXPECT_THROW(load_engine(dir.file("e.json")), ValidationError);
  EXPECT_THROW(load_engine(dir.file("missing.json")), IoError);
}

TEST(TensorIo, EncodeDecodeProperties) {
  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    Tensor x;
    const std::size_t rank = 1 + rng.below(4);
    std::size_t n = 1;
    for (std::size_t d = 0; d < rank; ++d) {
      x.dims.push_back(std::uint32_t(1 + rng.below(5)));
      n *= x.dims.back();
    }
    for (std::size_t k = 0; k < n; ++k) x.values.push_back(float(rng.normal()));
    const std::string bytes = encode_tensor(x);
    EXPECT_EQ(bytes.size(), 12 + 4 * rank + 4 * n);
    const Tensor y = decode_tensor(bytes);
    EXPECT_EQ(y.dims, x.dims);
    EXPECT_EQ(y.values, x.values);
  }
  Tensor one{{2}, {1.0f, -2.5f}};
  const std::string bytes = encode_tensor(one);
  EXPECT_EQ(bytes.substr(0, 4), "MTEN");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);  // version, little-endian
  EXPECT_THROW(decode_tensor(bytes.substr(0, bytes.size() - 1)), ValidationError);
  EXPECT_THROW(decode_tensor("MTEX" + bytes.substr(4)), ValidationError);
}

TEST(TensorIo, ImagesKeepHwcOrder) {
  FeatureMap fm(2, 3, 2);
  for (std::size_t k = 0; k < fm.size(); ++k) fm.data[k] = 0.25 * double(k);
  const Tensor t = images_to_tensor({fm, fm});
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{2, 2, 3, 2}));
  const auto back = tensor_to_images(t);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1], fm);
  EXPECT_EQ(tensor_to_images(image_to_tensor(fm)).front(), fm);
  EXPECT_THROW(tensor_to_images(Tensor{{4}, {0, 0, 0, 0}}), ValidationError);
}

TEST(FileIo, Sha256KnownAnswer) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

}  // namespace
}  // namespace xbar
