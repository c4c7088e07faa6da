#include "xbar/network_model.hpp"

#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include "detail/le_io.hpp"
#include "json.hpp"
#include "xbar/errors.hpp"
#include "xbar/file_io.hpp"
#include "xbar/json_conv.hpp"
#include "xbar/random.hpp"

namespace xbar {

namespace fs = std::filesystem;

namespace {

struct KindName {
  LayerKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {LayerKind::Input, "input"},         {LayerKind::Conv, "conv"},
    {LayerKind::Fc, "fc"},               {LayerKind::Relu, "relu"},
    {LayerKind::BatchNorm, "batchnorm"}, {LayerKind::GlobalAvgPool, "global_avg_pool"},
    {LayerKind::Add, "add"},             {LayerKind::Softmax, "softmax"},
};

[[noreturn]] void invalid(const std::string& layer, const std::string& what) {
  throw ValidationError("layer '" + layer + "': " + what);
}

std::size_t expected_predecessors(LayerKind kind) {
  switch (kind) {
    case LayerKind::Input: return 0;
    case LayerKind::Add: return 2;
    default: return 1;
  }
}

std::size_t float_count(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::Conv:
    case LayerKind::Fc:
      return l.conv.unrolled_rows() * l.conv.out_channels + (l.has_bias ? l.conv.out_channels : 0);
    case LayerKind::BatchNorm: return 2 * l.scale.size();
    default: return 0;
  }
}

float as_float(double v) { return static_cast<float>(v); }

}  // namespace

const char* to_string(LayerKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& text) {
  for (const auto& k : kKinds)
    if (text == k.name) return k.kind;
  throw ValidationError("unknown layer kind '" + text + "'");
}

std::size_t NetworkModel::index_of(const std::string& layer) const {
  for (std::size_t k = 0; k < layers.size(); ++k)
    if (layers[k].name == layer) return k;
  throw ContractViolation("no layer named '" + layer + "'");
}

std::vector<std::size_t> NetworkModel::weight_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < layers.size(); ++k)
    if (layers[k].is_weight_layer()) out.push_back(k);
  return out;
}

std::vector<LayerShape> validate_model(const NetworkModel& model) {
  if (model.layers.empty()) throw ValidationError("model has no layers");
  std::set<std::string> seen;
  std::set<std::string> consumed;
  std::vector<LayerShape> shapes;
  std::size_t inputs = 0, softmaxes = 0;

  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const LayerSpec& l = model.layers[k];
    if (l.name.empty()) throw ValidationError("layer " + std::to_string(k) + " has no name");
    if (seen.count(l.name)) invalid(l.name, "duplicate name");
    if (l.predecessors.size() != expected_predecessors(l.kind))
      invalid(l.name, "expected " + std::to_string(expected_predecessors(l.kind)) +
                          " predecessor(s), got " + std::to_string(l.predecessors.size()));
    std::vector<LayerShape> in;
    for (const auto& p : l.predecessors) {
      if (!seen.count(p)) invalid(l.name, "predecessor '" + p + "' is not an earlier layer");
      if (model.layers[model.index_of(p)].kind == LayerKind::Softmax)
        invalid(l.name, "softmax output cannot feed another layer");
      consumed.insert(p);
      in.push_back(shapes[model.index_of(p)]);
    }

    LayerShape out;
    switch (l.kind) {
      case LayerKind::Input:
        ++inputs;
        if (k != 0) invalid(l.name, "the input layer must come first");
        if (!l.height || !l.width || !l.channels) invalid(l.name, "input shape must be positive");
        out = {l.height, l.width, l.channels};
        break;
      case LayerKind::Conv:
      case LayerKind::Fc: {
        try {
          l.conv.validate();
        } catch (const ContractViolation& e) {
          invalid(l.name, e.what());
        }
        if (l.conv.weights.data.empty()) invalid(l.name, "missing weights");
        if (in[0].channels != l.conv.in_channels)
          invalid(l.name, "input has " + std::to_string(in[0].channels) + " channels, expected " +
                              std::to_string(l.conv.in_channels));
        if (l.kind == LayerKind::Fc && (in[0].height != 1 || in[0].width != 1))
          invalid(l.name, "fc input must be 1x1 (pool first)");
        if (l.conv.kernel_h > in[0].height + 2 * l.conv.padding ||
            l.conv.kernel_w > in[0].width + 2 * l.conv.padding)
          invalid(l.name, "kernel larger than padded input");
        if (l.has_bias && l.bias.size() != l.conv.out_channels) invalid(l.name, "bias size mismatch");
        out = {l.conv.output_h(in[0].height), l.conv.output_w(in[0].width), l.conv.out_channels};
        break;
      }
      case LayerKind::BatchNorm:
        if (l.scale.size() != in[0].channels || l.bias.size() != in[0].channels)
          invalid(l.name, "scale/bias length must equal the channel count");
        out = in[0];
        break;
      case LayerKind::Relu:
        out = in[0];
        break;
      case LayerKind::GlobalAvgPool:
        out = {1, 1, in[0].channels};
        break;
      case LayerKind::Add:
        if (!(in[0] == in[1])) invalid(l.name, "operand shapes differ");
        out = in[0];
        break;
      case LayerKind::Softmax:
        ++softmaxes;
        if (in[0].height != 1 || in[0].width != 1) invalid(l.name, "softmax input must be 1x1xC");
        out = in[0];
        break;
    }
    seen.insert(l.name);
    shapes.push_back(out);
  }
  if (inputs != 1) throw ValidationError("model must have exactly one input layer");
  if (softmaxes != 1 || model.layers.back().kind != LayerKind::Softmax)
    throw ValidationError("model must end in exactly one softmax layer");
  for (std::size_t k = 0; k + 1 < model.layers.size(); ++k)
    if (!consumed.count(model.layers[k].name))
      throw ValidationError("layer '" + model.layers[k].name + "' output is never used");
  return shapes;
}

namespace {

Json layer_params(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::Input:
      return {{"height", l.height}, {"width", l.width}, {"channels", l.channels}};
    case LayerKind::Conv:
      return {{"kernel_h", l.conv.kernel_h},         {"kernel_w", l.conv.kernel_w},
              {"in_channels", l.conv.in_channels},   {"out_channels", l.conv.out_channels},
              {"stride", l.conv.stride},             {"padding", l.conv.padding},
              {"bias", l.has_bias}};
    case LayerKind::Fc:
      return {{"in_features", l.conv.in_channels},
              {"out_features", l.conv.out_channels},
              {"bias", l.has_bias}};
    case LayerKind::BatchNorm:
      return {{"channels", l.scale.size()}};
    default:
      return Json::object();
  }
}

void parse_params(LayerSpec& l, const Json& p) {
  const auto get = [&](const char* key) -> std::size_t {
    if (!p.contains(key)) invalid(l.name, std::string("missing params.") + key);
    const auto& v = p.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      invalid(l.name, std::string("params.") + key + " must be a non-negative integer");
    return v.get<std::size_t>();
  };
  const auto get_bool = [&](const char* key) {
    if (!p.contains(key)) return false;
    if (!p.at(key).is_boolean()) invalid(l.name, std::string("params.") + key + " must be boolean");
    return p.at(key).get<bool>();
  };
  switch (l.kind) {
    case LayerKind::Input:
      reject_unknown_keys(p, {"height", "width", "channels"}, "input params");
      l.height = get("height");
      l.width = get("width");
      l.channels = get("channels");
      break;
    case LayerKind::Conv:
      reject_unknown_keys(p, {"kernel_h", "kernel_w", "in_channels", "out_channels", "stride",
                              "padding", "bias"},
                          "conv params");
      l.conv.kernel_h = get("kernel_h");
      l.conv.kernel_w = get("kernel_w");
      l.conv.in_channels = get("in_channels");
      l.conv.out_channels = get("out_channels");
      l.conv.stride = p.contains("stride") ? get("stride") : 1;
      l.conv.padding = p.contains("padding") ? get("padding") : 0;
      l.has_bias = get_bool("bias");
      break;
    case LayerKind::Fc:
      reject_unknown_keys(p, {"in_features", "out_features", "bias"}, "fc params");
      l.conv.in_channels = get("in_features");
      l.conv.out_channels = get("out_features");
      l.has_bias = get_bool("bias");
      break;
    case LayerKind::BatchNorm:
      reject_unknown_keys(p, {"channels"}, "batchnorm params");
      l.scale.resize(get("channels"));
      l.bias.resize(l.scale.size());
      break;
    default:
      reject_unknown_keys(p, {}, "params");
      break;
  }
}

void decode_weights(LayerSpec& l, const unsigned char* p) {
  if (l.is_weight_layer()) {
    if (l.conv.kernel_h == 0 || l.conv.kernel_w == 0 || l.conv.in_channels == 0 ||
        l.conv.out_channels == 0)
      invalid(l.name, "kernel dimensions must be positive");
    l.conv.weights = Kernel4(l.conv.kernel_h, l.conv.kernel_w, l.conv.in_channels,
                             l.conv.out_channels);
    for (std::size_t ic = 0; ic < l.conv.in_channels; ++ic)
      for (std::size_t kh = 0; kh < l.conv.kernel_h; ++kh)
        for (std::size_t kw = 0; kw < l.conv.kernel_w; ++kw) {
          const std::size_t r = unroll_row(l.conv, ic, kh, kw);
          for (std::size_t oc = 0; oc < l.conv.out_channels; ++oc)
            l.conv.weights.at(kh, kw, ic, oc) =
                detail::get_f32(p + 4 * (r * l.conv.out_channels + oc));
        }
    if (l.has_bias) {
      const unsigned char* b = p + 4 * l.conv.unrolled_rows() * l.conv.out_channels;
      l.bias.resize(l.conv.out_channels);
      for (std::size_t oc = 0; oc < l.bias.size(); ++oc) l.bias[oc] = detail::get_f32(b + 4 * oc);
    }
  } else if (l.kind == LayerKind::BatchNorm) {
    const std::size_t c = l.scale.size();
    for (std::size_t k = 0; k < c; ++k) {
      l.scale[k] = detail::get_f32(p + 4 * k);
      l.bias[k] = detail::get_f32(p + 4 * (c + k));
    }
  }
}

void encode_weights(const LayerSpec& l, std::string& blob) {
  if (l.is_weight_layer()) {
    const Matrix a = unroll_kernel(l.conv);
    for (double v : a.data()) detail::put_f32(blob, as_float(v));
    if (l.has_bias)
      for (double v : l.bias) detail::put_f32(blob, as_float(v));
  } else if (l.kind == LayerKind::BatchNorm) {
    for (double v : l.scale) detail::put_f32(blob, as_float(v));
    for (double v : l.bias) detail::put_f32(blob, as_float(v));
  }
}

}  // namespace

NetworkModel load_model(const std::string& manifest_path) {
  Json j;
  try {
    j = Json::parse(read_file(manifest_path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(manifest_path + ": " + e.what());
  }
  NetworkModel model;
  std::string blob;
  try {
    reject_unknown_keys(j, {"name", "layers", "blob_file", "blob_sha256"}, "manifest");
    model.name = j.at("name").get<std::string>();
    model.blob_file = j.at("blob_file").get<std::string>();
    model.blob_sha256 = j.at("blob_sha256").get<std::string>();
    const fs::path blob_path = fs::absolute(manifest_path).parent_path() / model.blob_file;
    blob = read_file(blob_path.string());
    if (sha256_hex(blob) != model.blob_sha256)
      throw ValidationError(blob_path.string() + ": checksum mismatch");

    for (const auto& jl : j.at("layers")) {
      reject_unknown_keys(jl, {"name", "kind", "params", "predecessors", "blob_offset", "blob_len"},
                          "layer");
      LayerSpec l;
      l.name = jl.at("name").get<std::string>();
      l.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
      l.predecessors = jl.value("predecessors", std::vector<std::string>{});
      parse_params(l, jl.value("params", Json::object()));
      l.blob_offset = jl.value("blob_offset", std::size_t{0});
      l.blob_len = jl.value("blob_len", std::size_t{0});
      const std::size_t need = 4 * float_count(l);
      if (l.blob_len != need)
        invalid(l.name, "blob_len " + std::to_string(l.blob_len) + " but shape needs " +
                            std::to_string(need));
      if (need && (l.blob_offset > blob.size() || blob.size() - l.blob_offset < need))
        invalid(l.name, "blob range exceeds the blob file");
      if (need) decode_weights(l, reinterpret_cast<const unsigned char*>(blob.data()) + l.blob_offset);
      model.layers.push_back(std::move(l));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(manifest_path + ": " + e.what());
  }
  validate_model(model);
  return model;
}

void save_model(NetworkModel& model, const std::string& manifest_path,
                const std::string& blob_path) {
  validate_model(model);
  std::string blob;
  for (auto& l : model.layers) {
    l.blob_offset = blob.size();
    encode_weights(l, blob);
    l.blob_len = blob.size() - l.blob_offset;
    if (l.blob_len == 0) l.blob_offset = 0;
  }
  write_file(blob_path, blob);
  const fs::path base = fs::absolute(manifest_path).parent_path();
  model.blob_file = fs::absolute(blob_path).lexically_relative(base).generic_string();
  model.blob_sha256 = sha256_hex(blob);

  Json layers = Json::array();
  for (const auto& l : model.layers)
    layers.push_back({{"name", l.name},
                      {"kind", to_string(l.kind)},
                      {"params", layer_params(l)},
                      {"predecessors", l.predecessors},
                      {"blob_offset", l.blob_offset},
                      {"blob_len", l.blob_len}});
  const Json j{{"name", model.name},
               {"layers", layers},
               {"blob_file", model.blob_file},
               {"blob_sha256", model.blob_sha256}};
  write_file(manifest_path, j.dump(2) + "\n");
}

namespace {

LayerSpec make_layer(std::string name, LayerKind kind, std::vector<std::string> preds) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = kind;
  l.predecessors = std::move(preds);
  return l;
}

LayerSpec make_conv(std::string name, std::string pred, std::size_t k, std::size_t in_c,
                    std::size_t out_c, std::size_t stride, KernelType type, std::uint64_t seed) {
  LayerSpec l = make_layer(std::move(name), LayerKind::Conv, {std::move(pred)});
  l.conv.kernel_h = k;
  l.conv.kernel_w = k;
  l.conv.in_channels = in_c;
  l.conv.out_channels = out_c;
  l.conv.stride = stride;
  l.conv.padding = k / 2;
  KernelOptions opts;
  if (type != KernelType::Ternary) opts.sigma = std::sqrt(2.0 / double(k * k * in_c));
  l.conv.weights = gen_kernel(type, k, k, in_c, out_c, seed, opts);
  for (double& w : l.conv.weights.data) w = as_float(w);
  return l;
}

LayerSpec make_bn(std::string name, std::string pred, std::size_t channels) {
  LayerSpec l = make_layer(std::move(name), LayerKind::BatchNorm, {std::move(pred)});
  l.scale.assign(channels, 1.0);
  l.bias.assign(channels, 0.0);
  return l;
}

}  // namespace

NetworkModel make_tiny_model(std::size_t height, std::size_t width, std::size_t channels,
                             std::size_t hidden, std::size_t num_classes, KernelType type,
                             std::uint64_t seed) {
  NetworkModel m;
  m.name = "tiny3conv";
  LayerSpec in = make_layer("input", LayerKind::Input, {});
  in.height = height;
  in.width = width;
  in.channels = channels;
  m.layers.push_back(in);
  m.layers.push_back(make_conv("conv1", "input", 3, channels, hidden, 1, type, derive_seed(seed, 1)));
  m.layers.push_back(make_layer("relu1", LayerKind::Relu, {"conv1"}));
  m.layers.push_back(make_conv("conv2", "relu1", 3, hidden, hidden, 1, type, derive_seed(seed, 2)));
  m.layers.push_back(make_layer("relu2", LayerKind::Relu, {"conv2"}));
  m.layers.push_back(
      make_conv("conv3", "relu2", 3, hidden, num_classes, 1, type, derive_seed(seed, 3)));
  m.layers.push_back(make_layer("pool", LayerKind::GlobalAvgPool, {"conv3"}));
  m.layers.push_back(make_layer("softmax", LayerKind::Softmax, {"pool"}));
  validate_model(m);
  return m;
}

NetworkModel make_resnet20_model(std::uint64_t seed) {
  NetworkModel m;
  m.name = "resnet20";
  std::uint64_t stream = 0;
  const auto next_seed = [&] { return derive_seed(seed, ++stream); };
  const KernelType t = KernelType::Gaussian;

  LayerSpec in = make_layer("input", LayerKind::Input, {});
  in.height = 32;
  in.width = 32;
  in.channels = 3;
  m.layers.push_back(in);
  m.layers.push_back(make_conv("Conv0", "input", 3, 3, 16, 1, t, next_seed()));
  m.layers.push_back(make_bn("bn0", "Conv0", 16));
  m.layers.push_back(make_layer("relu0", LayerKind::Relu, {"bn0"}));

  std::string x = "relu0";
  std::size_t channels = 16;
  int conv = 1;
  const int sums[] = {1, 4, 7};  // blocks with a projection shortcut
  for (int block = 1; block <= 9; ++block) {
    const std::size_t out_c = block <= 3 ? 16 : block <= 6 ? 32 : 64;
    const std::size_t stride = (block == 4 || block == 7) ? 2 : 1;
    const std::string a = "Conv" + std::to_string(conv++);
    const std::string b = "Conv" + std::to_string(conv++);
    const std::string tag = std::to_string(block);
    m.layers.push_back(make_conv(a, x, 3, channels, out_c, stride, t, next_seed()));
    m.layers.push_back(make_bn("bn" + a.substr(4), a, out_c));
    m.layers.push_back(make_layer("relu_a" + tag, LayerKind::Relu, {"bn" + a.substr(4)}));
    m.layers.push_back(make_conv(b, "relu_a" + tag, 3, out_c, out_c, 1, t, next_seed()));
    m.layers.push_back(make_bn("bn" + b.substr(4), b, out_c));

    std::string shortcut = x;
    for (int s = 0; s < 3; ++s)
      if (sums[s] == block) {
        const std::string name = "Sum" + std::to_string(s + 1);
        m.layers.push_back(make_conv(name, x, 1, channels, out_c, stride, t, next_seed()));
        shortcut = name;
      }
    m.layers.push_back(make_layer("add" + tag, LayerKind::Add, {"bn" + b.substr(4), shortcut}));
    m.layers.push_back(make_layer("relu_b" + tag, LayerKind::Relu, {"add" + tag}));
    x = "relu_b" + tag;
    channels = out_c;
  }
  m.layers.push_back(make_layer("pool", LayerKind::GlobalAvgPool, {x}));
  LayerSpec fc = make_conv("FC", "pool", 1, 64, 10, 1, t, next_seed());
  fc.kind = LayerKind::Fc;
  fc.has_bias = true;
  fc.bias.assign(10, 0.0);
  m.layers.push_back(fc);
  m.layers.push_back(make_layer("softmax", LayerKind::Softmax, {"FC"}));
  validate_model(m);
  return m;
}

}  // namespace xbar
