#include "xbar/tensor_io.hpp"

#include <cstring>
#include <limits>

#include "detail/le_io.hpp"
#include "xbar/errors.hpp"
#include "xbar/file_io.hpp"

namespace xbar {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'E', 'N'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string encode_tensor(const Tensor& t) {
  require(t.values.size() == t.element_count(), "encode_tensor: value count does not match dims");
  std::string out(kMagic, 4);
  detail::put_u32(out, kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) detail::put_u32(out, d);
  out.reserve(out.size() + 4 * t.values.size());
  for (float v : t.values) detail::put_f32(out, v);
  return out;
}

Tensor decode_tensor(const std::string& bytes, const std::string& origin) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  if (size < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ValidationError(origin + ": not a tensor file (bad magic)");
  if (detail::get_u32(p + 4) != kVersion)
    throw ValidationError(origin + ": unsupported tensor version");
  const std::uint32_t rank = detail::get_u32(p + 8);
  if (rank == 0 || rank > 8) throw ValidationError(origin + ": unsupported rank");
  const std::size_t header = 12 + 4 * std::size_t(rank);
  if (size < header) throw ValidationError(origin + ": truncated header");

  Tensor t;
  std::size_t count = 1;
  for (std::uint32_t k = 0; k < rank; ++k) {
    const std::uint32_t d = detail::get_u32(p + 12 + 4 * k);
    if (d == 0) throw ValidationError(origin + ": zero dimension");
    if (count > std::numeric_limits<std::size_t>::max() / d)
      throw ValidationError(origin + ": dimensions overflow");
    count *= d;
    t.dims.push_back(d);
  }
  if (size != header + 4 * count)
    throw ValidationError(origin + ": payload size does not match dims");
  t.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) t.values[k] = detail::get_f32(p + header + 4 * k);
  return t;
}

Tensor read_tensor(const std::string& path) { return decode_tensor(read_file(path), path); }

void write_tensor(const std::string& path, const Tensor& t) { write_file(path, encode_tensor(t)); }

std::vector<FeatureMap> tensor_to_images(const Tensor& t) {
  std::size_t n = 1;
  std::size_t off = 0;
  if (t.dims.size() == 4) {
    n = t.dims[0];
    off = 1;
  } else if (t.dims.size() != 3) {
    throw ValidationError("image tensor must have rank 3 (H,W,C) or 4 (N,H,W,C)");
  }
  const std::size_t h = t.dims[off], w = t.dims[off + 1], c = t.dims[off + 2];
  std::vector<FeatureMap> images;
  images.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    FeatureMap fm(h, w, c);
    for (std::size_t e = 0; e < fm.size(); ++e) fm.data[e] = t.values[k * fm.size() + e];
    images.push_back(std::move(fm));
  }
  return images;
}

Tensor image_to_tensor(const FeatureMap& image) {
  Tensor t;
  t.dims = {std::uint32_t(image.height), std::uint32_t(image.width), std::uint32_t(image.channels)};
  t.values.assign(image.data.begin(), image.data.end());
  return t;
}

Tensor images_to_tensor(const std::vector<FeatureMap>& images) {
  require(!images.empty(), "images_to_tensor: no images");
  Tensor t;
  const auto& f = images.front();
  t.dims = {std::uint32_t(images.size()), std::uint32_t(f.height), std::uint32_t(f.width),
            std::uint32_t(f.channels)};
  for (const auto& im : images) {
    require(im.same_shape(f), "images_to_tensor: images differ in shape");
    t.values.insert(t.values.end(), im.data.begin(), im.data.end());
  }
  return t;
}

}  // namespace xbar
