#pragma once

// Little-endian scalar encoding independent of host byte order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

namespace xbar::detail {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(char((v >> (8 * b)) & 0xff));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) v |= U(p[b]) << (8 * b);
  return v;
}

inline void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
inline void put_f32(std::string& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_u32(std::string& out, std::uint32_t v) { put_le(out, v); }

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }
inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }
inline std::uint32_t get_u32(const unsigned char* p) { return get_le<std::uint32_t>(p); }

}  // namespace xbar::detail
