#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "squarebox/errors.hpp"

namespace squarebox::detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

// Little-endian f32 blob, widened to double.
inline std::vector<double> read_f32_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("cannot open blob " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) {
    throw TruncatedBlobError("blob " + path.string() + " size is not a multiple of 4 bytes");
  }
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
    float f;
    std::memcpy(&f, &bits, 4);
    out[i] = f;
  }
  return out;
}

inline void write_f32_blob(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (double v : values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
    out.write(reinterpret_cast<const char*>(&bits), 4);
  }
}

inline nlohmann::json read_json_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("cannot open manifest " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError("malformed manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace squarebox::detail
