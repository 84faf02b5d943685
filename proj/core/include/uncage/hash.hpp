#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace uncage {

/// FNV-1a, 64-bit. Used for deterministic train/val assignment and for
/// fingerprinting files in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

/// Hash of a file's raw bytes. Throws IoError if the file cannot be read.
std::uint64_t fnv1a64_file(const std::string& path);

/// Hash rendered as 16 lowercase hex digits.
std::string hex64(std::uint64_t h);

} // namespace uncage
