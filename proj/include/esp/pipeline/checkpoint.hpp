#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace esp::pipeline {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorSection {
  std::string name;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> data;  // row-major
};

/// Binary layout, little-endian throughout:
///   "ESPCKPT\0" | u32 version | u64 seed | u32 len + config text |
///   u32 len + meta JSON | u32 count | count x (u32 len + name | u32 rows |
///   u32 cols | rows*cols float32)
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t seed = 0;
  std::string config;
  std::string meta;
  std::vector<TensorSection> tensors;

  const TensorSection* find(const std::string& name) const;
  /// Throws MalformedRecord when absent or when the shape differs.
  const TensorSection& require(const std::string& name, std::size_t rows, std::size_t cols) const;
  void put(const std::string& name, std::size_t rows, std::size_t cols, std::span<const double> values);
  std::vector<double> values(const std::string& name, std::size_t rows, std::size_t cols) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& c);
/// Throws BadMagic, VersionMismatch (naming both versions) or MalformedRecord.
Checkpoint read_checkpoint(std::istream& in);

/// Written to `path.tmp` and renamed into place.
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace esp::pipeline
