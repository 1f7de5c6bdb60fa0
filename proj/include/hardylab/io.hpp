#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hardylab/field.hpp"

namespace hardylab {

namespace fs = std::filesystem;

// 64-bit FNV-1a
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// write to a temporary next to the target, then rename; parent directories are created
void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

// Snapshot layout, little-endian throughout:
//   magic "HLSNAP01" (8 bytes)
//   u32 dim, u32 points_per_axis, u32 components, u32 dtype (1 = complex128)
//   f64 half_width, f64 time
//   values: component-major, row-major over the grid (axis 0 slowest), (re, im) pairs
inline constexpr std::uint32_t kSnapshotComplex128 = 1;
std::string encode_snapshot(const Field& f);
Field decode_snapshot(std::string_view bytes);
void write_snapshot(const fs::path& path, const Field& f);
Field read_snapshot(const fs::path& path);

// regular files under root, relative, sorted, generic separators
std::vector<std::string> list_tree(const fs::path& root);

struct TreeDiff {
  std::vector<std::string> only_left, only_right, differing;
  bool identical() const { return only_left.empty() && only_right.empty() && differing.empty(); }
};
TreeDiff compare_trees(const fs::path& left, const fs::path& right);

}  // namespace hardylab
