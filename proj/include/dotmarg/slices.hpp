#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dotmarg/phantom.hpp"

namespace dotmarg {

struct SlicePlane {
  int axis = 2;  // 0: x, 1: y, 2: z
  int index = 0;
};

// Symmetric affine map shared by every slice of one volume:
// pixel = clamp(round(128 + scale * value), 1, 255), scale = 127 / max|value|.
// A zero volume maps to 128 everywhere.
struct SliceMapping {
  double scale = 0.0;
  std::uint8_t pixel(double value) const;
};

SliceMapping slice_mapping(std::span<const double> volume);

struct SliceImage {
  int width = 0, height = 0;
  std::vector<double> values;  // row-major, width fastest
  std::vector<std::uint8_t> pixels;
};

// Image rows run along the slower remaining axis, columns along the faster one.
SliceImage extract_slice(std::span<const double> volume, const GridDims& dims, const SlicePlane& plane,
                         const SliceMapping& mapping);

// Writes "<stem>_<axis><index>.png" and the raw slice with a sidecar for each
// plane; returns the written paths.
std::vector<std::filesystem::path> export_slices(std::span<const double> volume, const VoxelPhantom& phantom,
                                                 std::span<const SlicePlane> planes,
                                                 const std::filesystem::path& directory, const std::string& stem);

void write_png_gray(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> pixels);
SliceImage read_png_gray(const std::filesystem::path& path);

// Central planes through each axis.
std::vector<SlicePlane> default_planes(const GridDims& dims);

}  // namespace dotmarg
