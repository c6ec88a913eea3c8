#include "dotmarg/slices.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "dotmarg/errors.hpp"
#include "dotmarg/io.hpp"

namespace dotmarg {

namespace fs = std::filesystem;

std::uint8_t SliceMapping::pixel(double value) const {
  if (scale == 0.0) return 128;
  const double p = std::round(128.0 + scale * value);
  return static_cast<std::uint8_t>(std::clamp(p, 1.0, 255.0));
}

SliceMapping slice_mapping(std::span<const double> volume) {
  double peak = 0.0;
  for (double v : volume) peak = std::max(peak, std::abs(v));
  return {peak > 0.0 ? 127.0 / peak : 0.0};
}

SliceImage extract_slice(std::span<const double> volume, const GridDims& dims, const SlicePlane& plane,
                         const SliceMapping& mapping) {
  if (volume.size() != dims.count()) throw ContractError("volume does not match the grid");
  const int extent[3] = {dims.nx, dims.ny, dims.nz};
  if (plane.axis < 0 || plane.axis > 2) throw ConfigError("slice axis must be 0, 1 or 2");
  if (plane.index < 0 || plane.index >= extent[plane.axis]) {
    throw ConfigError("slice index " + std::to_string(plane.index) + " is outside the grid");
  }
  const int col_axis = plane.axis == 0 ? 1 : 0;
  const int row_axis = plane.axis == 2 ? 1 : 2;
  SliceImage img;
  img.width = extent[col_axis];
  img.height = extent[row_axis];
  img.values.resize(static_cast<std::size_t>(img.width) * img.height);
  img.pixels.resize(img.values.size());
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      VoxelIndex v{};
      v[plane.axis] = plane.index;
      v[col_axis] = c;
      // Flip rows so +z (or +y) points up in the image.
      v[row_axis] = img.height - 1 - r;
      const auto at = static_cast<std::size_t>(r) * img.width + c;
      img.values[at] = volume[dims.linear(v)];
      img.pixels[at] = mapping.pixel(img.values[at]);
    }
  }
  return img;
}

void write_png_gray(const fs::path& path, int width, int height, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) throw ContractError("pixel buffer size mismatch");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw ConfigError("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw ConfigError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ConfigError("failed writing '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // Fixed header fields only, so identical pixels give identical files.
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

SliceImage read_png_gray(const fs::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw ConfigError("cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ConfigError("libpng initialisation failed");
  }
  SliceImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ConfigError("failed reading '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ConfigError("'" + path.string() + "' is not an 8-bit grayscale PNG");
  }
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int r = 0; r < img.height; ++r) png_read_row(png, img.pixels.data() + static_cast<std::size_t>(r) * img.width, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<fs::path> export_slices(std::span<const double> volume, const VoxelPhantom& phantom,
                                    std::span<const SlicePlane> planes, const fs::path& directory,
                                    const std::string& stem) {
  const auto mapping = slice_mapping(volume);
  std::vector<fs::path> written;
  for (const auto& plane : planes) {
    const auto img = extract_slice(volume, phantom.dims, plane, mapping);
    const std::string name = stem + "_" + "xyz"[plane.axis] + std::to_string(plane.index);
    const auto png_path = directory / (name + ".png");
    const auto raw_path = directory / (name + ".raw");
    write_png_gray(png_path, img.width, img.height, img.pixels);
    io::json meta;
    meta["axis"] = std::string(1, "xyz"[plane.axis]);
    meta["index"] = plane.index;
    meta["voxel_size_mm"] = phantom.voxel_size;
    meta["pixel_offset"] = 128;
    meta["pixel_scale"] = mapping.scale;
    meta["pixel_clamp"] = {1, 255};
    meta["row_order"] = "top row is the highest coordinate";
    io::write_raw_f64(raw_path, img.values,
                      {static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width)}, meta);
    written.push_back(png_path);
    written.push_back(raw_path);
    written.push_back(io::sidecar_path(raw_path));
  }
  return written;
}

std::vector<SlicePlane> default_planes(const GridDims& dims) {
  return {{0, dims.nx / 2}, {1, dims.ny / 2}, {2, dims.nz / 2}};
}

}  // namespace dotmarg
