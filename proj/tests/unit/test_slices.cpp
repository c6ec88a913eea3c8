#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "dotmarg/errors.hpp"
#include "dotmarg/slices.hpp"
#include "support.hpp"

using namespace dotmarg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dotmarg_test_slices" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("slice mapping") {
  const std::vector<double> zero(10, 0.0);
  const auto z = slice_mapping(zero);
  CHECK(z.pixel(0.0) == 128);

  const std::vector<double> v{-2.0, 0.5, 1.0};
  const auto m = slice_mapping(v);
  CHECK(m.scale == doctest::Approx(63.5));
  CHECK(m.pixel(-2.0) == 1);
  CHECK(m.pixel(0.0) == 128);
  CHECK(m.pixel(1.0) == 192);  // 128 + 63.5 rounds half away from zero
  CHECK(m.pixel(2.0) == 255);
  CHECK(m.pixel(1e9) == 255);
  CHECK(m.pixel(-1e9) == 1);
}

TEST_CASE("constant volume gives uniform slices") {
  const GridDims dims{6, 5, 4};
  const std::vector<double> vol(dims.count(), 0.25);
  const auto mapping = slice_mapping(vol);
  for (int axis = 0; axis < 3; ++axis) {
    const auto img = extract_slice(vol, dims, {axis, 1}, mapping);
    CHECK(img.pixels.size() == static_cast<std::size_t>(img.width * img.height));
    for (auto p : img.pixels) REQUIRE(p == 255);
  }
  CHECK(extract_slice(vol, dims, {2, 0}, mapping).width == 6);
  CHECK(extract_slice(vol, dims, {2, 0}, mapping).height == 5);
  CHECK(extract_slice(vol, dims, {0, 0}, mapping).width == 5);
  CHECK(extract_slice(vol, dims, {0, 0}, mapping).height == 4);
}

TEST_CASE("slice orientation and support") {
  const auto phantom = testing::desk_phantom();
  const Vec3 c{18.5, 14.5, 10.5};
  const auto pert = insert_perturbation(phantom, c, 4.0, 0.01);
  const auto vol = pert.dense(phantom.dims.count());
  const auto mapping = slice_mapping(vol);
  const auto img = extract_slice(vol, phantom.dims, {2, 10}, mapping);
  // Nonzero pixels are exactly the voxels of the sphere cut by the plane z = 10.
  for (int r = 0; r < img.height; ++r) {
    for (int col = 0; col < img.width; ++col) {
      const int j = img.height - 1 - r;
      const std::size_t idx = phantom.dims.linear(col, j, 10);
      REQUIRE((img.values[r * img.width + col] != 0.0) == (pert.at(idx) != 0.0));
      REQUIRE((img.pixels[r * img.width + col] != 128) == (pert.at(idx) != 0.0));
    }
  }
  // Top image row is the highest y.
  std::vector<double> ramp(phantom.dims.count());
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = phantom.dims.unravel(i)[1];
  const auto r = extract_slice(ramp, phantom.dims, {2, 3}, slice_mapping(ramp));
  CHECK(r.values.front() == phantom.dims.ny - 1);
  CHECK(r.values.back() == 0.0);

  CHECK_THROWS_AS(extract_slice(vol, phantom.dims, {3, 0}, mapping), ConfigError);
  CHECK_THROWS_AS(extract_slice(vol, phantom.dims, {1, 32}, mapping), ConfigError);
  CHECK_THROWS_AS(extract_slice(vol, phantom.dims, {1, -1}, mapping), ConfigError);
}

TEST_CASE("png export round-trips through the affine map") {
  const auto phantom = testing::desk_phantom();
  testing::Gen gen(3);
  std::vector<double> vol(phantom.dims.count());
  for (auto& v : vol) v = gen.normal() * 0.003;
  const auto dir = scratch_dir("export");
  const auto planes = default_planes(phantom.dims);
  REQUIRE(planes.size() == 3);
  const auto paths = export_slices(vol, phantom, planes, dir, "field");
  const auto mapping = slice_mapping(vol);
  int pngs = 0;
  for (const auto& p : paths) {
    REQUIRE(fs::exists(p));
    if (p.extension() != ".png") continue;
    ++pngs;
  }
  CHECK(pngs == 3);
  const auto png = read_png_gray(dir / "field_z16.png");
  const auto expected = extract_slice(vol, phantom.dims, {2, 16}, mapping);
  CHECK(png.width == expected.width);
  CHECK(png.height == expected.height);
  CHECK(png.pixels == expected.pixels);
  for (std::size_t i = 0; i < expected.values.size(); ++i) {
    const double back = (png.pixels[i] - 128.0) / mapping.scale;
    if (png.pixels[i] > 1 && png.pixels[i] < 255) REQUIRE(std::abs(back - expected.values[i]) <= 0.5 / mapping.scale + 1e-15);
  }

  // Identical input, identical bytes.
  const auto again = scratch_dir("export_again");
  export_slices(vol, phantom, planes, again, "field");
  CHECK(bytes_of(dir / "field_z16.png") == bytes_of(again / "field_z16.png"));
}
