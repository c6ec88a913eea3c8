#include <doctest.h>

#include <fstream>

#include "dotmarg/errors.hpp"
#include "dotmarg/io.hpp"
#include "support.hpp"

using namespace dotmarg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dotmarg_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("photon record files round-trip") {
  testing::Gen gen(1);
  auto set = gen.records(3, 250, 4, 1000, 9000);
  set.expired_count = 17;
  set.escape_count -= 17;
  const auto path = scratch("source_3.dmpr");
  io::write_records(path, set);
  CHECK(io::read_records(path) == set);

  SUBCASE("empty set") {
    PhotonRecordSet empty;
    empty.launched_count = 5;
    empty.escape_count = 5;
    io::write_records(path, empty);
    CHECK(io::read_records(path) == empty);
  }
  SUBCASE("truncated file") {
    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 5);
    CHECK_THROWS_AS(io::read_records(path), ConfigError);
  }
  SUBCASE("wrong magic") {
    std::ofstream(path, std::ios::binary) << "NOPE and some more bytes";
    CHECK_THROWS_AS(io::read_records(path), ConfigError);
  }
}

TEST_CASE("raw arrays and sidecars") {
  const auto path = scratch("values.raw");
  const std::vector<double> v{1.5, -2.25, 1e-300, 3.0, 0.0, 7.0};
  io::write_raw_f64(path, v, {2, 3}, {{"units", "mm^-1"}});
  CHECK(io::read_raw_f64(path) == v);
  CHECK(fs::file_size(path) == 48);
  const auto side = io::read_sidecar(path);
  CHECK(side.at("shape") == io::json::array({2, 3}));
  CHECK(side.at("value_type") == "float64");
  CHECK(side.at("byte_order") == "little");
  CHECK(side.at("units") == "mm^-1");
  CHECK(io::sidecar_path(path).filename() == "values.json");
  CHECK_THROWS_AS(io::write_raw_f64(path, v, {4, 2}), ContractError);

  const std::vector<std::uint8_t> mask{0, 1, 1, 0};
  io::write_raw_u8(scratch("mask.raw"), mask, {4});
  CHECK(io::read_raw_u8(scratch("mask.raw")) == mask);

  std::ofstream(scratch("odd.raw"), std::ios::binary) << "abc";
  CHECK_THROWS_AS(io::read_raw_f64(scratch("odd.raw")), ConfigError);
}

TEST_CASE("matrices are column-major") {
  testing::Gen gen(2);
  const Eigen::MatrixXd m = gen.matrix(5, 3);
  const auto path = scratch("matrix.raw");
  io::write_matrix(path, m);
  CHECK(io::read_matrix(path) == m);
  const auto flat = io::read_raw_f64(path);
  CHECK(flat[1] == m(1, 0));
  CHECK(flat[5] == m(0, 1));
}

TEST_CASE("unmask scatters onto the grid") {
  const std::vector<double> vals{1, 2, 3};
  const std::vector<std::size_t> vox{0, 4, 5};
  const auto full = io::unmask(vals, vox, 7);
  CHECK(full == std::vector<double>{1, 0, 0, 0, 2, 3, 0});
  CHECK_THROWS_AS(io::unmask(vals, std::vector<std::size_t>{1}, 7), ContractError);
}

TEST_CASE("crc32 and json helpers") {
  const auto path = scratch("check.txt");
  std::ofstream(path, std::ios::binary) << "123456789";
  CHECK(io::file_crc32(path) == 0xCBF43926u);

  const auto jp = scratch("doc.json");
  io::json doc{{"b", 1}, {"a", {1.5, 2.5}}};
  io::write_json(jp, doc);
  CHECK(io::read_json(jp) == doc);
  std::ofstream(jp) << "{ not json";
  CHECK_THROWS_AS(io::read_json(jp), ConfigError);
  CHECK_THROWS_AS(io::read_json(scratch("missing.json")), ConfigError);
}
