#include <doctest.h>

#include <fstream>

#include "dotmarg/errors.hpp"
#include "dotmarg/runner.hpp"
#include "dotmarg/scenario.hpp"
#include "support.hpp"

using namespace dotmarg;
namespace fs = std::filesystem;

namespace {

io::json tiny_doc(int case_id) {
  auto doc = io::json::parse(R"({
    "seed": 11,
    "phantom": {"dims": [20, 20, 20], "outer_radius": 9, "layers": {"scalp_skull": 2, "csf1": 1, "gray_matter": 2}},
    "optodes": {
      "source_rings": [{"polar_deg": 0, "count": 1}, {"polar_deg": 40, "count": 2}],
      "detector_rings": [{"polar_deg": 25, "count": 3, "azimuth_offset_deg": 60}],
      "sds_cutoff_mm": 15
    },
    "transport": {"packets": 20000},
    "truth": [{"center": [11, 10, 6], "radius": 3, "contrast": 0.008, "tissues": ["gray_matter", "white_matter"]}]
  })");
  doc["case"] = case_id;
  return doc;
}

// One shared transport run for every runner test.
const Workspace& tiny_workspace() {
  static const Workspace ws = prepare_workspace(parse_scenario(tiny_doc(1)));
  return ws;
}

RunReport run_tiny(const ScenarioConfig& cfg) { return run_case(with_config(tiny_workspace(), cfg)); }

}  // namespace

TEST_CASE("scenario parsing") {
  SUBCASE("defaults") {
    const auto cfg = parse_scenario(io::json::object());
    CHECK(cfg.case_id == 1);
    CHECK(cfg.delta_a == 0.9);
    CHECK(cfg.delta_phi == doctest::Approx(M_PI / 360));
    CHECK(cfg.prior_sigma == 0.003);
    CHECK(cfg.phantom.dims == GridDims{32, 32, 32});
    CHECK(cfg.optodes.source_rings.size() == 2);
  }
  SUBCASE("overrides") {
    const auto cfg = parse_scenario(tiny_doc(1));
    CHECK(cfg.seed == 11);
    CHECK(cfg.phantom.outer_radius == 9.0);
    CHECK(cfg.transport.n_packets == 20000);
    CHECK(cfg.truth.size() == 1);
    CHECK(cfg.truth[0].tissues->count(Tissue::kGrayMatter) == 1);
  }
  SUBCASE("unknown keys and bad types are configuration errors") {
    CHECK_THROWS_AS(parse_scenario(io::json{{"cases", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_scenario(io::json{{"phantom", {{"radius", 3}}}}), ConfigError);
    CHECK_THROWS_AS(parse_scenario(io::json{{"seed", "x"}}), ConfigError);
    CHECK_THROWS_AS(parse_scenario(io::json{{"case", 5}}), ConfigError);
    CHECK_THROWS_AS(parse_scenario(io::json{{"roi", {{"kind", "left"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_scenario(io::json{{"truth", io::json::array()}}), ConfigError);
  }
  SUBCASE("per-case requirements") {
    auto doc = tiny_doc(2);
    doc["roi"] = {{"kind", "whole"}};
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    doc = tiny_doc(1);
    doc["coupling"] = {{"delta_a", 0.0}};
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    doc = tiny_doc(3);
    doc["baseline"] = {{"probes", io::json::array()}};
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    doc = tiny_doc(3);
    doc["baseline"] = {{"probes", {{{"tissue", "gray_matter"}, {"delta", 0.0}}}}};
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
    CHECK_NOTHROW(parse_scenario(tiny_doc(3)));
    CHECK_NOTHROW(parse_scenario(tiny_doc(4)));
  }
  SUBCASE("ring sites lie on the outer sphere") {
    const std::vector<RingSpec> rings{{0, 1, 0}, {45, 4, 0}, {60, 5, 10}};
    const Vec3 c{16, 16, 1};
    const auto sites = ring_sites(c, 15.0, rings);
    REQUIRE(sites.size() == 10);
    for (const auto& s : sites) CHECK(distance(s, c) == doctest::Approx(15.0));
    CHECK(sites[0].z == doctest::Approx(16.0));
    CHECK(sites[1].x == doctest::Approx(16 + 15 * std::sin(M_PI / 4)));
  }
  SUBCASE("default truth and ROI follow a resized phantom") {
    const auto big = default_scenario(2);
    const auto small = parse_scenario(tiny_doc(2));
    const Vec3 shift = small.phantom.resolved_center() - big.phantom.resolved_center();
    CHECK(small.roi.point.x == doctest::Approx(big.roi.point.x + shift.x));
    CHECK(small.roi.point.y == doctest::Approx(big.roi.point.y + shift.y));
    CHECK(small.truth.size() == 1);
  }
  SUBCASE("run_caseN rejects a config for another case") {
    CHECK_THROWS_AS(run_case2(parse_scenario(tiny_doc(1))), ConfigError);
  }
}

TEST_CASE("workspace shapes") {
  const auto& ws = tiny_workspace();
  CHECK(ws.records.size() == 3);
  CHECK(ws.optodes.m() > 0);
  CHECK(ws.j_total.rows() == static_cast<Eigen::Index>(2 * ws.optodes.m()));
  CHECK(ws.j_total.cols() == static_cast<Eigen::Index>(ws.masks.n_total()));
  CHECK(ws.prior.size() == static_cast<Eigen::Index>(ws.masks.n_total()));
  CHECK(ws.coupling.matrix.rows() == ws.j_total.rows());
  for (auto v : ws.masks.fov_voxels) REQUIRE(ws.phantom.labels[v] != 0);
}

TEST_CASE("cases without mismatch") {
  SUBCASE("case 1 with ideal coupling") {
    auto cfg = parse_scenario(tiny_doc(1));
    cfg.delta_a = 1.0;
    cfg.delta_phi = 0.0;
    const auto r = run_tiny(cfg);
    CHECK(r.naive_error == r.reference_error);
    CHECK(r.projected_error == doctest::Approx(r.naive_error).epsilon(0.5));
    CHECK(r.provenance == "coupling");
    CHECK(r.projection_rank == r.data_length - static_cast<Eigen::Index>(2 * (r.l - 1)));
  }
  SUBCASE("case 3 with true equal to assumed") {
    auto cfg = parse_scenario(tiny_doc(3));
    const auto table = default_tissue_table();
    cfg.true_absorption = {{Tissue::kGrayMatter, table[label_of(Tissue::kGrayMatter)].mu_a},
                           {Tissue::kWhiteMatter, table[label_of(Tissue::kWhiteMatter)].mu_a}};
    const auto r = run_tiny(cfg);
    CHECK(r.naive_error == r.reference_error);
    CHECK(r.provenance == "baseline");
  }
  SUBCASE("case 4 with both mismatches disabled") {
    auto cfg = parse_scenario(tiny_doc(4));
    cfg.delta_a = 1.0;
    cfg.delta_phi = 0.0;
    const auto table = default_tissue_table();
    cfg.true_absorption = {{Tissue::kGrayMatter, table[label_of(Tissue::kGrayMatter)].mu_a},
                           {Tissue::kWhiteMatter, table[label_of(Tissue::kWhiteMatter)].mu_a}};
    cfg.truth = {{{13.5, 10, 6}, 3.0, 0.008, std::set<Tissue>{Tissue::kGrayMatter, Tissue::kWhiteMatter}}};
    const auto r = run_tiny(cfg);
    CHECK(r.provenance == "combined");
    // Without mismatch the ROI-only posterior is already close to the full-FOV reference.
    CHECK(r.naive_error <= 1.5 * r.reference_error + 0.05);
  }
}

TEST_CASE("coupling mismatch hurts the naive estimate only") {
  const auto r = run_tiny(parse_scenario(tiny_doc(1)));
  CHECK(r.naive_error > 2.0 * r.projected_error);
  CHECK(r.truth.size() == tiny_workspace().phantom.labels.size());
  const auto j = r.to_json();
  CHECK(j.at("errors").at("naive").get<double>() == r.naive_error);
  CHECK(j.contains("projection"));
}

TEST_CASE("outputs, determinism and manifest") {
  const auto dir = fs::temp_directory_path() / "dotmarg_test_runner";
  fs::remove_all(dir);
  auto cfg = parse_scenario(tiny_doc(2));
  const auto ws = with_config(tiny_workspace(), cfg);
  auto a = run_case(ws);
  auto b = run_case(ws);
  CHECK(a.naive == b.naive);
  CHECK(a.projected == b.projected);
  CHECK(a.reference == b.reference);

  write_run_outputs(a, ws, dir / "a");
  write_run_outputs(b, ws, dir / "b");
  CHECK(verify_manifest(dir / "a").empty());
  REQUIRE(a.manifest.size() == b.manifest.size());
  for (std::size_t i = 0; i < a.manifest.size(); ++i) {
    CHECK(a.manifest[i].path == b.manifest[i].path);
    if (a.manifest[i].path != "report.json") CHECK(a.manifest[i].crc32 == b.manifest[i].crc32);
  }
  CHECK(fs::exists(dir / "a" / "errors.csv"));
  CHECK(fs::exists(dir / "a" / "volumes" / "projected.raw"));
  CHECK(fs::exists(dir / "a" / "volumes" / "projected.json"));

  // Tampering with any listed file is detected.
  {
    std::ofstream out(dir / "a" / "errors.csv", std::ios::app);
    out << "tampered\n";
  }
  CHECK_FALSE(verify_manifest(dir / "a").empty());

  write_record_outputs(ws, dir / "rec");
  const auto loaded = load_records(dir / "rec", ws.optodes.sources.size());
  REQUIRE(loaded.has_value());
  CHECK(*loaded == ws.records);
  CHECK_FALSE(load_records(dir / "nothing", ws.optodes.sources.size()).has_value());
}

TEST_CASE("shipped example configs spell out the built-in defaults") {
  for (int id = 1; id <= 4; ++id) {
    CAPTURE(id);
    const auto cfg = load_scenario(fs::path(DOTMARG_SOURCE_DIR) / "configs" / ("case" + std::to_string(id) + ".json"));
    const auto def = default_scenario(id);
    CHECK(cfg.case_id == id);
    CHECK(cfg.phantom.dims == def.phantom.dims);
    CHECK(cfg.transport.n_packets == def.transport.n_packets);
    CHECK(cfg.optodes.sds_cutoff == def.optodes.sds_cutoff);
    CHECK(cfg.delta_a == def.delta_a);
    CHECK(cfg.delta_phi == doctest::Approx(def.delta_phi).epsilon(1e-15));
    REQUIRE(cfg.truth.size() == def.truth.size());
    for (std::size_t i = 0; i < cfg.truth.size(); ++i) {
      CHECK(distance(cfg.truth[i].center, def.truth[i].center) == 0.0);
      CHECK(cfg.truth[i].radius == def.truth[i].radius);
      CHECK(cfg.truth[i].contrast == def.truth[i].contrast);
    }
    CHECK(cfg.roi.kind == def.roi.kind);
    if (def.roi.kind == RoiSpec::Kind::kHalfSpace) {
      CHECK(distance(cfg.roi.point, def.roi.point) == 0.0);
      CHECK(distance(cfg.roi.normal, def.roi.normal) == 0.0);
    }
    CHECK(cfg.true_absorption == def.true_absorption);
    REQUIRE(cfg.probes.size() == def.probes.size());
    for (std::size_t i = 0; i < cfg.probes.size(); ++i) CHECK(cfg.probes[i].delta == def.probes[i].delta);
  }
}
