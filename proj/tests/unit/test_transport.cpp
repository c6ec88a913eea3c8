#include <doctest.h>

#include <cmath>

#include "dotmarg/errors.hpp"
#include "dotmarg/rng.hpp"
#include "dotmarg/transport.hpp"
#include "support.hpp"

using namespace dotmarg;

namespace {

// Grid of label-0 air with a hand-placed block of voxels.
VoxelPhantom block_phantom(std::vector<OpticalProperties> table) {
  VoxelPhantom p;
  p.dims = {16, 16, 16};
  p.voxel_size = 1.0;
  p.labels.assign(p.dims.count(), 0);
  p.tissue_table = std::move(table);
  return p;
}

OptodeConfig tiny_optodes(const VoxelPhantom& p) {
  const Vec3 c{10, 10, 1};
  const std::vector<Vec3> sources{c + Vec3{0, 0, 9}};
  std::vector<Vec3> detectors;
  for (int i = 0; i < 3; ++i) {
    const double az = 2.0 * M_PI * i / 3.0;
    detectors.push_back(c + Vec3{std::sin(0.5) * std::cos(az), std::sin(0.5) * std::sin(az), std::cos(0.5)} * 9.0);
  }
  return place_optodes(p, sources, detectors, 100e6, 20.0);
}

VoxelPhantom tiny_hemisphere() {
  LayeredPhantomConfig cfg;
  cfg.dims = {20, 20, 20};
  cfg.outer_radius = 9.0;
  cfg.scalp_skull = 2.0;
  cfg.gray_matter = 2.0;
  return build_layered_phantom(cfg);
}

}  // namespace

TEST_CASE("Henyey-Greenstein sampling") {
  SUBCASE("g = 0 is isotropic") {
    for (double u : {0.0, 0.1, 0.5, 0.77, 1.0}) CHECK(henyey_greenstein_cosine(0.0, u) == doctest::Approx(2 * u - 1));
  }
  SUBCASE("closed-form inverse CDF at g = 0.9, u = 0.5") {
    const double g = 0.9, u = 0.5;
    const double s = (1 - g * g) / (1 + g * (2 * u - 1));
    const double expected = (1 + g * g - s * s) / (2 * g);
    CHECK(henyey_greenstein_cosine(g, u) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(0.9855).epsilon(1e-14));
  }
  SUBCASE("sampled directions are unit vectors with the right deflection") {
    CounterRng rng(3, 0);
    for (int i = 0; i < 2000; ++i) {
      const Vec3 in = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
      const double u1 = rng.uniform(), u2 = rng.uniform();
      const Vec3 out = sample_scatter_direction(0.9, in, u1, u2);
      REQUIRE(norm(out) == doctest::Approx(1.0).epsilon(1e-12));
      REQUIRE(dot(out, in) == doctest::Approx(henyey_greenstein_cosine(0.9, u1)).epsilon(1e-9));
    }
    // Incoming exactly along -z takes the degenerate branch.
    const Vec3 down = sample_scatter_direction(0.5, {0, 0, -1}, 0.3, 0.2);
    CHECK(dot(down, Vec3{0, 0, -1}) == doctest::Approx(henyey_greenstein_cosine(0.5, 0.3)));
  }
  SUBCASE("empirical mean cosine over 10^6 samples") {
    CounterRng rng(11, 1);
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += henyey_greenstein_cosine(0.9, rng.uniform());
    CHECK(std::abs(sum / n - 0.9) <= 0.001);
  }
}

TEST_CASE("advance_packet ray marching") {
  auto table = default_tissue_table();
  table[1] = {0.0, 16.0, 0.9, 1.4};
  table[2] = {0.0, 5.0, 0.9, 1.4};
  table[3] = {0.0, 1e-12, 0.9, 1.4};

  SUBCASE("homogeneous medium: free path is s / mu_s") {
    auto p = block_phantom(table);
    for (int i = 3; i < 12; ++i)
      for (int j = 3; j < 12; ++j)
        for (int k = 3; k < 12; ++k) p.labels[p.dims.linear(i, j, k)] = 1;
    const ScatteringMedium medium(p);
    PacketState s{{7.5, 7.5, 7.5}, normalized(Vec3{1, 2, -0.5}), {7, 7, 7}};
    PathAccumulator path;
    const auto r = advance_packet(medium, s, 3.2, path);
    CHECK(r.event == AdvanceEvent::kScatter);
    CHECK(r.path_length == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(distance(s.position, Vec3{7.5, 7.5, 7.5}) == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("budget is rescaled across a scattering interface") {
    auto p = block_phantom(table);
    p.labels[p.dims.linear(5, 5, 5)] = 1;  // mu_s = 16
    p.labels[p.dims.linear(6, 5, 5)] = 2;  // mu_s = 5
    const ScatteringMedium medium(p);
    // A homogeneous mu_s = 16 path of 0.6 mm; after 0.5 mm the rest is stretched by 16/5.
    const double s_budget = 16.0 * 0.6;
    PacketState s{{5.5, 5.5, 5.5}, {1, 0, 0}, {5, 5, 5}};
    PathAccumulator path;
    const auto r = advance_packet(medium, s, s_budget, path);
    const double second = 0.1 * 16.0 / 5.0;
    CHECK(r.event == AdvanceEvent::kScatter);
    CHECK(s.position.x == doctest::Approx(6.0 + second).epsilon(1e-12));
    REQUIRE(path.segments().size() == 2);
    CHECK(path.segments()[0].length == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(path.segments()[1].length == doctest::Approx(second).epsilon(1e-12));
    CHECK(r.optical_time == doctest::Approx(1.4 * (0.5 + second)).epsilon(1e-12));
  }
  SUBCASE("axis-aligned chord through k voxels") {
    auto p = block_phantom(table);
    for (int i = 2; i <= 6; ++i) p.labels[p.dims.linear(i, 5, 5)] = 3;
    const ScatteringMedium medium(p);
    PacketState s{{2.0, 5.5, 5.5}, {1, 0, 0}, {2, 5, 5}};
    PathAccumulator path;
    const auto r = advance_packet(medium, s, 1.0, path);
    CHECK(r.event == AdvanceEvent::kBoundary);
    CHECK(r.axis == 0);
    CHECK(r.step == 1);
    REQUIRE(path.segments().size() == 5);
    for (const auto& seg : path.segments()) CHECK(seg.length == 1.0);
    CHECK(s.position.x == 7.0);
  }
}

TEST_CASE("Fresnel boundary") {
  SUBCASE("normal incidence closed form") {
    const double expected = std::pow((1.4 - 1.0) / (1.4 + 1.0), 2);
    CHECK(std::abs(fresnel_reflectance(1.4, 1.0, 1.0) - expected) <= 1e-12);
    CHECK(expected == doctest::Approx(0.0277777777777778));
  }
  SUBCASE("matched indices never reflect") {
    CHECK(fresnel_reflectance(1.0, 1.0, 0.3) == 0.0);
    const auto out = boundary_interaction(1.0, 1.0, normalized(Vec3{0.3, 0, 1}), {0, 0, 1}, 0.0);
    CHECK(out.exits);
    CHECK(out.direction.x == doctest::Approx(normalized(Vec3{0.3, 0, 1}).x));
  }
  SUBCASE("total internal reflection past the critical angle") {
    const double critical = std::asin(1.0 / 1.4);
    CHECK(critical * 180.0 / M_PI == doctest::Approx(45.58).epsilon(1e-3));
    const double beyond = critical + 0.01;
    CHECK(fresnel_reflectance(1.4, 1.0, std::cos(beyond)) == 1.0);
    CHECK(fresnel_reflectance(1.4, 1.0, std::cos(critical - 0.01)) < 1.0);
    const Vec3 d{std::sin(beyond), 0, std::cos(beyond)};
    const auto out = boundary_interaction(1.4, 1.0, d, {0, 0, 1}, 0.999999);
    CHECK_FALSE(out.exits);
    CHECK(out.direction.x == doctest::Approx(d.x));
    CHECK(out.direction.z == doctest::Approx(-d.z));
  }
  SUBCASE("refraction obeys Snell's law") {
    const double ti = 0.4;
    const Vec3 d{std::sin(ti), 0, std::cos(ti)};
    const auto out = boundary_interaction(1.4, 1.0, d, {0, 0, 1}, 0.999);
    REQUIRE(out.exits);
    CHECK(out.direction.x == doctest::Approx(1.4 * std::sin(ti)).epsilon(1e-12));
    CHECK(norm(out.direction) == doctest::Approx(1.0));
  }
}

TEST_CASE("ballistic slab: every detected packet crosses the thickness straight") {
  LayeredPhantomConfig cfg;
  cfg.shape = PhantomShape::kSlab;
  cfg.dims = {24, 24, 20};
  cfg.center = Vec3{0, 0, 4};
  cfg.outer_radius = 12.0;
  for (int t = 1; t < kTissueCount; ++t) cfg.tissue_table[t] = {0.01, 1e-9, 0.9, 1.0};
  cfg.tissue_table[0].nu = 1.0;
  const auto p = build_layered_phantom(cfg);
  OptodePlacementOptions opts;
  opts.capture_radius = 3.0;
  const std::vector<Vec3> src{{12, 12, 16}}, det{{12, 12, 4}};
  const auto optodes = place_optodes(p, src, det, 100e6, 20.0, opts);
  TransportOptions t;
  t.n_packets = 2000;
  const auto set = simulate_source(p, optodes, 0, t);
  REQUIRE(set.records.size() > 500);
  CHECK(check_accounting(set));
  for (const auto& rec : set.records) {
    REQUIRE(rec.total_length() == doctest::Approx(12.0).epsilon(1e-9));
    const auto first = p.dims.unravel(rec.pathlengths.front().voxel);
    for (const auto& seg : rec.pathlengths) {
      const auto v = p.dims.unravel(seg.voxel);
      REQUIRE(v[0] == first[0]);
      REQUIRE(v[1] == first[1]);
    }
    REQUIRE(rec.time_of_flight == doctest::Approx(12.0 / (kSpeedOfLight * 1e9)).epsilon(1e-9));
  }
}

TEST_CASE("transport invariants on a layered hemisphere") {
  const auto p = tiny_hemisphere();
  const auto optodes = tiny_optodes(p);
  TransportOptions t;
  t.n_packets = 6000;
  t.seed = 77;
  const auto base = simulate_source(p, optodes, 0, t);
  REQUIRE(base.records.size() > 50);

  SUBCASE("accounting and time of flight") {
    CHECK(base.records.size() + base.escape_count + base.expired_count == base.launched_count);
    CHECK(check_accounting(base));
    for (const auto& rec : base.records) {
      double optical = 0.0;
      for (const auto& s : rec.pathlengths) {
        REQUIRE(s.length > 0.0);
        optical += p.tissue_table[p.labels[s.voxel]].nu * s.length;
      }
      REQUIRE(rec.time_of_flight == doctest::Approx(optical / (kSpeedOfLight * 1e9)).epsilon(1e-9));
      REQUIRE(rec.time_of_flight <= t.max_time_of_flight);
      for (std::size_t i = 1; i < rec.pathlengths.size(); ++i) {
        REQUIRE(rec.pathlengths[i - 1].voxel < rec.pathlengths[i].voxel);
      }
    }
    for (std::size_t i = 1; i < base.records.size(); ++i) {
      REQUIRE(base.records[i - 1].launch_counter < base.records[i].launch_counter);
    }
  }
  SUBCASE("records are independent of absorption") {
    auto q = p;
    for (auto& props : q.tissue_table) props.mu_a *= 7.3;
    CHECK(simulate_source(q, optodes, 0, t) == base);
  }
  SUBCASE("records are independent of thread count") {
    for (int threads : {2, 3, 8}) {
      auto tt = t;
      tt.threads = threads;
      CHECK(simulate_source(p, optodes, 0, tt) == base);
    }
  }
  SUBCASE("a different seed gives different records") {
    auto tt = t;
    tt.seed = 78;
    CHECK_FALSE(simulate_source(p, optodes, 0, tt) == base);
  }
  SUBCASE("a tight time budget expires packets") {
    auto tt = t;
    tt.max_time_of_flight = 5e-11;
    const auto short_run = simulate_source(p, optodes, 0, tt);
    CHECK(short_run.expired_count > 0);
    CHECK(check_accounting(short_run));
  }
}

TEST_CASE("launch errors") {
  const auto p = tiny_hemisphere();
  auto optodes = tiny_optodes(p);
  TransportOptions t;
  t.n_packets = 10;
  CHECK_THROWS_AS(simulate_source(p, optodes, 3, t), ConfigError);
  optodes.sources[0].inward_normal = -optodes.sources[0].inward_normal;
  CHECK_THROWS_AS(simulate_source(p, optodes, 0, t), LaunchError);
}

TEST_CASE("path accumulator merges repeated voxels") {
  PathAccumulator acc;
  acc.add(5, 1.0);
  acc.add(5, 0.5);
  acc.add(2, 0.25);
  acc.add(5, 0.25);
  acc.add(9, 0.0);
  CHECK(acc.segments().size() == 3);
  const auto c = acc.collapse();
  REQUIRE(c.size() == 2);
  CHECK(c[0] == PathSegment{2, 0.25});
  CHECK(c[1] == PathSegment{5, 1.75});
}
