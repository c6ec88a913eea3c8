#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dotmarg/io.hpp"
#include "dotmarg/phantom.hpp"
#include "dotmarg/transport.hpp"

namespace dotmarg {

struct SphereSpec {
  Vec3 center;
  double radius = 5.0;
  double contrast = 0.008;  // mm^-1
  std::optional<std::set<Tissue>> tissues;
};

// Sites on a ring of the hemisphere: polar angle from the dome apex, evenly
// spaced azimuths starting at azimuth_offset.
struct RingSpec {
  double polar_deg = 0.0;
  int count = 1;
  double azimuth_offset_deg = 0.0;
};

struct OptodeSpec {
  std::vector<Vec3> sources, detectors;
  std::vector<RingSpec> source_rings, detector_rings;
  double frequency = 100e6;
  double sds_cutoff = 40.0;
  OptodePlacementOptions placement;
};

struct ProbeSpec {
  Tissue tissue = Tissue::kGrayMatter;
  double delta = 0.0;
};

struct ScenarioConfig {
  LayeredPhantomConfig phantom;
  OptodeSpec optodes;
  TransportOptions transport;
  std::vector<SphereSpec> truth;
  int case_id = 1;
  double delta_a = 0.9;
  double delta_phi = 3.14159265358979323846 / 360.0;
  RoiSpec roi;
  std::optional<Eigen::Index> nullspace_dimension;  // default: ceil(2m / 4)
  double rank_tolerance = 1e-10;
  // Case 3: absorption the data were generated with, and the probe shifts.
  std::map<Tissue, double> true_absorption;
  std::vector<ProbeSpec> probes;
  double prior_sigma = 0.003;
  double prior_correlation = 3.0;
  double noise_fraction = 0.01;
  double fov_threshold = 0.01;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  io::json source;  // the parsed document, echoed into reports

  // Throws ConfigError when the case is missing a required part.
  void validate() const;
};

ScenarioConfig parse_scenario(const io::json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Defaults used when a config omits a section: 32^3 hemisphere, 5 sources and
// 8 detectors on rings around the apex.
ScenarioConfig default_scenario(int case_id = 1);

std::vector<Vec3> ring_sites(const Vec3& dome_center, double radius, std::span<const RingSpec> rings);

// Purpose codes for derive_seed.
inline constexpr std::uint64_t kTransportSeed = 1;
inline constexpr std::uint64_t kCouplingSeed = 2;
inline constexpr std::uint64_t kNoiseSeed = 3;

}  // namespace dotmarg
