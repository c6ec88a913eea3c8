#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dotmarg/bayes.hpp"
#include "dotmarg/io.hpp"
#include "dotmarg/phantom.hpp"
#include "dotmarg/projector.hpp"
#include "dotmarg/replay.hpp"
#include "dotmarg/scenario.hpp"
#include "dotmarg/transport.hpp"

namespace dotmarg {

VoxelPhantom build_phantom(const ScenarioConfig& config);
OptodeConfig build_optodes(const ScenarioConfig& config, const VoxelPhantom& phantom);
PerturbationField build_truth(const ScenarioConfig& config, const VoxelPhantom& phantom);

// One record set per source, transport seed derived from the root seed.
std::vector<PhotonRecordSet> simulate_all(const ScenarioConfig& config, const VoxelPhantom& phantom,
                                          const OptodeConfig& optodes);

// Everything a case needs that does not depend on the coupling or noise draws.
struct Workspace {
  ScenarioConfig config;
  VoxelPhantom phantom;  // assumed baseline
  OptodeConfig optodes;
  std::vector<PhotonRecordSet> records;
  CouplingJacobian coupling;
  RegionMasks masks;
  Eigen::MatrixXd j_total;  // 2m x n_total, FOV columns at the assumed baseline
  PriorModel prior;         // over the FOV
  std::map<std::string, double> timing;
};

// Simulates unless `records` is given (e.g. loaded from disk or shared across
// cases on the same geometry).
Workspace prepare_workspace(const ScenarioConfig& config, std::optional<std::vector<PhotonRecordSet>> records = {});

// The config's case on a different ROI reuses the records but not the masks.
Workspace with_config(const Workspace& base, const ScenarioConfig& config);

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::uint32_t crc32 = 0;
};

struct RunReport {
  int case_id = 0;
  std::uint64_t seed = 0;
  std::string error_mask;  // "roi" (equal to the FOV when the ROI is whole)
  double naive_error = 0.0;
  double projected_error = 0.0;
  double reference_error = 0.0;
  std::string provenance;
  Eigen::Index nullspace_dimension = 0;  // requested k (0 for the coupling-only projection)
  Eigen::Index projection_rank = 0;
  Eigen::Index data_length = 0;
  std::vector<double> spectrum;  // eigenvalues of the subspace problem or singular values of the stack
  std::size_t m = 0, l = 0, n = 0, n_tilde = 0, n_total = 0;
  std::map<std::string, double> timing;  // seconds
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
  io::json config;
  std::vector<ManifestEntry> manifest;

  // Full-grid volumes (zero outside the reconstruction mask).
  std::vector<double> truth, naive, projected, reference;
  Eigen::MatrixXd projection;

  io::json to_json() const;
};

RunReport run_case(const Workspace& workspace);
RunReport run_case1(const ScenarioConfig& config);
RunReport run_case2(const ScenarioConfig& config);
RunReport run_case3(const ScenarioConfig& config);
RunReport run_case4(const ScenarioConfig& config);

// report.json, errors.csv, volumes with sidecars and PNG slices; fills the manifest.
void write_run_outputs(RunReport& report, const Workspace& workspace, const std::filesystem::path& directory);

void write_phantom_outputs(const Workspace& workspace, const std::filesystem::path& directory);
void write_record_outputs(const Workspace& workspace, const std::filesystem::path& directory);
void write_jacobian_outputs(const Workspace& workspace, const std::filesystem::path& directory);
// Loads "records/source_<k>.dmpr" for every source, if all are present.
std::optional<std::vector<PhotonRecordSet>> load_records(const std::filesystem::path& directory, std::size_t sources);

// Re-hashes every manifest file listed in report.json; returns a list of problems.
std::vector<std::string> verify_manifest(const std::filesystem::path& directory);

}  // namespace dotmarg
