#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dotmarg/geometry.hpp"

namespace dotmarg {

// Tissue labels. Label 0 is exterior air.
enum class Tissue : std::uint8_t {
  kExterior = 0,
  kScalpSkull = 1,
  kCsf1 = 2,
  kCsf2 = 3,
  kGrayMatter = 4,
  kWhiteMatter = 5,
};
inline constexpr int kTissueCount = 6;

std::string tissue_name(Tissue t);
Tissue tissue_from_name(const std::string& name);
inline std::uint8_t label_of(Tissue t) { return static_cast<std::uint8_t>(t); }
inline bool is_brain(std::uint8_t label) {
  return label == label_of(Tissue::kGrayMatter) || label == label_of(Tissue::kWhiteMatter) ||
         label == label_of(Tissue::kCsf2);
}

struct OpticalProperties {
  double mu_a = 0.0;  // mm^-1
  double mu_s = 0.0;  // mm^-1
  double g = 0.0;
  double nu = 1.0;

  friend bool operator==(const OpticalProperties&, const OpticalProperties&) = default;
};

// Scalp & skull, CSF-1, CSF-2, GM and WM at 798 nm; index 0 is the exterior.
std::vector<OpticalProperties> default_tissue_table();

struct VoxelPhantom {
  GridDims dims;
  double voxel_size = 1.0;  // mm, isotropic
  std::vector<std::uint8_t> labels;
  std::vector<OpticalProperties> tissue_table;

  std::uint8_t label(int i, int j, int k) const {
    return dims.contains(i, j, k) ? labels[dims.linear(i, j, k)] : 0;
  }
  std::uint8_t label(const VoxelIndex& v) const { return label(v[0], v[1], v[2]); }
  Vec3 center(std::size_t idx) const;
  Vec3 center(const VoxelIndex& v) const;
  VoxelIndex voxel_at(const Vec3& p) const;

  // Per-voxel absorption from the tissue table (exterior voxels get 0).
  std::vector<double> absorption_map() const;
  // Copy with one tissue's absorption replaced.
  VoxelPhantom with_absorption(Tissue t, double mu_a) const;

  std::size_t count(std::uint8_t label) const;
  bool is_surface(std::size_t idx) const;

  // Throws ConfigError if a label lacks a table entry or the exterior is not
  // connected to the grid boundary.
  void validate() const;
};

enum class PhantomShape { kHemisphere, kSlab };

struct CsfPocket {
  Vec3 center;    // mm
  double radius;  // mm
};

struct LayeredPhantomConfig {
  PhantomShape shape = PhantomShape::kHemisphere;
  GridDims dims{32, 32, 32};
  double voxel_size = 1.0;
  // Hemisphere: dome center (the flat face lies in the plane z = center.z).
  // Slab: the top surface is at z = center.z + outer_radius, the base at z = center.z.
  std::optional<Vec3> center;
  double outer_radius = 14.0;
  double scalp_skull = 3.0;
  double csf1 = 1.0;
  double gray_matter = 3.0;
  std::vector<CsfPocket> csf2_pockets;
  std::vector<OpticalProperties> tissue_table = default_tissue_table();

  Vec3 resolved_center() const;
};

VoxelPhantom build_layered_phantom(const LayeredPhantomConfig& config);

// Sparse absorption change keyed by linear voxel index.
struct PerturbationField {
  std::vector<std::pair<std::size_t, double>> entries;  // sorted by voxel, no duplicates
  std::vector<std::string> warnings;

  PerturbationField& operator+=(const PerturbationField& other);
  std::size_t support_size() const;
  std::vector<double> dense(std::size_t voxel_count) const;
  double at(std::size_t voxel) const;
};

PerturbationField insert_perturbation(const VoxelPhantom& phantom, const Vec3& center, double radius, double contrast,
                                      const std::optional<std::set<Tissue>>& tissue_filter = std::nullopt);

struct Source {
  Vec3 position;       // center of the snapped surface voxel, mm
  Vec3 inward_normal;  // unit
  double waist_radius = 1.25;
  std::size_t voxel = 0;
};

struct Detector {
  Vec3 position;
  double capture_radius = 1.82;
  std::size_t voxel = 0;
};

struct SourceDetectorPair {
  int source = 0;
  int detector = 0;
  friend bool operator==(const SourceDetectorPair&, const SourceDetectorPair&) = default;
};

struct OptodeConfig {
  std::vector<Source> sources;
  std::vector<Detector> detectors;
  double frequency = 100e6;  // Hz
  double sds_cutoff = 40.0;  // mm
  std::vector<SourceDetectorPair> pairs;

  std::size_t m() const { return pairs.size(); }
  std::size_t l() const { return sources.size() + detectors.size(); }
  double separation(const SourceDetectorPair& p) const;
};

struct OptodePlacementOptions {
  double waist_radius = 1.25;
  double capture_radius = 1.82;
  // Sites farther than this from the nearest surface voxel are rejected.
  double max_snap_distance = 3.0;
  double normal_smoothing = 1.5;  // voxels
};

OptodeConfig place_optodes(const VoxelPhantom& phantom, std::span<const Vec3> source_sites,
                           std::span<const Vec3> detector_sites, double frequency, double sds_cutoff,
                           const OptodePlacementOptions& options = {});

// Inward unit normal at a surface voxel: normalized gradient of a Gaussian-smoothed
// occupancy indicator.
Vec3 surface_normal(const VoxelPhantom& phantom, std::size_t voxel, double smoothing_voxels = 1.5);

// Columns of J_total whose magnitude exceeds threshold_fraction times the row's
// maximum over brain columns, for any row. Returns one flag per column.
std::vector<std::uint8_t> compute_fov(const Eigen::MatrixXd& j_total, std::span<const std::uint8_t> brain_column,
                                      double threshold_fraction);

// Selects the ROI among FOV voxels.
struct RoiSpec {
  enum class Kind { kWhole, kTissues, kExcludeTissues, kHalfSpace };
  Kind kind = Kind::kWhole;
  std::set<Tissue> tissues;
  // kHalfSpace keeps voxels with dot(center - point, normal) <= 0.
  Vec3 point;
  Vec3 normal{0, 0, 1};

  static RoiSpec whole() { return {}; }
  static RoiSpec only(std::set<Tissue> t) { return {Kind::kTissues, std::move(t), {}, {0, 0, 1}}; }
  static RoiSpec excluding(std::set<Tissue> t) { return {Kind::kExcludeTissues, std::move(t), {}, {0, 0, 1}}; }
  static RoiSpec half_space(const Vec3& point, const Vec3& normal) { return {Kind::kHalfSpace, {}, point, normal}; }

  bool selects(const VoxelPhantom& phantom, std::size_t voxel) const;
};

struct RegionMasks {
  std::vector<std::uint8_t> fov, roi, roni;  // per voxel
  std::vector<std::size_t> fov_voxels, roi_voxels, roni_voxels;  // ascending; column maps
  // Position of each ROI / RONI voxel inside fov_voxels.
  std::vector<std::size_t> roi_in_fov, roni_in_fov;

  std::size_t n() const { return roi_voxels.size(); }
  std::size_t n_tilde() const { return roni_voxels.size(); }
  std::size_t n_total() const { return fov_voxels.size(); }
};

RegionMasks split_roi_roni(const VoxelPhantom& phantom, std::span<const std::uint8_t> fov, const RoiSpec& spec);

}  // namespace dotmarg
