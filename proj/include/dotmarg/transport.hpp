#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dotmarg/geometry.hpp"
#include "dotmarg/phantom.hpp"

namespace dotmarg {

inline constexpr double kSpeedOfLight = 299.792458;  // mm per ns

struct PathSegment {
  std::uint32_t voxel = 0;
  double length = 0.0;  // mm
  friend bool operator==(const PathSegment&, const PathSegment&) = default;
};

struct PhotonRecord {
  std::uint64_t launch_counter = 0;
  int detector_index = 0;
  double time_of_flight = 0.0;         // seconds
  std::vector<PathSegment> pathlengths;  // sorted by voxel, unique

  double total_length() const;
  friend bool operator==(const PhotonRecord&, const PhotonRecord&) = default;
};

struct PhotonRecordSet {
  int source_index = 0;
  std::uint64_t launched_count = 0;
  std::uint64_t escape_count = 0;
  std::uint64_t expired_count = 0;
  std::vector<PhotonRecord> records;  // ascending launch_counter

  friend bool operator==(const PhotonRecordSet&, const PhotonRecordSet&) = default;
};

struct TransportOptions {
  std::uint64_t n_packets = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  double max_time_of_flight = 5e-9;  // seconds
  // Launch offsets beyond this many waist radii are redrawn.
  double beam_truncation = 2.0;
};

// Henyey-Greenstein deflection followed by a uniform azimuth about `incoming`.
Vec3 sample_scatter_direction(double g, const Vec3& incoming, double u1, double u2);
double henyey_greenstein_cosine(double g, double u);

// Scattering-only view of the phantom used by the random walk; absorption is
// deliberately not reachable from here.
class ScatteringMedium {
 public:
  explicit ScatteringMedium(const VoxelPhantom& phantom);

  const GridDims& dims() const { return dims_; }
  double voxel_size() const { return voxel_size_; }
  std::uint8_t label(const VoxelIndex& v) const {
    return dims_.contains(v) ? labels_[dims_.linear(v)] : 0;
  }
  double mu_s(std::uint8_t label) const { return mu_s_[label]; }
  double g(std::uint8_t label) const { return g_[label]; }
  double nu(std::uint8_t label) const { return nu_[label]; }

 private:
  GridDims dims_;
  double voxel_size_;
  std::vector<std::uint8_t> labels_;
  std::vector<double> mu_s_, g_, nu_;
};

struct PacketState {
  Vec3 position;   // mm
  Vec3 direction;  // unit
  VoxelIndex voxel{};
};

enum class AdvanceEvent { kScatter, kBoundary };

struct AdvanceResult {
  AdvanceEvent event = AdvanceEvent::kScatter;
  double remaining_budget = 0.0;  // dimensionless, > 0 only for kBoundary
  int axis = 0;                   // boundary face axis
  int step = 0;                   // +1 / -1 along axis
  double path_length = 0.0;       // mm travelled during this call
  double optical_time = 0.0;      // sum of nu * length over segments (mm)
};

// Appends per-voxel chord lengths; consecutive hits of the same voxel merge.
class PathAccumulator {
 public:
  void add(std::uint32_t voxel, double length) {
    if (!(length > 0.0)) return;
    if (!segments_.empty() && segments_.back().voxel == voxel) {
      segments_.back().length += length;
    } else {
      segments_.push_back({voxel, length});
    }
  }
  void clear() { segments_.clear(); }
  const std::vector<PathSegment>& segments() const { return segments_; }
  // Sorted, one entry per voxel.
  std::vector<PathSegment> collapse() const;

 private:
  std::vector<PathSegment> segments_;
};

// Ray-marches the packet through voxels, spending the dimensionless free-path
// budget at the local scattering rate. Stops at the scattering site or at the
// face of the current voxel when the neighbour across it is exterior.
AdvanceResult advance_packet(const ScatteringMedium& medium, PacketState& state, double budget,
                             PathAccumulator& path);

struct BoundaryOutcome {
  bool exits = false;
  Vec3 direction;  // refracted (exit) or mirrored (reflection)
  double reflectance = 0.0;
};

// Unpolarized Fresnel reflectance; 1 beyond the critical angle.
double fresnel_reflectance(double nu_inside, double nu_outside, double cos_incidence);

// `surface_normal` is the outward unit normal; `direction` must point outwards.
BoundaryOutcome boundary_interaction(double nu_inside, double nu_outside, const Vec3& direction,
                                     const Vec3& surface_normal, double u);

PhotonRecordSet simulate_source(const VoxelPhantom& phantom, const OptodeConfig& optodes, int source_index,
                                const TransportOptions& options);

// Verifies launched == detected + escaped + expired and per-record ToF consistency.
bool check_accounting(const PhotonRecordSet& set);

double time_of_flight(const VoxelPhantom& phantom, const std::vector<PathSegment>& path);

}  // namespace dotmarg
