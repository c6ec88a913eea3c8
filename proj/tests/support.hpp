#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dotmarg/phantom.hpp"
#include "dotmarg/transport.hpp"

namespace testing {

// Seeded generator for property tests; each case draws its own instances.
struct Gen {
  std::mt19937_64 engine;
  explicit Gen(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
  double normal() { return std::normal_distribution<double>()(engine); }

  Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }
  Eigen::VectorXd vector(Eigen::Index n) { return matrix(n, 1).col(0); }

  // SPD with eigenvalues in [lo, hi].
  Eigen::MatrixXd spd(Eigen::Index n, double lo = 0.1, double hi = 2.0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(matrix(n, n));
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = uniform(lo, hi);
    return q * d.asDiagonal() * q.transpose();
  }

  // Record set over the given voxel ids, `count` packets to `detectors` detectors.
  dotmarg::PhotonRecordSet records(int source, std::size_t count, int detectors, std::uint32_t voxels,
                                   std::uint64_t launched) {
    dotmarg::PhotonRecordSet set;
    set.source_index = source;
    set.launched_count = launched;
    for (std::size_t p = 0; p < count; ++p) {
      dotmarg::PhotonRecord rec;
      rec.launch_counter = p;
      rec.detector_index = integer(0, detectors - 1);
      std::vector<std::uint32_t> ids;
      const int segs = integer(1, 6);
      for (int s = 0; s < segs; ++s) ids.push_back(static_cast<std::uint32_t>(integer(0, static_cast<int>(voxels) - 1)));
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      double total = 0.0;
      for (auto v : ids) {
        rec.pathlengths.push_back({v, uniform(0.1, 8.0)});
        total += rec.pathlengths.back().length;
      }
      rec.time_of_flight = 1.4 * total / (dotmarg::kSpeedOfLight * 1e9);
      set.records.push_back(rec);
    }
    set.escape_count = launched - count;
    return set;
  }
};

// 32^3 hemisphere with the default layers; shared by several suites.
inline dotmarg::VoxelPhantom desk_phantom() {
  dotmarg::LayeredPhantomConfig cfg;
  cfg.outer_radius = 15.0;
  return dotmarg::build_layered_phantom(cfg);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
