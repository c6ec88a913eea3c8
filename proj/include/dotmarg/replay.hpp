#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dotmarg/phantom.hpp"
#include "dotmarg/transport.hpp"

namespace dotmarg {

// Values are [lnA(pair 0..m-1), phase(pair 0..m-1)].
struct MeasurementFrame {
  std::vector<double> values;
  std::vector<SourceDetectorPair> pairs;
  double frequency = 0.0;

  std::size_t m() const { return pairs.size(); }
  double log_amplitude(std::size_t k) const { return values[k]; }
  double phase(std::size_t k) const { return values[m() + k]; }
  Eigen::Map<const Eigen::VectorXd> vector() const {
    return {values.data(), static_cast<Eigen::Index>(values.size())};
  }
};

// Per-optode coupling; the ideal state is A = 1, phi = 0 everywhere.
struct CouplingState {
  std::vector<double> source_amplitude, source_phase;
  std::vector<double> detector_amplitude, detector_phase;

  static CouplingState ideal(std::size_t sources, std::size_t detectors);
  // A ~ U(delta_a, 1), phi ~ U(0, delta_phi) for every optode.
  static CouplingState random(std::size_t sources, std::size_t detectors, double delta_a, double delta_phi,
                              std::uint64_t seed);
  // Stacked (ln A_src, ln A_det, phi_src, phi_det), matching the coupling
  // Jacobian's column order.
  Eigen::VectorXd stacked() const;
};

// X + iY per detector: (1/N) sum_p |w_p| exp(i 2 pi f t_p), |w_p| = exp(-sum_j mu_a_j l_pj),
// accumulated with compensated summation in launch order.
std::vector<std::complex<double>> complex_intensity(const PhotonRecordSet& records, std::span<const double> mu_a,
                                                    double frequency, std::size_t detector_count);

// Complex intensity per configured pair; throws DeadChannelError if any pair
// has no detected packet.
std::vector<std::complex<double>> pair_intensities(std::span<const PhotonRecordSet> record_sets,
                                                   const OptodeConfig& optodes, std::span<const double> mu_a);

MeasurementFrame measurement_frame(std::span<const std::complex<double>> intensities,
                                   std::span<const SourceDetectorPair> pairs, double frequency);

MeasurementFrame replay_frame(std::span<const PhotonRecordSet> record_sets, const OptodeConfig& optodes,
                              std::span<const double> mu_a);

MeasurementFrame apply_coupling(const MeasurementFrame& frame, const CouplingState& state,
                                std::vector<std::string>* warnings = nullptr);

Eigen::VectorXd difference_data(const MeasurementFrame& z, const MeasurementFrame& z0);

struct NoisyData {
  Eigen::VectorXd y;
  Eigen::VectorXd noise_variance;  // diagonal of Gamma_e
  double gamma_log_amplitude = 0.0;
  double gamma_phase = 0.0;
};

// Standard deviations are `fraction` times the largest |y0| within each data type.
NoisyData noise_model(const Eigen::VectorXd& y0, double fraction = 0.01);
NoisyData add_noise(const Eigen::VectorXd& y0, std::uint64_t seed, double fraction = 0.01);
// Adds the same draw to a different signal (paired comparisons).
Eigen::VectorXd noise_draw(const NoisyData& model, std::uint64_t seed);

// d lnA / d mu_a and d phi / d mu_a for every pair (rows) and listed voxel (columns).
Eigen::MatrixXd absorption_jacobian(std::span<const PhotonRecordSet> record_sets, const OptodeConfig& optodes,
                                    std::span<const double> mu_a, std::span<const std::size_t> columns);

// J(mu_a with `tissue` shifted by delta) - J(mu_a).
Eigen::MatrixXd tissue_difference_jacobian(std::span<const PhotonRecordSet> record_sets, const VoxelPhantom& phantom,
                                           const OptodeConfig& optodes, std::span<const double> mu_a, Tissue tissue,
                                           double delta, std::span<const std::size_t> columns);

struct JacobianSet {
  Eigen::MatrixXd j;        // 2m x n, ROI columns
  Eigen::MatrixXd j_tilde;  // 2m x n~, RONI columns
  std::vector<std::size_t> roi_columns, roni_columns;
  std::vector<OpticalProperties> baseline;
};

JacobianSet build_jacobian_set(std::span<const PhotonRecordSet> record_sets, const VoxelPhantom& phantom,
                               const OptodeConfig& optodes, const RegionMasks& masks);

}  // namespace dotmarg
