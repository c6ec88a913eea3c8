#include "dotmarg/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dotmarg/errors.hpp"
#include "dotmarg/rng.hpp"

namespace dotmarg {

namespace {

// Neumaier-compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

double packet_attenuation(const PhotonRecord& rec, std::span<const double> mu_a) {
  double optical_depth = 0.0;
  for (const auto& s : rec.pathlengths) optical_depth += mu_a[s.voxel] * s.length;
  return std::exp(-optical_depth);
}

const PhotonRecordSet& set_for_source(std::span<const PhotonRecordSet> sets, int source) {
  for (const auto& s : sets) {
    if (s.source_index == source) return s;
  }
  throw ContractError("no photon record set for source " + std::to_string(source));
}

[[noreturn]] void throw_dead(const std::vector<std::pair<int, int>>& dead) {
  std::ostringstream msg;
  msg << "dead channel(s) with no detected packets:";
  for (const auto& [s, d] : dead) msg << " (s" << s << ", d" << d << ")";
  throw DeadChannelError(msg.str(), dead);
}

}  // namespace

CouplingState CouplingState::ideal(std::size_t sources, std::size_t detectors) {
  return {std::vector<double>(sources, 1.0), std::vector<double>(sources, 0.0), std::vector<double>(detectors, 1.0),
          std::vector<double>(detectors, 0.0)};
}

CouplingState CouplingState::random(std::size_t sources, std::size_t detectors, double delta_a, double delta_phi,
                                    std::uint64_t seed) {
  CouplingState s = ideal(sources, detectors);
  CounterRng rng(seed, 0xC0u);
  auto draw = [&rng](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  for (auto& a : s.source_amplitude) a = draw(delta_a, 1.0);
  for (auto& a : s.detector_amplitude) a = draw(delta_a, 1.0);
  for (auto& p : s.source_phase) p = draw(0.0, delta_phi);
  for (auto& p : s.detector_phase) p = draw(0.0, delta_phi);
  return s;
}

Eigen::VectorXd CouplingState::stacked() const {
  const auto ls = source_amplitude.size();
  const auto ld = detector_amplitude.size();
  const auto l = ls + ld;
  Eigen::VectorXd eta(2 * l);
  for (std::size_t i = 0; i < ls; ++i) {
    eta[i] = std::log(source_amplitude[i]);
    eta[l + i] = source_phase[i];
  }
  for (std::size_t j = 0; j < ld; ++j) {
    eta[ls + j] = std::log(detector_amplitude[j]);
    eta[l + ls + j] = detector_phase[j];
  }
  return eta;
}

std::vector<std::complex<double>> complex_intensity(const PhotonRecordSet& records, std::span<const double> mu_a,
                                                    double frequency, std::size_t detector_count) {
  std::vector<CompensatedSum> re(detector_count), im(detector_count);
  const double omega = 2.0 * std::numbers::pi * frequency;
  for (const auto& rec : records.records) {
    if (rec.detector_index < 0 || static_cast<std::size_t>(rec.detector_index) >= detector_count) continue;
    const double w = packet_attenuation(rec, mu_a);
    const double phase = omega * rec.time_of_flight;
    re[rec.detector_index].add(w * std::cos(phase));
    im[rec.detector_index].add(w * std::sin(phase));
  }
  const double inv_n = 1.0 / static_cast<double>(records.launched_count);
  std::vector<std::complex<double>> out(detector_count);
  for (std::size_t d = 0; d < detector_count; ++d) out[d] = {re[d].value() * inv_n, im[d].value() * inv_n};
  return out;
}

std::vector<std::complex<double>> pair_intensities(std::span<const PhotonRecordSet> record_sets,
                                                   const OptodeConfig& optodes, std::span<const double> mu_a) {
  std::vector<std::complex<double>> out(optodes.m());
  std::vector<std::pair<int, int>> dead;
  for (std::size_t s = 0; s < optodes.sources.size(); ++s) {
    bool needed = false;
    for (const auto& p : optodes.pairs) needed |= (p.source == static_cast<int>(s));
    if (!needed) continue;
    const auto& set = set_for_source(record_sets, static_cast<int>(s));
    std::vector<std::size_t> hits(optodes.detectors.size(), 0);
    for (const auto& rec : set.records) {
      if (rec.detector_index >= 0 && static_cast<std::size_t>(rec.detector_index) < hits.size()) {
        ++hits[rec.detector_index];
      }
    }
    const auto per_detector = complex_intensity(set, mu_a, optodes.frequency, optodes.detectors.size());
    for (std::size_t k = 0; k < optodes.m(); ++k) {
      const auto& p = optodes.pairs[k];
      if (p.source != static_cast<int>(s)) continue;
      if (hits[p.detector] == 0) {
        dead.emplace_back(p.source, p.detector);
        continue;
      }
      out[k] = per_detector[p.detector];
    }
  }
  if (!dead.empty()) throw_dead(dead);
  return out;
}

MeasurementFrame measurement_frame(std::span<const std::complex<double>> intensities,
                                   std::span<const SourceDetectorPair> pairs, double frequency) {
  if (intensities.size() != pairs.size()) throw ContractError("intensity count does not match the pair list");
  const std::size_t m = pairs.size();
  MeasurementFrame frame;
  frame.pairs.assign(pairs.begin(), pairs.end());
  frame.frequency = frequency;
  frame.values.resize(2 * m);
  std::vector<std::pair<int, int>> dead;
  for (std::size_t k = 0; k < m; ++k) {
    const auto c = intensities[k];
    if (c == std::complex<double>(0.0, 0.0)) {
      dead.emplace_back(pairs[k].source, pairs[k].detector);
      continue;
    }
    frame.values[k] = std::log(std::hypot(c.real(), c.imag()));
    frame.values[m + k] = std::atan2(c.imag(), c.real());
  }
  if (!dead.empty()) throw_dead(dead);
  return frame;
}

MeasurementFrame replay_frame(std::span<const PhotonRecordSet> record_sets, const OptodeConfig& optodes,
                              std::span<const double> mu_a) {
  const auto c = pair_intensities(record_sets, optodes, mu_a);
  return measurement_frame(c, optodes.pairs, optodes.frequency);
}

MeasurementFrame apply_coupling(const MeasurementFrame& frame, const CouplingState& state,
                                std::vector<std::string>* warnings) {
  MeasurementFrame out = frame;
  const std::size_t m = frame.m();
  for (std::size_t k = 0; k < m; ++k) {
    const auto& p = frame.pairs[k];
    if (static_cast<std::size_t>(p.source) >= state.source_amplitude.size() ||
        static_cast<std::size_t>(p.detector) >= state.detector_amplitude.size()) {
      throw ContractError("coupling state does not cover every optode in the frame");
    }
    out.values[k] += std::log(state.source_amplitude[p.source]) + std::log(state.detector_amplitude[p.detector]);
    out.values[m + k] += state.source_phase[p.source] + state.detector_phase[p.detector];
    if (warnings && std::abs(out.values[m + k]) > std::numbers::pi) {
      warnings->push_back("phase of pair (s" + std::to_string(p.source) + ", d" + std::to_string(p.detector) +
                          ") left (-pi, pi] after coupling; no wrap applied");
    }
  }
  return out;
}

Eigen::VectorXd difference_data(const MeasurementFrame& z, const MeasurementFrame& z0) {
  if (z.pairs != z0.pairs || z.frequency != z0.frequency || z.values.size() != z0.values.size()) {
    throw ContractError("difference data requires frames with identical pairs and frequency");
  }
  return z.vector() - z0.vector();
}

NoisyData noise_model(const Eigen::VectorXd& y0, double fraction) {
  const Eigen::Index m = y0.size() / 2;
  if (y0.size() == 0 || y0.size() % 2 != 0) throw ContractError("difference data must have even length 2m");
  if (y0.cwiseAbs().maxCoeff() == 0.0) throw NumericalError("difference data carry no signal; noise level undefined");
  NoisyData out;
  out.gamma_log_amplitude = fraction * y0.head(m).cwiseAbs().maxCoeff();
  out.gamma_phase = fraction * y0.tail(m).cwiseAbs().maxCoeff();
  out.noise_variance.resize(2 * m);
  out.noise_variance.head(m).setConstant(out.gamma_log_amplitude * out.gamma_log_amplitude);
  out.noise_variance.tail(m).setConstant(out.gamma_phase * out.gamma_phase);
  out.y = y0;
  return out;
}

Eigen::VectorXd noise_draw(const NoisyData& model, std::uint64_t seed) {
  CounterRng rng(seed, 0xE0u);
  Eigen::VectorXd e(model.noise_variance.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = std::sqrt(model.noise_variance[i]) * rng.normal();
  return e;
}

NoisyData add_noise(const Eigen::VectorXd& y0, std::uint64_t seed, double fraction) {
  NoisyData out = noise_model(y0, fraction);
  out.y = y0 + noise_draw(out, seed);
  return out;
}

Eigen::MatrixXd absorption_jacobian(std::span<const PhotonRecordSet> record_sets, const OptodeConfig& optodes,
                                    std::span<const double> mu_a, std::span<const std::size_t> columns) {
  const std::size_t m = optodes.m();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * m), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::int64_t> column_of(mu_a.size(), -1);
  for (std::size_t c = 0; c < columns.size(); ++c) column_of.at(columns[c]) = static_cast<std::int64_t>(c);

  const double omega = 2.0 * std::numbers::pi * optodes.frequency;
  std::vector<std::pair<int, int>> dead;
  // Scratch: compensated complex accumulators per Jacobian column.
  std::vector<CompensatedSum> d_re(columns.size()), d_im(columns.size());
  std::vector<std::size_t> touched;
  std::vector<std::uint8_t> is_touched(columns.size(), 0);

  for (std::size_t k = 0; k < m; ++k) {
    const auto& pair = optodes.pairs[k];
    const auto& set = set_for_source(record_sets, pair.source);
    CompensatedSum c_re, c_im;
    std::size_t hits = 0;
    for (const auto& rec : set.records) {
      if (rec.detector_index != pair.detector) continue;
      ++hits;
      const double w = packet_attenuation(rec, mu_a);
      const double wr = w * std::cos(omega * rec.time_of_flight);
      const double wi = w * std::sin(omega * rec.time_of_flight);
      c_re.add(wr);
      c_im.add(wi);
      for (const auto& s : rec.pathlengths) {
        const auto col = column_of[s.voxel];
        if (col < 0) continue;
        if (!is_touched[col]) {
          is_touched[col] = 1;
          touched.push_back(static_cast<std::size_t>(col));
        }
        d_re[col].add(-s.length * wr);
        d_im[col].add(-s.length * wi);
      }
    }
    if (hits == 0) {
      dead.emplace_back(pair.source, pair.detector);
      continue;
    }
    // The 1/N factor cancels in conj(C) dC / |C|^2.
    const std::complex<double> c(c_re.value(), c_im.value());
    const double mag2 = std::norm(c);
    for (auto col : touched) {
      const std::complex<double> dc(d_re[col].value(), d_im[col].value());
      const std::complex<double> ratio = std::conj(c) * dc / mag2;
      jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(col)) = ratio.real();
      jac(static_cast<Eigen::Index>(m + k), static_cast<Eigen::Index>(col)) = ratio.imag();
      d_re[col] = {};
      d_im[col] = {};
      is_touched[col] = 0;
    }
    touched.clear();
  }
  if (!dead.empty()) throw_dead(dead);
  return jac;
}

Eigen::MatrixXd tissue_difference_jacobian(std::span<const PhotonRecordSet> record_sets, const VoxelPhantom& phantom,
                                           const OptodeConfig& optodes, std::span<const double> mu_a, Tissue tissue,
                                           double delta, std::span<const std::size_t> columns) {
  const auto label = label_of(tissue);
  if (phantom.count(label) == 0) throw ConfigError("tissue " + tissue_name(tissue) + " is absent from the phantom");
  std::vector<double> shifted(mu_a.begin(), mu_a.end());
  for (std::size_t v = 0; v < shifted.size(); ++v) {
    if (phantom.labels[v] == label) shifted[v] += delta;
  }
  return absorption_jacobian(record_sets, optodes, shifted, columns) -
         absorption_jacobian(record_sets, optodes, mu_a, columns);
}

JacobianSet build_jacobian_set(std::span<const PhotonRecordSet> record_sets, const VoxelPhantom& phantom,
                               const OptodeConfig& optodes, const RegionMasks& masks) {
  const auto mu_a = phantom.absorption_map();
  const auto total = absorption_jacobian(record_sets, optodes, mu_a, masks.fov_voxels);
  JacobianSet set;
  set.roi_columns = masks.roi_voxels;
  set.roni_columns = masks.roni_voxels;
  set.baseline = phantom.tissue_table;
  set.j.resize(total.rows(), static_cast<Eigen::Index>(masks.roi_in_fov.size()));
  set.j_tilde.resize(total.rows(), static_cast<Eigen::Index>(masks.roni_in_fov.size()));
  for (std::size_t c = 0; c < masks.roi_in_fov.size(); ++c) {
    set.j.col(static_cast<Eigen::Index>(c)) = total.col(static_cast<Eigen::Index>(masks.roi_in_fov[c]));
  }
  for (std::size_t c = 0; c < masks.roni_in_fov.size(); ++c) {
    set.j_tilde.col(static_cast<Eigen::Index>(c)) = total.col(static_cast<Eigen::Index>(masks.roni_in_fov[c]));
  }
  return set;
}

}  // namespace dotmarg
