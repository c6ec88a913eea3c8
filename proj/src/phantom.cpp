#include "dotmarg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>

#include "dotmarg/errors.hpp"

namespace dotmarg {

namespace {

const char* const kTissueNames[kTissueCount] = {"exterior", "scalp_skull", "csf1", "csf2", "gray_matter", "white_matter"};

}  // namespace

std::string tissue_name(Tissue t) { return kTissueNames[static_cast<int>(t)]; }

Tissue tissue_from_name(const std::string& name) {
  for (int i = 0; i < kTissueCount; ++i) {
    if (name == kTissueNames[i]) return static_cast<Tissue>(i);
  }
  throw ConfigError("unknown tissue name '" + name + "'");
}

std::vector<OpticalProperties> default_tissue_table() {
  return {
      {0.0, 0.0, 0.0, 1.0},      // exterior
      {0.015, 16.0, 0.9, 1.4},   // scalp & skull
      {0.004, 1.6, 0.9, 1.4},    // CSF-1
      {0.002, 0.4, 0.9, 1.4},    // CSF-2
      {0.048, 5.0, 0.9, 1.4},    // gray matter
      {0.037, 10.0, 0.9, 1.4},   // white matter
  };
}

Vec3 VoxelPhantom::center(std::size_t idx) const { return center(dims.unravel(idx)); }

Vec3 VoxelPhantom::center(const VoxelIndex& v) const {
  return {(v[0] + 0.5) * voxel_size, (v[1] + 0.5) * voxel_size, (v[2] + 0.5) * voxel_size};
}

VoxelIndex VoxelPhantom::voxel_at(const Vec3& p) const {
  return {static_cast<int>(std::floor(p.x / voxel_size)), static_cast<int>(std::floor(p.y / voxel_size)),
          static_cast<int>(std::floor(p.z / voxel_size))};
}

std::vector<double> VoxelPhantom::absorption_map() const {
  std::vector<double> mu_a(labels.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) mu_a[i] = tissue_table[labels[i]].mu_a;
  }
  return mu_a;
}

VoxelPhantom VoxelPhantom::with_absorption(Tissue t, double mu_a) const {
  VoxelPhantom copy = *this;
  copy.tissue_table.at(static_cast<std::size_t>(t)).mu_a = mu_a;
  return copy;
}

std::size_t VoxelPhantom::count(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

bool VoxelPhantom::is_surface(std::size_t idx) const {
  if (labels[idx] == 0) return false;
  const auto v = dims.unravel(idx);
  static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (const auto& o : kOffsets) {
    if (label(v[0] + o[0], v[1] + o[1], v[2] + o[2]) == 0) return true;
  }
  return false;
}

void VoxelPhantom::validate() const {
  if (labels.size() != dims.count()) throw ConfigError("label array does not match grid dimensions");
  for (auto l : labels) {
    if (l >= tissue_table.size()) {
      throw ConfigError("voxel label " + std::to_string(l) + " has no tissue table entry");
    }
  }
  for (std::size_t t = 1; t < tissue_table.size(); ++t) {
    const auto& p = tissue_table[t];
    if (!(p.mu_a >= 0.0) || !(p.mu_s >= 0.0) || !(p.nu >= 1.0) || !(std::abs(p.g) < 1.0)) {
      throw ConfigError("tissue " + std::to_string(t) + " has invalid optical properties");
    }
  }
  // Flood the exterior from the grid faces; every air voxel must be reached.
  std::vector<std::uint8_t> seen(labels.size(), 0);
  std::deque<std::size_t> queue;
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    if (labels[idx] != 0) continue;
    const auto v = dims.unravel(idx);
    if (v[0] == 0 || v[1] == 0 || v[2] == 0 || v[0] == dims.nx - 1 || v[1] == dims.ny - 1 || v[2] == dims.nz - 1) {
      seen[idx] = 1;
      queue.push_back(idx);
    }
  }
  static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const auto v = dims.unravel(queue.front());
    queue.pop_front();
    for (const auto& o : kOffsets) {
      const int i = v[0] + o[0], j = v[1] + o[1], k = v[2] + o[2];
      if (!dims.contains(i, j, k)) continue;
      const auto n = dims.linear(i, j, k);
      if (labels[n] == 0 && !seen[n]) {
        seen[n] = 1;
        queue.push_back(n);
      }
    }
  }
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    if (labels[idx] == 0 && !seen[idx]) throw ConfigError("exterior region is not connected (enclosed air voxel)");
  }
}

Vec3 LayeredPhantomConfig::resolved_center() const {
  if (center) return *center;
  return {dims.nx * voxel_size / 2.0, dims.ny * voxel_size / 2.0, voxel_size};
}

VoxelPhantom build_layered_phantom(const LayeredPhantomConfig& config) {
  const auto& d = config.dims;
  if (d.nx < 16 || d.ny < 16 || d.nz < 16) throw ConfigError("phantom grid must be at least 16^3");
  if (!(config.voxel_size > 0.0)) throw ConfigError("voxel size must be positive");
  if (!(config.outer_radius > 0.0)) throw ConfigError("outer radius must be positive");
  if (config.scalp_skull < 0.0 || config.csf1 < 0.0 || config.gray_matter < 0.0) {
    throw ConfigError("layer thicknesses must be non-negative");
  }
  const double layered = config.scalp_skull + config.csf1 + config.gray_matter;
  if (layered > config.outer_radius) throw ConfigError("layer thicknesses exceed the outer radius");
  if (config.tissue_table.size() != kTissueCount) throw ConfigError("tissue table must have 6 entries");

  const Vec3 c = config.resolved_center();
  const double h = config.voxel_size;
  const Vec3 extent{d.nx * h, d.ny * h, d.nz * h};
  if (config.shape == PhantomShape::kHemisphere) {
    const double half_extent = std::min({extent.x, extent.y, extent.z}) / 2.0;
    if (config.outer_radius > half_extent) throw ConfigError("outer radius exceeds half the grid extent");
    if (c.x - config.outer_radius < 0 || c.x + config.outer_radius > extent.x || c.y - config.outer_radius < 0 ||
        c.y + config.outer_radius > extent.y || c.z < 0 || c.z + config.outer_radius > extent.z) {
      throw ConfigError("hemisphere does not fit inside the grid");
    }
  } else if (c.z < 0 || c.z + config.outer_radius > extent.z) {
    throw ConfigError("slab does not fit inside the grid");
  }

  VoxelPhantom phantom;
  phantom.dims = d;
  phantom.voxel_size = h;
  phantom.tissue_table = config.tissue_table;
  phantom.labels.assign(d.count(), 0);

  const double b1 = config.scalp_skull;
  const double b2 = b1 + config.csf1;
  const double b3 = b2 + config.gray_matter;
  for (int k = 0; k < d.nz; ++k) {
    for (int j = 0; j < d.ny; ++j) {
      for (int i = 0; i < d.nx; ++i) {
        const Vec3 p{(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h};
        if (p.z < c.z) continue;
        double depth;
        if (config.shape == PhantomShape::kHemisphere) {
          const double r = distance(p, c);
          if (r >= config.outer_radius) continue;
          depth = config.outer_radius - r;
        } else {
          if (p.z > c.z + config.outer_radius) continue;
          depth = c.z + config.outer_radius - p.z;
        }
        Tissue t = Tissue::kWhiteMatter;
        if (depth < b1) {
          t = Tissue::kScalpSkull;
        } else if (depth < b2) {
          t = Tissue::kCsf1;
        } else if (depth < b3) {
          t = Tissue::kGrayMatter;
        }
        if (t == Tissue::kGrayMatter || t == Tissue::kWhiteMatter) {
          for (const auto& pocket : config.csf2_pockets) {
            if (distance(p, pocket.center) <= pocket.radius) t = Tissue::kCsf2;
          }
        }
        phantom.labels[d.linear(i, j, k)] = label_of(t);
      }
    }
  }
  phantom.validate();
  return phantom;
}

PerturbationField& PerturbationField::operator+=(const PerturbationField& other) {
  std::map<std::size_t, double> merged(entries.begin(), entries.end());
  for (const auto& [voxel, value] : other.entries) merged[voxel] += value;
  entries.assign(merged.begin(), merged.end());
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  return *this;
}

std::size_t PerturbationField::support_size() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.second != 0.0; }));
}

std::vector<double> PerturbationField::dense(std::size_t voxel_count) const {
  std::vector<double> out(voxel_count, 0.0);
  for (const auto& [voxel, value] : entries) out.at(voxel) += value;
  return out;
}

double PerturbationField::at(std::size_t voxel) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), voxel,
                             [](const auto& e, std::size_t v) { return e.first < v; });
  return (it != entries.end() && it->first == voxel) ? it->second : 0.0;
}

PerturbationField insert_perturbation(const VoxelPhantom& phantom, const Vec3& center, double radius, double contrast,
                                      const std::optional<std::set<Tissue>>& tissue_filter) {
  if (!(radius > 0.0)) throw ConfigError("perturbation radius must be positive");
  const auto cv = phantom.voxel_at(center);
  if (!phantom.dims.contains(cv)) throw ConfigError("perturbation center lies outside the grid");

  PerturbationField field;
  const int reach = static_cast<int>(std::ceil(radius / phantom.voxel_size)) + 1;
  for (int k = cv[2] - reach; k <= cv[2] + reach; ++k) {
    for (int j = cv[1] - reach; j <= cv[1] + reach; ++j) {
      for (int i = cv[0] - reach; i <= cv[0] + reach; ++i) {
        if (!phantom.dims.contains(i, j, k)) continue;
        const auto idx = phantom.dims.linear(i, j, k);
        const auto label = phantom.labels[idx];
        if (label == 0) continue;
        if (tissue_filter && !tissue_filter->contains(static_cast<Tissue>(label))) continue;
        if (distance(phantom.center(VoxelIndex{i, j, k}), center) <= radius) field.entries.emplace_back(idx, contrast);
      }
    }
  }
  std::sort(field.entries.begin(), field.entries.end());
  if (field.entries.empty()) {
    std::ostringstream msg;
    msg << "perturbation sphere at (" << center.x << ", " << center.y << ", " << center.z << ") r=" << radius
        << " selects no phantom voxels";
    field.warnings.push_back(msg.str());
  }
  return field;
}

double OptodeConfig::separation(const SourceDetectorPair& p) const {
  return distance(sources.at(p.source).position, detectors.at(p.detector).position);
}

Vec3 surface_normal(const VoxelPhantom& phantom, std::size_t voxel, double smoothing_voxels) {
  const auto v = phantom.dims.unravel(voxel);
  const int reach = static_cast<int>(std::ceil(3.0 * smoothing_voxels));
  const double inv_two_var = 1.0 / (2.0 * smoothing_voxels * smoothing_voxels);
  // Gradient of (indicator * Gaussian) evaluated at the voxel center.
  Vec3 grad;
  for (int dk = -reach; dk <= reach; ++dk) {
    for (int dj = -reach; dj <= reach; ++dj) {
      for (int di = -reach; di <= reach; ++di) {
        if (phantom.label(v[0] + di, v[1] + dj, v[2] + dk) == 0) continue;
        const double w = std::exp(-(di * di + dj * dj + dk * dk) * inv_two_var);
        grad += Vec3{static_cast<double>(di), static_cast<double>(dj), static_cast<double>(dk)} * w;
      }
    }
  }
  const double len = norm(grad);
  if (!(len > 1e-12)) throw PlacementError("surface normal is undefined at voxel " + std::to_string(voxel));
  return grad * (1.0 / len);
}

namespace {

std::size_t snap_to_surface(const VoxelPhantom& phantom, const std::vector<std::size_t>& surface, const Vec3& site,
                            double max_snap, const char* kind, std::size_t index) {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (auto idx : surface) {
    const double dist = distance(phantom.center(idx), site);
    if (dist < best_dist) {
      best_dist = dist;
      best = idx;
    }
  }
  if (best_dist > max_snap) {
    std::ostringstream msg;
    msg << kind << " " << index << " at (" << site.x << ", " << site.y << ", " << site.z
        << ") is not adjacent to the exterior surface (nearest surface voxel " << best_dist << " mm away)";
    throw PlacementError(msg.str());
  }
  return best;
}

}  // namespace

OptodeConfig place_optodes(const VoxelPhantom& phantom, std::span<const Vec3> source_sites,
                           std::span<const Vec3> detector_sites, double frequency, double sds_cutoff,
                           const OptodePlacementOptions& options) {
  std::vector<std::size_t> surface;
  for (std::size_t idx = 0; idx < phantom.labels.size(); ++idx) {
    if (phantom.is_surface(idx)) surface.push_back(idx);
  }
  if (surface.empty()) throw PlacementError("phantom has no surface voxels");

  OptodeConfig config;
  config.frequency = frequency;
  config.sds_cutoff = sds_cutoff;
  for (std::size_t s = 0; s < source_sites.size(); ++s) {
    const auto idx = snap_to_surface(phantom, surface, source_sites[s], options.max_snap_distance, "source", s);
    config.sources.push_back(
        {phantom.center(idx), surface_normal(phantom, idx, options.normal_smoothing), options.waist_radius, idx});
  }
  for (std::size_t d = 0; d < detector_sites.size(); ++d) {
    const auto idx = snap_to_surface(phantom, surface, detector_sites[d], options.max_snap_distance, "detector", d);
    config.detectors.push_back({phantom.center(idx), options.capture_radius, idx});
  }
  for (int s = 0; s < static_cast<int>(config.sources.size()); ++s) {
    for (int d = 0; d < static_cast<int>(config.detectors.size()); ++d) {
      SourceDetectorPair pair{s, d};
      if (config.separation(pair) <= sds_cutoff) config.pairs.push_back(pair);
    }
  }
  if (config.pairs.empty()) throw ConfigError("no source-detector pair lies within the separation cutoff");
  return config;
}

std::vector<std::uint8_t> compute_fov(const Eigen::MatrixXd& j_total, std::span<const std::uint8_t> brain_column,
                                      double threshold_fraction) {
  if (static_cast<std::size_t>(j_total.cols()) != brain_column.size()) {
    throw ContractError("brain column flags do not match the Jacobian width");
  }
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
    throw ConfigError("FOV threshold fraction must lie in (0, 1)");
  }
  std::vector<std::uint8_t> fov(brain_column.size(), 0);
  for (Eigen::Index r = 0; r < j_total.rows(); ++r) {
    double brain_max = 0.0;
    for (Eigen::Index c = 0; c < j_total.cols(); ++c) {
      if (brain_column[c]) brain_max = std::max(brain_max, std::abs(j_total(r, c)));
    }
    if (brain_max == 0.0) continue;
    const double threshold = threshold_fraction * brain_max;
    for (Eigen::Index c = 0; c < j_total.cols(); ++c) {
      if (std::abs(j_total(r, c)) > threshold) fov[c] = 1;
    }
  }
  if (std::none_of(fov.begin(), fov.end(), [](auto f) { return f != 0; })) {
    throw NumericalError("field of view is empty: the Jacobian has no brain sensitivity");
  }
  return fov;
}

bool RoiSpec::selects(const VoxelPhantom& phantom, std::size_t voxel) const {
  const auto t = static_cast<Tissue>(phantom.labels[voxel]);
  switch (kind) {
    case Kind::kWhole:
      return true;
    case Kind::kTissues:
      return tissues.contains(t);
    case Kind::kExcludeTissues:
      return !tissues.contains(t);
    case Kind::kHalfSpace:
      return dot(phantom.center(voxel) - point, normal) <= 0.0;
  }
  return false;
}

RegionMasks split_roi_roni(const VoxelPhantom& phantom, std::span<const std::uint8_t> fov, const RoiSpec& spec) {
  if (fov.size() != phantom.labels.size()) throw ContractError("FOV mask does not match the phantom grid");
  RegionMasks masks;
  masks.fov.assign(fov.begin(), fov.end());
  masks.roi.assign(fov.size(), 0);
  masks.roni.assign(fov.size(), 0);
  for (std::size_t v = 0; v < fov.size(); ++v) {
    if (!fov[v]) continue;
    const std::size_t pos = masks.fov_voxels.size();
    masks.fov_voxels.push_back(v);
    if (spec.selects(phantom, v)) {
      masks.roi[v] = 1;
      masks.roi_voxels.push_back(v);
      masks.roi_in_fov.push_back(pos);
    } else {
      masks.roni[v] = 1;
      masks.roni_voxels.push_back(v);
      masks.roni_in_fov.push_back(pos);
    }
  }
  if (masks.roi_voxels.empty()) throw ConfigError("region of interest selects no field-of-view voxels");
  return masks;
}

}  // namespace dotmarg
