#include "dotmarg/transport.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "dotmarg/errors.hpp"
#include "dotmarg/rng.hpp"

namespace dotmarg {

namespace {

constexpr double kSpeedOfLightMmPerSecond = kSpeedOfLight * 1e9;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Distance along `dir` from `pos` to the first face of `voxel`; sets the exit axis.
double distance_to_face(const Vec3& pos, const Vec3& dir, const VoxelIndex& voxel, double h, int& axis) {
  double best = kInfinity;
  axis = 0;
  for (int a = 0; a < 3; ++a) {
    double t;
    if (dir[a] > 0.0) {
      t = ((voxel[a] + 1) * h - pos[a]) / dir[a];
    } else if (dir[a] < 0.0) {
      t = (voxel[a] * h - pos[a]) / dir[a];
    } else {
      continue;
    }
    t = std::max(t, 0.0);
    if (t < best) {
      best = t;
      axis = a;
    }
  }
  return best;
}

// Moves onto the exit face, snapping the crossing coordinate to the face plane.
void move_to_face(PacketState& s, double d, int axis, int step, double h) {
  s.position += s.direction * d;
  s.position[axis] = (s.voxel[axis] + (step > 0 ? 1 : 0)) * h;
}

void orthonormal_basis(const Vec3& n, Vec3& e1, Vec3& e2) {
  const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  e1 = normalized(cross(n, helper));
  e2 = cross(n, e1);
}

}  // namespace

double PhotonRecord::total_length() const {
  double sum = 0.0;
  for (const auto& s : pathlengths) sum += s.length;
  return sum;
}

std::vector<PathSegment> PathAccumulator::collapse() const {
  std::vector<PathSegment> out = segments_;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.voxel < b.voxel; });
  std::size_t w = 0;
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (w > 0 && out[w - 1].voxel == out[r].voxel) {
      out[w - 1].length += out[r].length;
    } else {
      out[w++] = out[r];
    }
  }
  out.resize(w);
  return out;
}

double henyey_greenstein_cosine(double g, double u) {
  g = std::clamp(g, -1.0 + 1e-12, 1.0 - 1e-12);
  u = std::clamp(u, 0.0, 1.0);
  if (std::abs(g) < 1e-9) return 2.0 * u - 1.0;
  const double s = (1.0 - g * g) / (1.0 + g * (2.0 * u - 1.0));
  return std::clamp((1.0 + g * g - s * s) / (2.0 * g), -1.0, 1.0);
}

Vec3 sample_scatter_direction(double g, const Vec3& incoming, double u1, double u2) {
  const double cos_t = henyey_greenstein_cosine(g, u1);
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double psi = 2.0 * std::numbers::pi * u2;
  const double cos_p = std::cos(psi), sin_p = std::sin(psi);
  const Vec3& d = incoming;
  Vec3 out;
  if (std::abs(d.z) > 1.0 - 1e-12) {
    out = {sin_t * cos_p, sin_t * sin_p, cos_t * (d.z > 0 ? 1.0 : -1.0)};
  } else {
    const double t = std::sqrt(1.0 - d.z * d.z);
    out = {sin_t * (d.x * d.z * cos_p - d.y * sin_p) / t + d.x * cos_t,
           sin_t * (d.y * d.z * cos_p + d.x * sin_p) / t + d.y * cos_t, -sin_t * cos_p * t + d.z * cos_t};
  }
  return normalized(out);
}

ScatteringMedium::ScatteringMedium(const VoxelPhantom& phantom)
    : dims_(phantom.dims), voxel_size_(phantom.voxel_size), labels_(phantom.labels) {
  for (const auto& p : phantom.tissue_table) {
    mu_s_.push_back(p.mu_s);
    g_.push_back(p.g);
    nu_.push_back(p.nu);
  }
}

AdvanceResult advance_packet(const ScatteringMedium& medium, PacketState& state, double budget,
                             PathAccumulator& path) {
  const double h = medium.voxel_size();
  AdvanceResult result;
  for (;;) {
    const auto label = medium.label(state.voxel);
    const double mus = medium.mu_s(label);
    const double nu = medium.nu(label);
    const auto linear = static_cast<std::uint32_t>(medium.dims().linear(state.voxel));
    int axis = 0;
    const double to_face = distance_to_face(state.position, state.direction, state.voxel, h, axis);
    const double free_path = mus > 0.0 ? budget / mus : kInfinity;
    if (free_path <= to_face) {
      state.position += state.direction * free_path;
      path.add(linear, free_path);
      result.path_length += free_path;
      result.optical_time += nu * free_path;
      result.event = AdvanceEvent::kScatter;
      result.remaining_budget = 0.0;
      return result;
    }
    const int step = state.direction[axis] > 0.0 ? 1 : -1;
    move_to_face(state, to_face, axis, step, h);
    path.add(linear, to_face);
    result.path_length += to_face;
    result.optical_time += nu * to_face;
    // Entering a voxel with different mu_s rescales the physical distance left
    // because only the dimensionless budget is carried across.
    budget = std::max(0.0, budget - mus * to_face);
    VoxelIndex next = state.voxel;
    next[axis] += step;
    if (medium.label(next) == 0) {
      result.event = AdvanceEvent::kBoundary;
      result.remaining_budget = budget;
      result.axis = axis;
      result.step = step;
      return result;
    }
    state.voxel = next;
  }
}

double fresnel_reflectance(double nu_inside, double nu_outside, double cos_incidence) {
  const double ci = std::clamp(std::abs(cos_incidence), 0.0, 1.0);
  if (nu_inside == nu_outside) return 0.0;
  const double sin_i = std::sqrt(std::max(0.0, 1.0 - ci * ci));
  const double sin_t = nu_inside / nu_outside * sin_i;
  if (sin_t >= 1.0) return 1.0;
  const double ct = std::sqrt(1.0 - sin_t * sin_t);
  const double rs = (nu_inside * ci - nu_outside * ct) / (nu_inside * ci + nu_outside * ct);
  const double rp = (nu_inside * ct - nu_outside * ci) / (nu_inside * ct + nu_outside * ci);
  return 0.5 * (rs * rs + rp * rp);
}

BoundaryOutcome boundary_interaction(double nu_inside, double nu_outside, const Vec3& direction,
                                     const Vec3& surface_normal, double u) {
  const double cos_i = dot(direction, surface_normal);
  BoundaryOutcome out;
  out.reflectance = fresnel_reflectance(nu_inside, nu_outside, cos_i);
  if (u < out.reflectance) {
    out.exits = false;
    out.direction = direction - surface_normal * (2.0 * cos_i);
    return out;
  }
  out.exits = true;
  const double eta = nu_inside / nu_outside;
  const double sin2_t = eta * eta * (1.0 - cos_i * cos_i);
  const double cos_t = std::sqrt(std::max(0.0, 1.0 - sin2_t));
  const Vec3 tangential = direction - surface_normal * cos_i;
  out.direction = normalized(tangential * eta + surface_normal * cos_t);
  return out;
}

double time_of_flight(const VoxelPhantom& phantom, const std::vector<PathSegment>& path) {
  double optical = 0.0;
  for (const auto& s : path) optical += phantom.tissue_table[phantom.labels[s.voxel]].nu * s.length;
  return optical / kSpeedOfLightMmPerSecond;
}

namespace {

struct LaunchGeometry {
  Vec3 origin;
  Vec3 normal, e1, e2;
  double sigma = 0.0;
  double truncation = 0.0;
};

// Walks from `state.position` along the direction through exterior voxels until
// the first labeled voxel. Returns false if none is met within `max_steps`.
bool enter_medium(const ScatteringMedium& medium, PacketState& state, int max_steps) {
  const double h = medium.voxel_size();
  state.voxel = {static_cast<int>(std::floor(state.position.x / h)), static_cast<int>(std::floor(state.position.y / h)),
                 static_cast<int>(std::floor(state.position.z / h))};
  for (int i = 0; i < max_steps; ++i) {
    if (medium.label(state.voxel) != 0) return true;
    int axis = 0;
    const double d = distance_to_face(state.position, state.direction, state.voxel, h, axis);
    const int step = state.direction[axis] > 0.0 ? 1 : -1;
    move_to_face(state, d, axis, step, h);
    state.voxel[axis] += step;
  }
  return false;
}

struct WorkerOutput {
  std::vector<PhotonRecord> records;
  std::uint64_t escaped = 0;
  std::uint64_t expired = 0;
};

void run_packet(const ScatteringMedium& medium, const VoxelPhantom& phantom, const OptodeConfig& optodes,
                const LaunchGeometry& launch, int source_index, std::uint64_t counter, const TransportOptions& options,
                PathAccumulator& path, WorkerOutput& out) {
  CounterRng rng(options.seed, counter, static_cast<std::uint32_t>(source_index));
  const double h = medium.voxel_size();
  const double max_optical = options.max_time_of_flight * kSpeedOfLightMmPerSecond;
  const int grid_span = medium.dims().nx + medium.dims().ny + medium.dims().nz;

  double ox, oy;
  do {
    ox = launch.sigma * rng.normal();
    oy = launch.sigma * rng.normal();
  } while (ox * ox + oy * oy > launch.truncation * launch.truncation);

  PacketState state;
  state.position = launch.origin + launch.e1 * ox + launch.e2 * oy;
  state.direction = launch.normal;
  if (!enter_medium(medium, state, 3 * grid_span)) {
    ++out.escaped;
    return;
  }

  path.clear();
  double optical = 0.0;
  double budget = -std::log(rng.uniform());
  for (;;) {
    const auto adv = advance_packet(medium, state, budget, path);
    optical += adv.optical_time;
    if (optical > max_optical) {
      ++out.expired;
      return;
    }
    if (adv.event == AdvanceEvent::kScatter) {
      state.direction = sample_scatter_direction(medium.g(medium.label(state.voxel)), state.direction, rng.uniform(),
                                                 rng.uniform());
      budget = -std::log(rng.uniform());
      continue;
    }
    Vec3 normal;
    normal[adv.axis] = adv.step;
    const auto inside = medium.label(state.voxel);
    const auto outcome = boundary_interaction(medium.nu(inside), medium.nu(0), state.direction, normal, rng.uniform());
    if (!outcome.exits) {
      state.direction[adv.axis] = -state.direction[adv.axis];
      budget = adv.remaining_budget;
      continue;
    }
    Vec3 centroid = phantom.center(state.voxel);
    centroid[adv.axis] += 0.5 * h * adv.step;
    int detector = -1;
    double best = kInfinity;
    for (std::size_t d = 0; d < optodes.detectors.size(); ++d) {
      const double dist = distance(centroid, optodes.detectors[d].position);
      if (dist <= optodes.detectors[d].capture_radius && dist < best) {
        best = dist;
        detector = static_cast<int>(d);
      }
    }
    if (detector < 0) {
      ++out.escaped;
      return;
    }
    PhotonRecord rec;
    rec.launch_counter = counter;
    rec.detector_index = detector;
    rec.pathlengths = path.collapse();
    rec.time_of_flight = time_of_flight(phantom, rec.pathlengths);
    out.records.push_back(std::move(rec));
    return;
  }
}

}  // namespace

PhotonRecordSet simulate_source(const VoxelPhantom& phantom, const OptodeConfig& optodes, int source_index,
                                const TransportOptions& options) {
  if (options.n_packets < 1) throw ConfigError("at least one photon packet is required");
  if (source_index < 0 || static_cast<std::size_t>(source_index) >= optodes.sources.size()) {
    throw ConfigError("source index " + std::to_string(source_index) + " out of range");
  }
  const ScatteringMedium medium(phantom);
  const auto& src = optodes.sources[source_index];
  const double h = phantom.voxel_size;

  LaunchGeometry launch;
  launch.normal = normalized(src.inward_normal);
  orthonormal_basis(launch.normal, launch.e1, launch.e2);
  launch.origin = src.position - launch.normal * (4.0 * h);
  launch.sigma = src.waist_radius / 2.0;
  launch.truncation = options.beam_truncation * src.waist_radius;

  {
    PacketState probe{launch.origin, launch.normal, {}};
    const auto start = phantom.voxel_at(launch.origin);
    if (phantom.label(start) != 0 || !enter_medium(medium, probe, 16)) {
      std::ostringstream msg;
      msg << "source " << source_index << ": inward normal (" << launch.normal.x << ", " << launch.normal.y << ", "
          << launch.normal.z << ") does not point into the phantom";
      throw LaunchError(msg.str());
    }
  }

  const int threads = std::max(1, options.threads);
  std::vector<WorkerOutput> outputs(static_cast<std::size_t>(threads));
  std::atomic<std::uint64_t> next_block{0};
  constexpr std::uint64_t kBlock = 256;
  auto worker = [&](int w) {
    PathAccumulator path;
    for (;;) {
      const std::uint64_t begin = next_block.fetch_add(kBlock);
      if (begin >= options.n_packets) break;
      const std::uint64_t end = std::min(options.n_packets, begin + kBlock);
      for (std::uint64_t c = begin; c < end; ++c) {
        run_packet(medium, phantom, optodes, launch, source_index, c, options, path, outputs[w]);
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }

  PhotonRecordSet set;
  set.source_index = source_index;
  set.launched_count = options.n_packets;
  for (auto& o : outputs) {
    set.escape_count += o.escaped;
    set.expired_count += o.expired;
    std::move(o.records.begin(), o.records.end(), std::back_inserter(set.records));
  }
  std::sort(set.records.begin(), set.records.end(),
            [](const auto& a, const auto& b) { return a.launch_counter < b.launch_counter; });
  return set;
}

bool check_accounting(const PhotonRecordSet& set) {
  return set.records.size() + set.escape_count + set.expired_count == set.launched_count;
}

}  // namespace dotmarg
