#include "dotmarg/runner.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dotmarg/errors.hpp"
#include "dotmarg/rng.hpp"
#include "dotmarg/slices.hpp"

namespace dotmarg {

namespace fs = std::filesystem;
using io::json;

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

Eigen::VectorXd gather(std::span<const double> full, std::span<const std::size_t> voxels) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(voxels.size()));
  for (std::size_t i = 0; i < voxels.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[voxels[i]];
  return out;
}

Eigen::MatrixXd columns_of(const Eigen::MatrixXd& m, std::span<const std::size_t> positions) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(positions.size()));
  for (std::size_t c = 0; c < positions.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(positions[c]));
  }
  return out;
}

std::vector<double> scatter(const Eigen::VectorXd& values, std::span<const std::size_t> voxels, std::size_t count) {
  return io::unmask(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), voxels, count);
}

std::vector<double> plus(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

std::vector<double> with_tissue_absorption(const VoxelPhantom& phantom, const std::map<Tissue, double>& overrides) {
  auto mu = phantom.absorption_map();
  for (std::size_t v = 0; v < mu.size(); ++v) {
    const auto it = overrides.find(static_cast<Tissue>(phantom.labels[v]));
    if (it != overrides.end()) mu[v] = it->second;
  }
  return mu;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void append(std::vector<std::string>& dst, const std::vector<std::string>& src, const std::string& prefix) {
  for (const auto& w : src) dst.push_back(prefix + w);
}

}  // namespace

VoxelPhantom build_phantom(const ScenarioConfig& config) { return build_layered_phantom(config.phantom); }

OptodeConfig build_optodes(const ScenarioConfig& config, const VoxelPhantom& phantom) {
  const auto& spec = config.optodes;
  const Vec3 c = config.phantom.resolved_center();
  auto sources = spec.sources;
  auto detectors = spec.detectors;
  const auto rs = ring_sites(c, config.phantom.outer_radius, spec.source_rings);
  const auto rd = ring_sites(c, config.phantom.outer_radius, spec.detector_rings);
  sources.insert(sources.end(), rs.begin(), rs.end());
  detectors.insert(detectors.end(), rd.begin(), rd.end());
  return place_optodes(phantom, sources, detectors, spec.frequency, spec.sds_cutoff, spec.placement);
}

PerturbationField build_truth(const ScenarioConfig& config, const VoxelPhantom& phantom) {
  PerturbationField field;
  for (const auto& s : config.truth) field += insert_perturbation(phantom, s.center, s.radius, s.contrast, s.tissues);
  return field;
}

std::vector<PhotonRecordSet> simulate_all(const ScenarioConfig& config, const VoxelPhantom& phantom,
                                          const OptodeConfig& optodes) {
  TransportOptions opts = config.transport;
  opts.seed = derive_seed(config.seed, kTransportSeed);
  std::vector<PhotonRecordSet> out;
  for (int s = 0; s < static_cast<int>(optodes.sources.size()); ++s) {
    out.push_back(simulate_source(phantom, optodes, s, opts));
  }
  return out;
}

Workspace prepare_workspace(const ScenarioConfig& config, std::optional<std::vector<PhotonRecordSet>> records) {
  config.validate();
  Stopwatch clock;
  Workspace ws;
  ws.config = config;
  ws.phantom = build_phantom(config);
  ws.optodes = build_optodes(config, ws.phantom);
  ws.coupling = coupling_jacobian(ws.optodes.pairs, ws.optodes.sources.size(), ws.optodes.detectors.size());
  ws.timing["setup"] = clock.lap();
  if (records) {
    if (records->size() != ws.optodes.sources.size()) throw ConfigError("record sets do not match the source count");
    ws.records = std::move(*records);
  } else {
    ws.records = simulate_all(config, ws.phantom, ws.optodes);
  }
  ws.timing["transport"] = clock.lap();
  return with_config(ws, config);
}

Workspace with_config(const Workspace& base, const ScenarioConfig& config) {
  config.validate();
  Stopwatch clock;
  Workspace ws;
  ws.config = config;
  ws.phantom = base.phantom;
  ws.optodes = base.optodes;
  ws.records = base.records;
  ws.coupling = base.coupling;
  ws.timing = base.timing;

  std::vector<std::size_t> labeled;
  std::vector<std::uint8_t> brain;
  for (std::size_t v = 0; v < ws.phantom.labels.size(); ++v) {
    if (ws.phantom.labels[v] == 0) continue;
    labeled.push_back(v);
    brain.push_back(is_brain(ws.phantom.labels[v]) ? 1 : 0);
  }
  const auto mu0 = ws.phantom.absorption_map();
  const Eigen::MatrixXd all = absorption_jacobian(ws.records, ws.optodes, mu0, labeled);
  const auto in_fov = compute_fov(all, brain, config.fov_threshold);
  std::vector<std::uint8_t> fov(ws.phantom.labels.size(), 0);
  std::vector<std::size_t> fov_positions;
  for (std::size_t c = 0; c < labeled.size(); ++c) {
    if (in_fov[c]) {
      fov[labeled[c]] = 1;
      fov_positions.push_back(c);
    }
  }
  ws.masks = split_roi_roni(ws.phantom, fov, config.roi);
  ws.j_total = columns_of(all, fov_positions);
  ws.timing["jacobian"] = clock.lap();

  std::vector<Vec3> coords;
  coords.reserve(ws.masks.fov_voxels.size());
  for (auto v : ws.masks.fov_voxels) coords.push_back(ws.phantom.center(v));
  ws.prior = prior_covariance(coords, config.prior_sigma, config.prior_correlation);
  ws.timing["prior"] = clock.lap();
  return ws;
}

RunReport run_case(const Workspace& ws) {
  const auto& cfg = ws.config;
  const auto& masks = ws.masks;
  Stopwatch clock;
  RunReport report;
  report.case_id = cfg.case_id;
  report.seed = cfg.seed;
  report.error_mask = "roi";
  report.config = cfg.source;
  report.timing = ws.timing;
  report.m = ws.optodes.m();
  report.l = ws.optodes.l();
  report.n = masks.n();
  report.n_tilde = masks.n_tilde();
  report.n_total = masks.n_total();
  report.data_length = static_cast<Eigen::Index>(2 * report.m);

  const std::size_t voxels = ws.phantom.labels.size();
  const auto truth = build_truth(cfg, ws.phantom);
  append(report.warnings, truth.warnings, "truth: ");
  const auto x_full = truth.dense(voxels);
  report.truth = x_full;

  // Optical baseline of the data: the assumed table except in case 3.
  const auto mu_assumed = ws.phantom.absorption_map();
  const auto mu_data = cfg.case_id == 3 ? with_tissue_absorption(ws.phantom, cfg.true_absorption) : mu_assumed;
  const auto z0 = replay_frame(ws.records, ws.optodes, mu_data);
  const auto z1 = replay_frame(ws.records, ws.optodes, plus(mu_data, x_full));
  const Eigen::VectorXd y_optical = difference_data(z1, z0);
  const auto noise = noise_model(y_optical, cfg.noise_fraction);
  const Eigen::VectorXd e = noise_draw(noise, derive_seed(cfg.seed, kNoiseSeed));
  report.diagnostics["noise_std_log_amplitude"] = noise.gamma_log_amplitude;
  report.diagnostics["noise_std_phase"] = noise.gamma_phase;

  Eigen::VectorXd y = y_optical + e;
  const Eigen::VectorXd y_ideal = y;
  if (cfg.case_id == 1 || cfg.case_id == 4) {
    const auto state = CouplingState::random(ws.optodes.sources.size(), ws.optodes.detectors.size(), cfg.delta_a,
                                             cfg.delta_phi, derive_seed(cfg.seed, kCouplingSeed));
    const auto coupled = apply_coupling(z1, state, &report.warnings);
    y = difference_data(coupled, z0) + e;
  }
  report.timing["data"] = clock.lap();

  const Eigen::MatrixXd j = columns_of(ws.j_total, masks.roi_in_fov);
  const Eigen::MatrixXd j_tilde = columns_of(ws.j_total, masks.roni_in_fov);
  const auto prior_roi = ws.prior.block(masks.roi_in_fov);
  const Eigen::Index k = cfg.nullspace_dimension.value_or(default_nullspace_dimension(report.m));
  ProjectionOperator p;
  switch (cfg.case_id) {
    case 1:
      p = combined_projection(&ws.coupling, {}, {}, cfg.rank_tolerance);
      report.spectrum = to_std(p.singular_values);
      break;
    case 2:
    case 4: {
      if (j_tilde.cols() == 0) throw ConfigError("the ROI covers the whole field of view; nothing to marginalize");
      const auto prior_roni = ws.prior.block(masks.roni_in_fov);
      const auto sub = roni_subspace(j_tilde, prior_roni.covariance, std::min(k, report.data_length));
      append(report.warnings, sub.warnings, "roni subspace: ");
      report.spectrum = to_std(sub.eigenvalues);
      report.nullspace_dimension = sub.basis.cols();
      p = cfg.case_id == 2 ? combined_projection(nullptr, sub.basis, {}, cfg.rank_tolerance)
                           : combined_projection(&ws.coupling, sub.basis, {}, cfg.rank_tolerance);
      break;
    }
    case 3: {
      std::vector<Eigen::MatrixXd> diffs;
      for (const auto& probe : cfg.probes) {
        diffs.push_back(tissue_difference_jacobian(ws.records, ws.phantom, ws.optodes, mu_assumed, probe.tissue,
                                                   probe.delta, masks.roi_voxels));
      }
      const auto sub = baseline_subspace(diffs, prior_roi.covariance, std::min(k, report.data_length));
      append(report.warnings, sub.warnings, "baseline subspace: ");
      report.spectrum = to_std(sub.eigenvalues);
      report.nullspace_dimension = sub.basis.cols();
      p = combined_projection(nullptr, {}, sub.basis, cfg.rank_tolerance);
      break;
    }
    default:
      throw ConfigError("case must be 1, 2, 3 or 4");
  }
  append(report.warnings, p.warnings, "projection: ");
  report.provenance = provenance_name(p.provenance);
  report.projection_rank = p.rank;
  report.projection = p.p;
  report.timing["projection"] = clock.lap();

  const auto& gamma_e = noise.noise_variance;
  const auto naive = posterior(j, prior_roi.covariance, gamma_e, y);
  const auto projected = projected_posterior(p, j, prior_roi.covariance, gamma_e, y);
  Eigen::VectorXd reference;
  switch (cfg.case_id) {
    case 1:
      reference = posterior(j, prior_roi.covariance, gamma_e, y_ideal).mean;
      break;
    case 2:
    case 4: {
      const auto full = posterior(ws.j_total, ws.prior.covariance, gamma_e, y_ideal);
      reference.resize(static_cast<Eigen::Index>(masks.roi_in_fov.size()));
      for (std::size_t i = 0; i < masks.roi_in_fov.size(); ++i) {
        reference[static_cast<Eigen::Index>(i)] = full.mean[static_cast<Eigen::Index>(masks.roi_in_fov[i])];
      }
      break;
    }
    case 3: {
      const Eigen::MatrixXd j_true = absorption_jacobian(ws.records, ws.optodes, mu_data, masks.roi_voxels);
      reference = posterior(j_true, prior_roi.covariance, gamma_e, y).mean;
      break;
    }
  }
  report.timing["reconstruction"] = clock.lap();
  report.diagnostics["naive_reciprocal_condition"] = naive.reciprocal_condition;
  report.diagnostics["projected_reciprocal_condition"] = projected.reciprocal_condition;
  report.diagnostics["naive_residual"] = naive.residual_norm;
  report.diagnostics["projected_residual"] = projected.residual_norm;

  const Eigen::VectorXd x_roi = gather(x_full, masks.roi_voxels);
  report.naive_error = l2_error(naive.mean, x_roi);
  report.projected_error = l2_error(projected.mean, x_roi);
  report.reference_error = l2_error(reference, x_roi);
  report.naive = scatter(naive.mean, masks.roi_voxels, voxels);
  report.projected = scatter(projected.mean, masks.roi_voxels, voxels);
  report.reference = scatter(reference, masks.roi_voxels, voxels);
  return report;
}

namespace {

RunReport run_checked(const ScenarioConfig& config, int case_id) {
  if (config.case_id != case_id) {
    throw ConfigError("config selects case " + std::to_string(config.case_id) + ", not case " + std::to_string(case_id));
  }
  return run_case(prepare_workspace(config));
}

}  // namespace

RunReport run_case1(const ScenarioConfig& config) { return run_checked(config, 1); }
RunReport run_case2(const ScenarioConfig& config) { return run_checked(config, 2); }
RunReport run_case3(const ScenarioConfig& config) { return run_checked(config, 3); }
RunReport run_case4(const ScenarioConfig& config) { return run_checked(config, 4); }

json RunReport::to_json() const {
  json j;
  j["case"] = case_id;
  j["seed"] = seed;
  j["errors"] = {{"mask", error_mask}, {"naive", naive_error}, {"projected", projected_error},
                 {"reference", reference_error}};
  j["projection"] = {{"provenance", provenance},
                     {"k", nullspace_dimension},
                     {"rank", projection_rank},
                     {"data_length", data_length},
                     {"spectrum", spectrum}};
  j["sizes"] = {{"m", m}, {"l", l}, {"n", n}, {"n_tilde", n_tilde}, {"n_total", n_total}};
  j["timing_s"] = timing;
  j["diagnostics"] = diagnostics;
  j["warnings"] = warnings;
  j["config"] = config;
  json files = json::array();
  for (const auto& e : manifest) {
    std::ostringstream crc;
    crc << std::hex << std::setw(8) << std::setfill('0') << e.crc32;
    files.push_back({{"path", e.path}, {"bytes", e.bytes}, {"crc32", crc.str()}});
  }
  j["manifest"] = files;
  return j;
}

namespace {

void record(std::vector<ManifestEntry>& manifest, const fs::path& directory, const fs::path& file) {
  manifest.push_back({fs::relative(file, directory).generic_string(), fs::file_size(file), io::file_crc32(file)});
}

std::vector<SlicePlane> truth_planes(const ScenarioConfig& cfg, const VoxelPhantom& phantom) {
  auto planes = default_planes(phantom.dims);
  if (!cfg.truth.empty()) {
    const auto v = phantom.voxel_at(cfg.truth.front().center);
    if (phantom.dims.contains(v)) planes = {{0, v[0]}, {1, v[1]}, {2, v[2]}};
  }
  return planes;
}

}  // namespace

void write_run_outputs(RunReport& report, const Workspace& ws, const fs::path& directory) {
  fs::create_directories(directory);
  report.manifest.clear();
  const json meta = {{"case", report.case_id}, {"seed", report.seed}, {"unit", "mm^-1"}};
  const std::pair<const char*, const std::vector<double>*> volumes[] = {
      {"truth", &report.truth}, {"naive", &report.naive}, {"projected", &report.projected},
      {"reference", &report.reference}};
  const auto planes = truth_planes(ws.config, ws.phantom);
  for (const auto& [name, vol] : volumes) {
    const auto raw = directory / "volumes" / (std::string(name) + ".raw");
    json m = meta;
    m["volume"] = name;
    io::write_volume(raw, ws.phantom, *vol, m);
    record(report.manifest, directory, raw);
    record(report.manifest, directory, io::sidecar_path(raw));
    for (const auto& f : export_slices(*vol, ws.phantom, planes, directory / "slices", name)) {
      record(report.manifest, directory, f);
    }
  }
  const std::pair<const char*, const std::vector<std::uint8_t>*> masks[] = {
      {"fov", &ws.masks.fov}, {"roi", &ws.masks.roi}, {"roni", &ws.masks.roni}};
  for (const auto& [name, mask] : masks) {
    const auto raw = directory / "volumes" / (std::string(name) + "_mask.raw");
    const auto& d = ws.phantom.dims;
    io::write_raw_u8(raw, *mask,
                     {static_cast<std::size_t>(d.nz), static_cast<std::size_t>(d.ny), static_cast<std::size_t>(d.nx)},
                     {{"mask", name}, {"voxel_size_mm", ws.phantom.voxel_size}, {"axis_order", "x-fastest"}});
    record(report.manifest, directory, raw);
    record(report.manifest, directory, io::sidecar_path(raw));
  }
  const auto proj = directory / "projection.raw";
  io::write_matrix(proj, report.projection,
                   {{"provenance", report.provenance},
                    {"k", report.nullspace_dimension},
                    {"rank", report.projection_rank},
                    {"rank_tolerance", ws.config.rank_tolerance},
                    {"spectrum", report.spectrum}});
  record(report.manifest, directory, proj);
  record(report.manifest, directory, io::sidecar_path(proj));

  const auto csv = directory / "errors.csv";
  {
    std::ofstream out(csv);
    out << "case,seed,mask,estimator,l2_error\n" << std::setprecision(10);
    out << report.case_id << ',' << report.seed << ',' << report.error_mask << ",naive," << report.naive_error << '\n';
    out << report.case_id << ',' << report.seed << ',' << report.error_mask << ",projected," << report.projected_error
        << '\n';
    out << report.case_id << ',' << report.seed << ',' << report.error_mask << ",reference," << report.reference_error
        << '\n';
  }
  record(report.manifest, directory, csv);
  io::write_json(directory / "report.json", report.to_json());
}

void write_phantom_outputs(const Workspace& ws, const fs::path& directory) {
  const auto& d = ws.phantom.dims;
  const std::vector<std::size_t> shape{static_cast<std::size_t>(d.nz), static_cast<std::size_t>(d.ny),
                                       static_cast<std::size_t>(d.nx)};
  json tissues = json::object();
  for (int t = 1; t < kTissueCount; ++t) {
    const auto& p = ws.phantom.tissue_table[t];
    tissues[tissue_name(static_cast<Tissue>(t))] = {
        {"label", t}, {"mu_a", p.mu_a}, {"mu_s", p.mu_s}, {"g", p.g}, {"nu", p.nu}, {"voxels", ws.phantom.count(t)}};
  }
  io::write_raw_u8(directory / "labels.raw", ws.phantom.labels, shape,
                   {{"voxel_size_mm", ws.phantom.voxel_size}, {"axis_order", "x-fastest"}, {"tissues", tissues}});
  io::write_volume(directory / "mu_a.raw", ws.phantom, ws.phantom.absorption_map(), {{"unit", "mm^-1"}});
  const auto truth = build_truth(ws.config, ws.phantom).dense(ws.phantom.labels.size());
  io::write_volume(directory / "truth.raw", ws.phantom, truth, {{"unit", "mm^-1"}});

  json optodes;
  optodes["frequency_hz"] = ws.optodes.frequency;
  optodes["sds_cutoff_mm"] = ws.optodes.sds_cutoff;
  for (const auto& s : ws.optodes.sources) {
    optodes["sources"].push_back({{"position", {s.position.x, s.position.y, s.position.z}},
                                  {"inward_normal", {s.inward_normal.x, s.inward_normal.y, s.inward_normal.z}},
                                  {"waist_radius_mm", s.waist_radius},
                                  {"voxel", s.voxel}});
  }
  for (const auto& det : ws.optodes.detectors) {
    optodes["detectors"].push_back({{"position", {det.position.x, det.position.y, det.position.z}},
                                    {"capture_radius_mm", det.capture_radius},
                                    {"voxel", det.voxel}});
  }
  for (const auto& p : ws.optodes.pairs) {
    optodes["pairs"].push_back({{"source", p.source}, {"detector", p.detector}, {"sds_mm", ws.optodes.separation(p)}});
  }
  optodes["m"] = ws.optodes.m();
  optodes["l"] = ws.optodes.l();
  io::write_json(directory / "optodes.json", optodes);

  std::vector<double> labels(ws.phantom.labels.begin(), ws.phantom.labels.end());
  export_slices(labels, ws.phantom, default_planes(d), directory / "slices", "labels");
}

void write_record_outputs(const Workspace& ws, const fs::path& directory) {
  json summary = json::array();
  for (const auto& set : ws.records) {
    const auto path = directory / "records" / ("source_" + std::to_string(set.source_index) + ".dmpr");
    io::write_records(path, set);
    std::vector<std::size_t> per_detector(ws.optodes.detectors.size(), 0);
    for (const auto& r : set.records) ++per_detector.at(r.detector_index);
    summary.push_back({{"source", set.source_index},
                       {"file", fs::relative(path, directory).generic_string()},
                       {"launched", set.launched_count},
                       {"detected", set.records.size()},
                       {"escaped", set.escape_count},
                       {"expired", set.expired_count},
                       {"detected_per_detector", per_detector}});
  }
  io::write_json(directory / "records" / "summary.json",
                 {{"seed", ws.config.seed},
                  {"transport_seed", derive_seed(ws.config.seed, kTransportSeed)},
                  {"packets_per_source", ws.config.transport.n_packets},
                  {"sources", summary}});
}

std::optional<std::vector<PhotonRecordSet>> load_records(const fs::path& directory, std::size_t sources) {
  std::vector<PhotonRecordSet> out;
  for (std::size_t s = 0; s < sources; ++s) {
    const auto path = directory / "records" / ("source_" + std::to_string(s) + ".dmpr");
    if (!fs::exists(path)) return std::nullopt;
    out.push_back(io::read_records(path));
    if (out.back().source_index != static_cast<int>(s)) throw ConfigError("'" + path.string() + "' holds another source");
  }
  return out;
}

void write_jacobian_outputs(const Workspace& ws, const fs::path& directory) {
  json rows = json::array();
  for (std::size_t k = 0; k < ws.optodes.m(); ++k) {
    rows.push_back({{"type", "log_amplitude"}, {"source", ws.optodes.pairs[k].source}, {"detector", ws.optodes.pairs[k].detector}});
  }
  for (std::size_t k = 0; k < ws.optodes.m(); ++k) {
    rows.push_back({{"type", "phase"}, {"source", ws.optodes.pairs[k].source}, {"detector", ws.optodes.pairs[k].detector}});
  }
  io::write_matrix(directory / "jacobian.raw", ws.j_total,
                   {{"rows", rows},
                    {"columns", ws.masks.fov_voxels},
                    {"frequency_hz", ws.optodes.frequency},
                    {"seed", ws.config.seed},
                    {"baseline_mu_a", [&] {
                       json t = json::object();
                       for (int i = 1; i < kTissueCount; ++i) {
                         t[tissue_name(static_cast<Tissue>(i))] = ws.phantom.tissue_table[i].mu_a;
                       }
                       return t;
                     }()}});
  io::write_matrix(directory / "coupling_jacobian.raw", ws.coupling.dense(),
                   {{"sources", ws.coupling.sources}, {"detectors", ws.coupling.detectors},
                    {"column_order", "lnA sources, lnA detectors, phase sources, phase detectors"}});
  const auto& d = ws.phantom.dims;
  io::write_raw_u8(directory / "fov_mask.raw", ws.masks.fov,
                   {static_cast<std::size_t>(d.nz), static_cast<std::size_t>(d.ny), static_cast<std::size_t>(d.nx)},
                   {{"mask", "fov"}, {"threshold", ws.config.fov_threshold}, {"voxels", ws.masks.n_total()}});
}

std::vector<std::string> verify_manifest(const fs::path& directory) {
  std::vector<std::string> problems;
  const auto report = io::read_json(directory / "report.json");
  if (!report.contains("manifest")) return {"report.json has no manifest"};
  for (const auto& entry : report.at("manifest")) {
    const auto path = directory / entry.at("path").get<std::string>();
    if (!fs::exists(path)) {
      problems.push_back("missing: " + entry.at("path").get<std::string>());
      continue;
    }
    std::ostringstream crc;
    crc << std::hex << std::setw(8) << std::setfill('0') << io::file_crc32(path);
    if (crc.str() != entry.at("crc32").get<std::string>()) {
      problems.push_back("checksum mismatch: " + entry.at("path").get<std::string>());
    }
  }
  return problems;
}

}  // namespace dotmarg
