#include "dotmarg/scenario.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "dotmarg/errors.hpp"

namespace dotmarg {

using io::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in '" + where + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

Vec3 vec3(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 3) throw ConfigError("'" + what + "' must be a 3-element array");
  try {
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  } catch (const json::exception&) {
    throw ConfigError("'" + what + "' must hold numbers");
  }
}

std::vector<Vec3> vec3_list(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError("'" + what + "' must be an array of points");
  std::vector<Vec3> out;
  for (const auto& p : v) out.push_back(vec3(p, what));
  return out;
}

std::set<Tissue> tissue_set(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError("'" + what + "' must be an array of tissue names");
  std::set<Tissue> out;
  for (const auto& name : v) {
    if (!name.is_string()) throw ConfigError("'" + what + "' must be an array of tissue names");
    out.insert(tissue_from_name(name.get<std::string>()));
  }
  return out;
}

std::vector<RingSpec> rings(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError("'" + what + "' must be an array");
  std::vector<RingSpec> out;
  for (const auto& r : v) {
    check_keys(r, what, {"polar_deg", "count", "azimuth_offset_deg"});
    RingSpec ring;
    ring.polar_deg = get_or(r, "polar_deg", 0.0);
    ring.count = get_or(r, "count", 1);
    ring.azimuth_offset_deg = get_or(r, "azimuth_offset_deg", 0.0);
    if (ring.count < 1) throw ConfigError("ring count must be positive");
    out.push_back(ring);
  }
  return out;
}

void parse_phantom(const json& p, LayeredPhantomConfig& cfg) {
  check_keys(p, "phantom",
             {"shape", "dims", "voxel_size", "center", "outer_radius", "layers", "csf2_pockets", "tissues"});
  const auto shape = get_or<std::string>(p, "shape", "hemisphere");
  if (shape == "hemisphere") {
    cfg.shape = PhantomShape::kHemisphere;
  } else if (shape == "slab") {
    cfg.shape = PhantomShape::kSlab;
  } else {
    throw ConfigError("phantom shape must be 'hemisphere' or 'slab'");
  }
  if (p.contains("dims")) {
    const auto d = p.at("dims");
    if (!d.is_array() || d.size() != 3) throw ConfigError("'phantom.dims' must be a 3-element array");
    cfg.dims = {d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
  }
  cfg.voxel_size = get_or(p, "voxel_size", cfg.voxel_size);
  if (p.contains("center")) cfg.center = vec3(p.at("center"), "phantom.center");
  cfg.outer_radius = get_or(p, "outer_radius", cfg.outer_radius);
  if (p.contains("layers")) {
    const auto& l = p.at("layers");
    check_keys(l, "phantom.layers", {"scalp_skull", "csf1", "gray_matter"});
    cfg.scalp_skull = get_or(l, "scalp_skull", cfg.scalp_skull);
    cfg.csf1 = get_or(l, "csf1", cfg.csf1);
    cfg.gray_matter = get_or(l, "gray_matter", cfg.gray_matter);
  }
  if (p.contains("csf2_pockets")) {
    for (const auto& pk : p.at("csf2_pockets")) {
      check_keys(pk, "phantom.csf2_pockets", {"center", "radius"});
      cfg.csf2_pockets.push_back({vec3(pk.at("center"), "csf2 pocket center"), get_or(pk, "radius", 1.0)});
    }
  }
  if (p.contains("tissues")) {
    const auto& t = p.at("tissues");
    if (!t.is_object()) throw ConfigError("'phantom.tissues' must be an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      const auto tissue = tissue_from_name(it.key());
      if (tissue == Tissue::kExterior) throw ConfigError("the exterior has no optical properties");
      check_keys(it.value(), "phantom.tissues." + it.key(), {"mu_a", "mu_s", "g", "nu"});
      auto& props = cfg.tissue_table[label_of(tissue)];
      props.mu_a = get_or(it.value(), "mu_a", props.mu_a);
      props.mu_s = get_or(it.value(), "mu_s", props.mu_s);
      props.g = get_or(it.value(), "g", props.g);
      props.nu = get_or(it.value(), "nu", props.nu);
    }
  }
}

void parse_optodes(const json& o, OptodeSpec& spec) {
  check_keys(o, "optodes",
             {"sources", "detectors", "source_rings", "detector_rings", "frequency_hz", "sds_cutoff_mm",
              "waist_radius_mm", "capture_radius_mm", "max_snap_mm"});
  if (o.contains("sources")) spec.sources = vec3_list(o.at("sources"), "optodes.sources");
  if (o.contains("detectors")) spec.detectors = vec3_list(o.at("detectors"), "optodes.detectors");
  if (o.contains("source_rings")) {
    spec.source_rings = rings(o.at("source_rings"), "optodes.source_rings");
    if (!o.contains("sources")) spec.sources.clear();
  }
  if (o.contains("detector_rings")) {
    spec.detector_rings = rings(o.at("detector_rings"), "optodes.detector_rings");
    if (!o.contains("detectors")) spec.detectors.clear();
  }
  if (o.contains("sources") && !o.contains("source_rings")) spec.source_rings.clear();
  if (o.contains("detectors") && !o.contains("detector_rings")) spec.detector_rings.clear();
  spec.frequency = get_or(o, "frequency_hz", spec.frequency);
  spec.sds_cutoff = get_or(o, "sds_cutoff_mm", spec.sds_cutoff);
  spec.placement.waist_radius = get_or(o, "waist_radius_mm", spec.placement.waist_radius);
  spec.placement.capture_radius = get_or(o, "capture_radius_mm", spec.placement.capture_radius);
  spec.placement.max_snap_distance = get_or(o, "max_snap_mm", spec.placement.max_snap_distance);
}

RoiSpec parse_roi(const json& r) {
  check_keys(r, "roi", {"kind", "tissues", "point", "normal"});
  const auto kind = get_or<std::string>(r, "kind", "whole");
  if (kind == "whole") return RoiSpec::whole();
  if (kind == "tissues") return RoiSpec::only(tissue_set(r.at("tissues"), "roi.tissues"));
  if (kind == "exclude_tissues") return RoiSpec::excluding(tissue_set(r.at("tissues"), "roi.tissues"));
  if (kind == "half_space") {
    if (!r.contains("point") || !r.contains("normal")) throw ConfigError("half-space ROI needs 'point' and 'normal'");
    const Vec3 n = vec3(r.at("normal"), "roi.normal");
    if (!(norm(n) > 0.0)) throw ConfigError("half-space ROI normal must be nonzero");
    return RoiSpec::half_space(vec3(r.at("point"), "roi.point"), normalized(n));
  }
  throw ConfigError("unknown ROI kind '" + kind + "'");
}

}  // namespace

std::vector<Vec3> ring_sites(const Vec3& dome_center, double radius, std::span<const RingSpec> ring_list) {
  std::vector<Vec3> sites;
  for (const auto& ring : ring_list) {
    const double polar = ring.polar_deg * std::numbers::pi / 180.0;
    for (int i = 0; i < ring.count; ++i) {
      const double az = (ring.azimuth_offset_deg + 360.0 * i / ring.count) * std::numbers::pi / 180.0;
      sites.push_back(dome_center + Vec3{std::sin(polar) * std::cos(az), std::sin(polar) * std::sin(az),
                                         std::cos(polar)} * radius);
    }
  }
  return sites;
}

ScenarioConfig default_scenario(int case_id) {
  ScenarioConfig cfg;
  cfg.case_id = case_id;
  cfg.phantom.dims = {32, 32, 32};
  cfg.phantom.outer_radius = 15.0;
  cfg.optodes.sds_cutoff = 25.0;
  cfg.optodes.source_rings = {{0.0, 1, 0.0}, {45.0, 4, 0.0}};
  cfg.optodes.detector_rings = {{25.0, 4, 45.0}, {60.0, 4, 45.0}};
  cfg.transport.n_packets = 100000;
  const Vec3 c = cfg.phantom.resolved_center();
  cfg.truth = {{c + Vec3{3.0, 2.0, 7.5}, 4.0, 0.008, std::set<Tissue>{Tissue::kGrayMatter, Tissue::kWhiteMatter}}};
  if (case_id == 2 || case_id == 4) {
    cfg.roi = RoiSpec::half_space(c, {-1.0, 0.0, 0.0});
    cfg.truth.push_back(
        {c + Vec3{-5.0, -2.0, 7.0}, 4.0, 0.008, std::set<Tissue>{Tissue::kGrayMatter, Tissue::kWhiteMatter}});
  }
  if (case_id == 3) {
    cfg.true_absorption = {{Tissue::kGrayMatter, 0.014}, {Tissue::kWhiteMatter, 0.0032}};
    cfg.probes = {{Tissue::kGrayMatter, -0.017}, {Tissue::kWhiteMatter, -0.013}};
  }
  return cfg;
}

ScenarioConfig parse_scenario(const json& doc) {
  check_keys(doc, "scenario",
             {"case", "seed", "output_dir", "phantom", "optodes", "transport", "truth", "coupling", "roi",
              "projection", "baseline", "prior", "noise", "fov_threshold"});
  const int case_id = get_or(doc, "case", 1);
  if (case_id < 1 || case_id > 4) throw ConfigError("case must be 1, 2, 3 or 4");
  ScenarioConfig cfg = default_scenario(case_id);
  cfg.source = doc;
  cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
  cfg.output_dir = get_or<std::string>(doc, "output_dir", cfg.output_dir.string());

  if (doc.contains("phantom")) {
    // Defaults placed relative to the hemisphere center follow a resized phantom.
    const Vec3 old_center = cfg.phantom.resolved_center();
    parse_phantom(doc.at("phantom"), cfg.phantom);
    const Vec3 shift = cfg.phantom.resolved_center() - old_center;
    for (auto& sphere : cfg.truth) sphere.center = sphere.center + shift;
    if (cfg.roi.kind == RoiSpec::Kind::kHalfSpace) cfg.roi.point = cfg.roi.point + shift;
  }
  if (doc.contains("optodes")) parse_optodes(doc.at("optodes"), cfg.optodes);
  if (doc.contains("transport")) {
    const auto& t = doc.at("transport");
    check_keys(t, "transport", {"packets", "max_time_of_flight_ns", "threads"});
    cfg.transport.n_packets = get_or<std::uint64_t>(t, "packets", cfg.transport.n_packets);
    cfg.transport.max_time_of_flight = get_or(t, "max_time_of_flight_ns", cfg.transport.max_time_of_flight * 1e9) * 1e-9;
    cfg.transport.threads = get_or(t, "threads", cfg.transport.threads);
  }
  if (doc.contains("truth")) {
    cfg.truth.clear();
    for (const auto& s : doc.at("truth")) {
      check_keys(s, "truth", {"center", "radius", "contrast", "tissues"});
      SphereSpec sphere;
      sphere.center = vec3(s.at("center"), "truth.center");
      sphere.radius = get_or(s, "radius", sphere.radius);
      sphere.contrast = get_or(s, "contrast", sphere.contrast);
      if (s.contains("tissues")) sphere.tissues = tissue_set(s.at("tissues"), "truth.tissues");
      if (!(sphere.radius > 0.0)) throw ConfigError("perturbation radius must be positive");
      cfg.truth.push_back(sphere);
    }
  }
  if (doc.contains("coupling")) {
    const auto& c = doc.at("coupling");
    check_keys(c, "coupling", {"delta_a", "delta_phi"});
    cfg.delta_a = get_or(c, "delta_a", cfg.delta_a);
    cfg.delta_phi = get_or(c, "delta_phi", cfg.delta_phi);
  }
  if (doc.contains("roi")) cfg.roi = parse_roi(doc.at("roi"));
  if (doc.contains("projection")) {
    const auto& p = doc.at("projection");
    check_keys(p, "projection", {"k", "rank_tolerance"});
    if (p.contains("k") && !p.at("k").is_null()) cfg.nullspace_dimension = p.at("k").get<Eigen::Index>();
    cfg.rank_tolerance = get_or(p, "rank_tolerance", cfg.rank_tolerance);
  }
  if (doc.contains("baseline")) {
    const auto& b = doc.at("baseline");
    check_keys(b, "baseline", {"true_mu_a", "probes"});
    if (b.contains("true_mu_a")) {
      cfg.true_absorption.clear();
      const auto& t = b.at("true_mu_a");
      if (!t.is_object()) throw ConfigError("'baseline.true_mu_a' must map tissue names to values");
      for (auto it = t.begin(); it != t.end(); ++it) cfg.true_absorption[tissue_from_name(it.key())] = it.value().get<double>();
    }
    if (b.contains("probes")) {
      cfg.probes.clear();
      for (const auto& pr : b.at("probes")) {
        check_keys(pr, "baseline.probes", {"tissue", "delta"});
        cfg.probes.push_back({tissue_from_name(pr.at("tissue").get<std::string>()), pr.at("delta").get<double>()});
      }
    }
  }
  if (doc.contains("prior")) {
    const auto& p = doc.at("prior");
    check_keys(p, "prior", {"sigma", "correlation_length_mm"});
    cfg.prior_sigma = get_or(p, "sigma", cfg.prior_sigma);
    cfg.prior_correlation = get_or(p, "correlation_length_mm", cfg.prior_correlation);
  }
  if (doc.contains("noise")) {
    check_keys(doc.at("noise"), "noise", {"fraction"});
    cfg.noise_fraction = get_or(doc.at("noise"), "fraction", cfg.noise_fraction);
  }
  cfg.fov_threshold = get_or(doc, "fov_threshold", cfg.fov_threshold);
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(io::read_json(path)); }

void ScenarioConfig::validate() const {
  if (case_id < 1 || case_id > 4) throw ConfigError("case must be 1, 2, 3 or 4");
  if (transport.n_packets < 1) throw ConfigError("transport needs at least one packet");
  if (transport.threads < 1) throw ConfigError("thread count must be positive");
  if (!(transport.max_time_of_flight > 0.0)) throw ConfigError("time-of-flight budget must be positive");
  if (optodes.sources.empty() && optodes.source_rings.empty()) throw ConfigError("no sources configured");
  if (optodes.detectors.empty() && optodes.detector_rings.empty()) throw ConfigError("no detectors configured");
  if (!(optodes.frequency >= 0.0)) throw ConfigError("modulation frequency must be non-negative");
  if (truth.empty()) throw ConfigError("truth needs at least one perturbation");
  if (!(prior_sigma > 0.0) || !(prior_correlation > 0.0)) throw ConfigError("prior parameters must be positive");
  if (!(noise_fraction > 0.0)) throw ConfigError("noise fraction must be positive");
  if (!(fov_threshold > 0.0 && fov_threshold < 1.0)) throw ConfigError("fov_threshold must lie in (0, 1)");
  if (!(rank_tolerance > 0.0 && rank_tolerance < 1.0)) throw ConfigError("rank tolerance must lie in (0, 1)");
  if (nullspace_dimension && *nullspace_dimension < 1) throw ConfigError("projection k must be positive");
  if (case_id == 1 || case_id == 4) {
    if (!(delta_a > 0.0 && delta_a <= 1.0)) throw ConfigError("coupling delta_a must lie in (0, 1]");
    if (!(delta_phi >= 0.0)) throw ConfigError("coupling delta_phi must be non-negative");
  }
  if ((case_id == 2 || case_id == 4) && roi.kind == RoiSpec::Kind::kWhole) {
    throw ConfigError("case " + std::to_string(case_id) + " needs an ROI that leaves a region of non-interest");
  }
  if (case_id == 3) {
    if (true_absorption.empty()) throw ConfigError("case 3 needs 'baseline.true_mu_a'");
    if (probes.empty()) throw ConfigError("case 3 needs at least one probe shift");
    for (const auto& [t, v] : true_absorption) {
      if (t == Tissue::kExterior || !(v >= 0.0)) throw ConfigError("true absorption must be non-negative tissue values");
    }
    for (const auto& p : probes) {
      if (p.delta == 0.0) throw ConfigError("probe shifts must be nonzero");
    }
  }
}

}  // namespace dotmarg
