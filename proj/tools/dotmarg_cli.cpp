// dotmarg: simulate, replay and reconstruct desk-scale DOT scenarios.
//
// Exit codes: 0 ok, 1 internal error, 2 configuration error, 3 dead channel,
// 4 numerical failure, 5 manifest verification failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dotmarg/errors.hpp"
#include "dotmarg/io.hpp"
#include "dotmarg/runner.hpp"
#include "dotmarg/scenario.hpp"

namespace fs = std::filesystem;
using namespace dotmarg;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kDeadChannel = 3, kNumerical = 4, kManifest = 5 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string records;
  int case_id = 0;
};

ScenarioConfig resolve(const Options& opt, int case_override = 0) {
  io::json doc = opt.config.empty() ? io::json::object() : io::read_json(opt.config);
  if (case_override) doc["case"] = case_override;
  if (opt.seed) doc["seed"] = *opt.seed;
  if (!opt.out.empty()) doc["output_dir"] = opt.out;
  auto cfg = parse_scenario(doc);
  if (opt.threads) {
    cfg.transport.threads = *opt.threads;
    cfg.validate();
  }
  return cfg;
}

std::optional<std::vector<PhotonRecordSet>> cached_records(const Options& opt, const ScenarioConfig& cfg) {
  const fs::path dir = opt.records.empty() ? cfg.output_dir : fs::path(opt.records);
  const auto phantom = build_phantom(cfg);
  const auto optodes = build_optodes(cfg, phantom);
  auto records = load_records(dir, optodes.sources.size());
  if (records) std::cerr << "using photon records from " << (dir / "records").string() << '\n';
  return records;
}

void print_report(const RunReport& r) {
  std::printf("case %d  seed %llu  m=%zu l=%zu n=%zu n~=%zu\n", r.case_id, static_cast<unsigned long long>(r.seed), r.m,
              r.l, r.n, r.n_tilde);
  std::printf("projection %s  k=%lld  rank=%lld/%lld\n", r.provenance.c_str(),
              static_cast<long long>(r.nullspace_dimension), static_cast<long long>(r.projection_rank),
              static_cast<long long>(r.data_length));
  std::printf("L2 error (%s): naive %.4f  projected %.4f  reference %.4f\n", r.error_mask.c_str(), r.naive_error,
              r.projected_error, r.reference_error);
  for (const auto& w : r.warnings) std::printf("warning: %s\n", w.c_str());
}

int run_reconstruction(const Options& opt, int case_override) {
  const auto cfg = resolve(opt, case_override);
  auto ws = prepare_workspace(cfg, cached_records(opt, cfg));
  auto report = run_case(ws);
  write_run_outputs(report, ws, cfg.output_dir);
  print_report(report);
  std::printf("wrote %s\n", (cfg.output_dir / "report.json").string().c_str());
  return kOk;
}

int run_report(const Options& opt) {
  const fs::path dir = opt.out.empty() ? fs::path("out") : fs::path(opt.out);
  const auto report = io::read_json(dir / "report.json");
  const auto& e = report.at("errors");
  std::printf("case %d  seed %llu\n", report.at("case").get<int>(),
              static_cast<unsigned long long>(report.at("seed").get<std::uint64_t>()));
  std::printf("L2 error (%s): naive %.4f  projected %.4f  reference %.4f\n", e.at("mask").get<std::string>().c_str(),
              e.at("naive").get<double>(), e.at("projected").get<double>(), e.at("reference").get<double>());
  const auto problems = verify_manifest(dir);
  for (const auto& p : problems) std::printf("manifest: %s\n", p.c_str());
  std::printf("manifest: %zu files, %s\n", report.at("manifest").size(), problems.empty() ? "all checksums match" : "FAILED");
  return problems.empty() ? kOk : kManifest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale diffuse optical tomography with projection-based marginalization"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("-c,--config", opt.config, "Scenario JSON file")->check(CLI::ExistingFile);
  app.add_option("-o,--out", opt.out, "Output directory (overrides the config)");
  app.add_option("-s,--seed", opt.seed, "Root seed (overrides the config)");
  app.add_option("-j,--threads", opt.threads, "Transport worker threads")->check(CLI::PositiveNumber);

  auto* phantom = app.add_subcommand("phantom", "Build the phantom and optodes; write labels, mu_a and slices");
  auto* simulate = app.add_subcommand("simulate", "Run photon transport; write one record file per source");
  auto* jacobian = app.add_subcommand("jacobian", "Replay records into the FOV Jacobian and coupling Jacobian");
  jacobian->add_option("--records", opt.records, "Directory holding records/ (default: output directory)");
  auto* reconstruct = app.add_subcommand("reconstruct", "Run the config's case, reusing stored records if present");
  reconstruct->add_option("--records", opt.records, "Directory holding records/ (default: output directory)");
  auto* case_cmd = app.add_subcommand("case", "Run case 1-4 end to end");
  case_cmd->add_option("n", opt.case_id, "Case number")->required()->check(CLI::Range(1, 4));
  auto* report = app.add_subcommand("report", "Summarize report.json in --out and verify its manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (phantom->parsed()) {
      const auto cfg = resolve(opt);
      Workspace ws;
      ws.config = cfg;
      ws.phantom = build_phantom(cfg);
      ws.optodes = build_optodes(cfg, ws.phantom);
      write_phantom_outputs(ws, cfg.output_dir);
      std::printf("phantom %dx%dx%d, %zu sources, %zu detectors, m=%zu; wrote %s\n", ws.phantom.dims.nx,
                  ws.phantom.dims.ny, ws.phantom.dims.nz, ws.optodes.sources.size(), ws.optodes.detectors.size(),
                  ws.optodes.m(), cfg.output_dir.string().c_str());
    } else if (simulate->parsed()) {
      const auto cfg = resolve(opt);
      Workspace ws;
      ws.config = cfg;
      ws.phantom = build_phantom(cfg);
      ws.optodes = build_optodes(cfg, ws.phantom);
      ws.records = simulate_all(cfg, ws.phantom, ws.optodes);
      write_record_outputs(ws, cfg.output_dir);
      for (const auto& s : ws.records) {
        std::printf("source %d: launched %llu, detected %zu, escaped %llu, expired %llu\n", s.source_index,
                    static_cast<unsigned long long>(s.launched_count), s.records.size(),
                    static_cast<unsigned long long>(s.escape_count), static_cast<unsigned long long>(s.expired_count));
      }
    } else if (jacobian->parsed()) {
      const auto cfg = resolve(opt);
      const auto ws = prepare_workspace(cfg, cached_records(opt, cfg));
      write_jacobian_outputs(ws, cfg.output_dir);
      std::printf("jacobian %lldx%lld over %zu FOV voxels; wrote %s\n", static_cast<long long>(ws.j_total.rows()),
                  static_cast<long long>(ws.j_total.cols()), ws.masks.n_total(), cfg.output_dir.string().c_str());
    } else if (reconstruct->parsed()) {
      return run_reconstruction(opt, 0);
    } else if (case_cmd->parsed()) {
      return run_reconstruction(opt, opt.case_id);
    } else if (report->parsed()) {
      return run_report(opt);
    }
    return kOk;
  } catch (const DeadChannelError& e) {
    std::cerr << "dead channel: " << e.what() << '\n';
    return kDeadChannel;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what();
    if (e.condition_estimate() > 0) std::cerr << " (condition estimate " << e.condition_estimate() << ")";
    std::cerr << '\n';
    return kNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
}
