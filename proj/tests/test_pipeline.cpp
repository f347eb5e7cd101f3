#include <doctest.h>

#include "hmlab/experiment.hpp"
#include "hmlab/version.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hmlab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path fresh_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("hmlab_test_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Rows of report.csv restricted to one report name.
std::vector<std::string> csv_rows_for(const std::string& csv, const std::string& report) {
  std::vector<std::string> rows;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line))
    if (line.rfind(report + ",", 0) == 0) rows.push_back(line);
  return rows;
}

const char* kSmokeConfig = R"json({
  "schema": 1,
  "map": {"generator": "shear", "lambda": 1.0, "target_dim": 2},
  "smoothing": {"enabled": false},
  "mesh": {"R": 2.0, "h_mesh": 0.15},
  "checks": ["boundary_estimate", "subharmonicity", "cheng", "window", "gauss"],
  "certify": {"pairs": 1500, "triples": 1000, "deriv_probes": 100},
  "seed": 11
})json";

}  // namespace

TEST_CASE("config parsing: defaults, field validation, diagnostics") {
  const ExperimentConfig cfg = parse_config(kSmokeConfig);
  CHECK(cfg.map.generator == "shear");
  CHECK(cfg.mesh.radii.size() == 1);
  CHECK(cfg.seed == 11);
  CHECK(cfg.smoothing.enabled == false);

  auto rejects = [](const std::string& text, const std::string& needle) {
    try {
      (void)parse_config(text);
      FAIL_CHECK("expected rejection: " << needle);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  rejects(R"({"schema":1,"mesh":{"R":2}})", "map");
  rejects(R"({"schema":1,"map":{"generator":"warp"},"mesh":{"R":2}})", "generator");
  rejects(R"({"schema":1,"map":{"generator":"shear"},"mesh":{"R":0.5}})", "radii");
  rejects(R"({"schema":1,"map":{"generator":"shear"},"mesh":{"radii":[3,2]}})", "increasing");
  rejects(R"({"schema":1,"map":{"generator":"shear"},"mesh":{"R":2,"h_mesh":0.7}})", "h_mesh");
  rejects(R"({"schema":1,"map":{"generator":"shear"},"mesh":{"R":2},"checks":["nope"]})",
          "unknown check");
  rejects(R"({"schema":2,"map":{"generator":"shear"},"mesh":{"R":2}})", "schema");
  rejects("{not json", "parse error");
}

TEST_CASE("config hash is independent of key order") {
  const ExperimentConfig a = parse_config(kSmokeConfig);
  const ExperimentConfig b = parse_config(R"json({
    "seed": 11,
    "mesh": {"h_mesh": 0.15, "R": 2.0},
    "map": {"target_dim": 2, "lambda": 1.0, "generator": "shear"},
    "smoothing": {"enabled": false},
    "certify": {"deriv_probes": 100, "triples": 1000, "pairs": 1500},
    "checks": ["boundary_estimate", "subharmonicity", "cheng", "window", "gauss"],
    "schema": 1
  })json");
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("run_experiment: pass verdict, files, determinism") {
  const auto out1 = fresh_dir("run1");
  const auto out2 = fresh_dir("run2");
  const ExperimentConfig cfg = parse_config(kSmokeConfig);

  RunEnv env1{out1.string(), out1.string(), 1, std::nullopt};
  const RunResult r1 = run_experiment(cfg, env1);
  CHECK(r1.exit_code == 0);
  CHECK(std::filesystem::exists(out1 / "report.json"));
  CHECK(std::filesystem::exists(out1 / "report.csv"));
  CHECK(!r1.bundle.any_failed());

  // Same config + seed => byte-identical reports.
  RunEnv env2{out2.string(), out2.string(), 1, std::nullopt};
  const RunResult r2 = run_experiment(cfg, env2);
  CHECK(slurp((out1 / "report.json").string()) == slurp((out2 / "report.json").string()));
  CHECK(slurp((out1 / "report.csv").string()) == slurp((out2 / "report.csv").string()));

  // Window not applicable at desk scale is reported, not failed.
  const std::string json = slurp((out1 / "report.json").string());
  CHECK(json.find("not_applicable") != std::string::npos);
  CHECK(json.find("\"status\": \"pass\"") != std::string::npos);
  CHECK(json.find(kToolVersion) != std::string::npos);
  CHECK(json.find("mesh_R2") != std::string::npos);  // mesh hash in provenance

  // Reports are identical for any worker-thread count.
  const auto out3 = fresh_dir("run3");
  RunEnv env3{out3.string(), out3.string(), 3, std::nullopt};
  (void)run_experiment(cfg, env3);
  CHECK(slurp((out1 / "report.csv").string()) == slurp((out3 / "report.csv").string()));
}

TEST_CASE("pipelined mesh/gen-map/solve/verify equals the monolithic run") {
  const auto dir = fresh_dir("pipe");
  const ExperimentConfig cfg = parse_config(kSmokeConfig);

  // Monolithic.
  RunEnv env{(dir / "run").string(), (dir / "cache").string(), 1, std::nullopt};
  const RunResult mono = run_experiment(cfg, env);
  const auto mono_rows = csv_rows_for(slurp((dir / "run" / "report.csv").string()),
                                      "checks[R=2]");
  REQUIRE(!mono_rows.empty());

  // Pipelined: mesh -> gen-map -> solve -> verify, sharing the mesh cache.
  const BallMesh mesh = obtain_mesh((dir / "cache").string(), 2.0, 0.15, cfg.mesh.cap);
  const MapCertificate cert = certify_map(build_working_map(cfg.map, cfg.smoothing).working,
                                          cfg.certify, cfg.seed);
  const std::string mapspec = (dir / "mapspec.json").string();
  write_mapspec(cfg.map, cfg.smoothing, cert, mapspec);
  const MapSpecFile spec = read_mapspec(mapspec);
  CHECK(spec.certificate.certified_c == cert.certified_c);
  CHECK(spec.certificate.envelope_c == cert.envelope_c);

  const std::string sol_path = (dir / "solution.txt").string();
  const SolveArtifacts art = solve_to_file(mesh, spec, cfg.solve, 1, sol_path);
  CHECK(art.report.converged);

  RunEnv venv{(dir / "verify").string(), "", 1, std::nullopt};
  const RunResult ver = verify_solution(mesh_cache_path((dir / "cache").string(), 2.0, 0.15),
                                        sol_path, mapspec, cfg.checks, venv);
  CHECK(ver.exit_code == 0);
  const auto pipe_rows = csv_rows_for(slurp((dir / "verify" / "report.csv").string()),
                                      "checks[R=2]");
  CHECK(pipe_rows == mono_rows);
}

TEST_CASE("verify flags a tampered solution dump") {
  const auto dir = fresh_dir("tamper");
  const ExperimentConfig cfg = parse_config(kSmokeConfig);
  const BallMesh mesh = obtain_mesh((dir / "cache").string(), 2.0, 0.15, cfg.mesh.cap);
  const MapCertificate cert = certify_map(build_working_map(cfg.map, cfg.smoothing).working,
                                          cfg.certify, cfg.seed);
  const std::string mapspec = (dir / "mapspec.json").string();
  write_mapspec(cfg.map, cfg.smoothing, cert, mapspec);
  const MapSpecFile spec = read_mapspec(mapspec);
  const std::string sol_path = (dir / "solution.txt").string();
  (void)solve_to_file(mesh, spec, cfg.solve, 1, sol_path);

  // Move one boundary vertex value: replace its record with the base point.
  DiscreteMap sol = load_solution(sol_path, mesh);
  std::uint32_t victim = 0;
  for (int v = mesh.num_vertices() - 1; v >= 0; --v)
    if (mesh.boundary(v)) {
      victim = static_cast<std::uint32_t>(v);
      break;
    }
  sol.values[victim] = HPoint::origin(2);
  save_solution(sol, mesh, "tampered", sol_path);

  RunEnv venv{(dir / "verify").string(), "", 1, std::nullopt};
  const RunResult ver = verify_solution(mesh_cache_path((dir / "cache").string(), 2.0, 0.15),
                                        sol_path, mapspec, cfg.checks, venv);
  CHECK(ver.exit_code == 2);
  bool integrity_failed = false;
  for (const auto& rep : ver.bundle.reports)
    for (const auto& c : rep.checks)
      if (c.context == "boundary_data_integrity" && c.failed()) integrity_failed = true;
  CHECK(integrity_failed);
}

TEST_CASE("map certificates for the stock generators") {
  CertifySpec quick{2000, 1000, 100, 8.0};
  const MapCertificate iso = certify_map(build_raw_map(MapSpec{"isometry", 0.9, {0.4}, {}, 1.0, 0.0, 1.0, 2}), quick, 3);
  CHECK(iso.envelope_c == 1.0);
  CHECK(iso.envelope_additive == 0.0);
  CHECK(iso.product_A <= 1e-9);
  CHECK(iso.certified_c == 1.0);

  MapSpec shear_spec;
  shear_spec.generator = "shear";
  shear_spec.lambda = 1.0;
  const MapCertificate sh = certify_map(build_raw_map(shear_spec), quick, 3);
  CHECK(sh.certified_c >= sh.envelope_c);
  CHECK(sh.certified_c >= sh.deriv1 - 0.05);
  CHECK(sh.certified_c <= 2.5);
}

TEST_CASE("embedded shear runs end to end into H^3") {
  const auto dir = fresh_dir("h3");
  ExperimentConfig cfg = parse_config(kSmokeConfig);
  cfg.map.target_dim = 3;
  cfg.mesh.radii = {1.5};
  cfg.certify.pairs = 500;
  cfg.certify.triples = 200;
  cfg.certify.deriv_probes = 50;
  RunEnv env{dir.string(), dir.string(), 1, std::nullopt};
  const RunResult r = run_experiment(cfg, env);
  CHECK(r.exit_code == 0);
}
