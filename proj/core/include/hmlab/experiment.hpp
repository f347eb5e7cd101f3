#pragma once

#include "hmlab/config.hpp"
#include "hmlab/report.hpp"

#include <optional>

namespace hmlab {

/// Empirical certificate attached to a map: the sampled distortion envelope,
/// the Gromov-product constant, finite-difference derivative bounds, and the
/// grid-rounded constant used by the estimate checks.
struct MapCertificate {
  double envelope_c = 1.0;
  double envelope_additive = 0.0;
  double product_A = 0.0;
  double deriv1 = 0.0;
  double deriv2 = 0.0;
  double certified_c = 1.0;
  std::uint64_t pairs = 0;
  std::uint64_t triples = 0;
  std::uint64_t deriv_probes = 0;
  std::uint64_t seed = 0;
};

struct BuiltMap {
  QuasiIsometricMap raw;
  QuasiIsometricMap working;  // smoothed when smoothing is enabled
  bool smoothed = false;
};

QuasiIsometricMap build_raw_map(const MapSpec& spec);
BuiltMap build_working_map(const MapSpec& spec, const SmoothingSpec& smoothing);
MapCertificate certify_map(const QuasiIsometricMap& map, const CertifySpec& spec,
                           std::uint64_t seed);

struct RunEnv {
  std::string out_dir = ".";
  std::string cache_dir;  // empty -> out_dir
  int threads = 0;        // 0 -> hardware
  std::optional<std::uint64_t> seed_override;
};

struct RunResult {
  ReportBundle bundle;
  int exit_code = 0;
  std::vector<std::string> written_files;
};

/// Full config-driven pipeline: certify, mesh, solve, check, report.
/// Reports are written atomically under env.out_dir; exit code 0 when every
/// requested check passed or was not applicable, 2 on any failed check.
RunResult run_experiment(const ExperimentConfig& cfg, const RunEnv& env);

/// Subcommand building blocks (shared between the CLI and the tests).
std::string mesh_cache_path(const std::string& cache_dir, double R, double h_mesh);
BallMesh obtain_mesh(const std::string& cache_dir, double R, double h_mesh, std::uint64_t cap);

void write_mapspec(const MapSpec& map, const SmoothingSpec& smoothing, const MapCertificate& cert,
                   const std::string& path);
struct MapSpecFile {
  MapSpec map;
  SmoothingSpec smoothing;
  MapCertificate certificate;
};
MapSpecFile read_mapspec(const std::string& path);

struct SolveArtifacts {
  SolveReport report;
  std::string solution_path;
};
SolveArtifacts solve_to_file(const BallMesh& mesh, const MapSpecFile& spec,
                             const SolveSpec& solve_spec, int threads,
                             const std::string& solution_path);

/// Pure re-verification of a solved dump: recomputes the reference field from
/// the map spec, checks the Dirichlet data integrity, and reruns the
/// requested estimate checks. Produces the same check rows as run_experiment.
RunResult verify_solution(const std::string& mesh_path, const std::string& solution_path,
                          const std::string& mapspec_path, const std::vector<std::string>& checks,
                          const RunEnv& env);

/// The per-radius check report shared by run_experiment and verify_solution.
EstimateReport radius_check_report(const BallMesh& mesh, const DiscreteMap& solution,
                                   const QuasiIsometricMap& working_map,
                                   const std::vector<HPoint>& f_values, const MapCertificate& cert,
                                   const std::vector<std::string>& checks);

}  // namespace hmlab
