#pragma once

#include "hmlab/hyperboloid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hmlab {

struct MapSpec {
  std::string generator;  // isometry | perturbed_isometry | shear
  double translation = 0.0;
  std::vector<double> angles;
  std::vector<double> post_angles;
  double lambda = 1.0;     // shear strength
  double amplitude = 0.0;  // perturbation amplitude
  double frequency = 1.0;  // perturbation frequency
  int target_dim = 2;
};

struct SmoothingSpec {
  bool enabled = false;
  std::string profile = "default";  // default | const
  double karcher_tol = 1e-10;
  int radial_nodes = 16;
  int angular_nodes = 32;
};

struct MeshSpec {
  std::vector<double> radii;  // strictly increasing
  double h_mesh = 0.1;
  std::uint64_t cap = 2'000'000;
};

struct SolveSpec {
  double tol_factor = 1e-6;  // tol = tol_factor * h_mesh
  int max_sweeps = 0;        // 0 -> solver default
  std::string method = "newton_gs";  // newton_gs | gauss_seidel
};

struct CertifySpec {
  std::uint64_t pairs = 20'000;
  std::uint64_t triples = 20'000;
  std::uint64_t deriv_probes = 500;
  double sample_radius = 8.0;
};

struct StudySpec {
  double S = 2.0;
};

struct OutputSpec {
  bool emit_per_vertex = false;
  bool emit_artifacts = false;
};

struct ExperimentConfig {
  int schema = 1;
  MapSpec map;
  SmoothingSpec smoothing;
  MeshSpec mesh;
  SolveSpec solve;
  std::vector<std::string> checks;  // subset of the known check names
  CertifySpec certify;
  StudySpec study;
  std::uint64_t seed = 1;
  OutputSpec output;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Parse + validate. Unknown generator names, non-increasing radii and
/// out-of-range mesh parameters are rejected with the offending field named.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Key-sorted canonical serialization; its FNV hash identifies the
/// experiment in every report.
std::string canonical_config_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

const std::vector<std::string>& known_check_names();

}  // namespace hmlab
