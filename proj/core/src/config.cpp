#include "hmlab/config.hpp"

#include "hmlab/numeric.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hmlab {

using nlohmann::json;

const std::vector<std::string>& known_check_names() {
  static const std::vector<std::string> names = {"boundary_estimate", "subharmonicity", "cheng",
                                                 "window", "gauss", "study"};
  return names;
}

namespace {

const std::vector<std::string> kGenerators = {"isometry", "perturbed_isometry", "shear"};

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.schema = field_or<int>(j, "schema", 1);
  if (cfg.schema != 1) throw ConfigError("config field 'schema': unsupported version");

  if (!j.contains("map")) throw ConfigError("config: missing 'map' section");
  const json& jm = j.at("map");
  cfg.map.generator = field_or<std::string>(jm, "generator", "");
  if (std::find(kGenerators.begin(), kGenerators.end(), cfg.map.generator) == kGenerators.end())
    throw ConfigError("config field 'map.generator': unknown generator '" + cfg.map.generator + "'");
  cfg.map.translation = field_or<double>(jm, "translation", 0.0);
  cfg.map.angles = field_or<std::vector<double>>(jm, "angles", {});
  cfg.map.post_angles = field_or<std::vector<double>>(jm, "post_angles", {});
  cfg.map.lambda = field_or<double>(jm, "lambda", 1.0);
  cfg.map.amplitude = field_or<double>(jm, "amplitude", 0.0);
  cfg.map.frequency = field_or<double>(jm, "frequency", 1.0);
  cfg.map.target_dim = field_or<int>(jm, "target_dim", 2);
  if (cfg.map.target_dim < 2 || cfg.map.target_dim > 3)
    throw ConfigError("config field 'map.target_dim': must be 2 or 3");
  if (cfg.map.amplitude < 0.0)
    throw ConfigError("config field 'map.amplitude': must be nonnegative");

  if (j.contains("smoothing")) {
    const json& js = j.at("smoothing");
    cfg.smoothing.enabled = field_or<bool>(js, "enabled", false);
    cfg.smoothing.profile = field_or<std::string>(js, "profile", "default");
    if (cfg.smoothing.profile != "default" && cfg.smoothing.profile != "const")
      throw ConfigError("config field 'smoothing.profile': unknown profile");
    cfg.smoothing.karcher_tol = field_or<double>(js, "karcher_tol", 1e-10);
    cfg.smoothing.radial_nodes = field_or<int>(js, "radial_nodes", 16);
    cfg.smoothing.angular_nodes = field_or<int>(js, "angular_nodes", 32);
  }

  if (!j.contains("mesh")) throw ConfigError("config: missing 'mesh' section");
  const json& jme = j.at("mesh");
  if (jme.contains("radii")) {
    cfg.mesh.radii = field_or<std::vector<double>>(jme, "radii", {});
  } else if (jme.contains("R")) {
    cfg.mesh.radii = {field_or<double>(jme, "R", 0.0)};
  } else {
    throw ConfigError("config field 'mesh': needs 'R' or 'radii'");
  }
  for (double r : cfg.mesh.radii)
    if (r < 1.0) throw ConfigError("config field 'mesh.radii': radii must be >= 1");
  for (std::size_t i = 1; i < cfg.mesh.radii.size(); ++i)
    if (cfg.mesh.radii[i] <= cfg.mesh.radii[i - 1])
      throw ConfigError("config field 'mesh.radii': must be strictly increasing");
  cfg.mesh.h_mesh = field_or<double>(jme, "h_mesh", 0.1);
  if (cfg.mesh.h_mesh < 0.01 || cfg.mesh.h_mesh > 0.5)
    throw ConfigError("config field 'mesh.h_mesh': outside [0.01, 0.5]");
  cfg.mesh.cap = field_or<std::uint64_t>(jme, "cap", 2'000'000ULL);

  if (j.contains("solve")) {
    const json& js = j.at("solve");
    cfg.solve.tol_factor = field_or<double>(js, "tol_factor", 1e-6);
    cfg.solve.max_sweeps = field_or<int>(js, "max_sweeps", 0);
    cfg.solve.method = field_or<std::string>(js, "method", "newton_gs");
    if (cfg.solve.method != "newton_gs" && cfg.solve.method != "gauss_seidel")
      throw ConfigError("config field 'solve.method': unknown method");
  }

  cfg.checks = field_or<std::vector<std::string>>(j, "checks", known_check_names());
  for (const auto& c : cfg.checks) {
    const auto& known = known_check_names();
    if (std::find(known.begin(), known.end(), c) == known.end())
      throw ConfigError("config field 'checks': unknown check '" + c + "'");
  }

  if (j.contains("certify")) {
    const json& jc = j.at("certify");
    cfg.certify.pairs = field_or<std::uint64_t>(jc, "pairs", 20'000ULL);
    cfg.certify.triples = field_or<std::uint64_t>(jc, "triples", 20'000ULL);
    cfg.certify.deriv_probes = field_or<std::uint64_t>(jc, "deriv_probes", 500ULL);
    cfg.certify.sample_radius = field_or<double>(jc, "sample_radius", 8.0);
  }
  if (j.contains("study")) cfg.study.S = field_or<double>(j.at("study"), "S", 2.0);
  cfg.seed = field_or<std::uint64_t>(j, "seed", 1ULL);
  if (j.contains("output")) {
    const json& jo = j.at("output");
    cfg.output.emit_per_vertex = field_or<bool>(jo, "emit_per_vertex", false);
    cfg.output.emit_artifacts = field_or<bool>(jo, "emit_artifacts", false);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
  json j;  // nlohmann::json orders keys alphabetically
  j["schema"] = cfg.schema;
  j["map"] = {{"generator", cfg.map.generator},   {"translation", cfg.map.translation},
              {"angles", cfg.map.angles},         {"post_angles", cfg.map.post_angles},
              {"lambda", cfg.map.lambda},         {"amplitude", cfg.map.amplitude},
              {"frequency", cfg.map.frequency},   {"target_dim", cfg.map.target_dim}};
  j["smoothing"] = {{"enabled", cfg.smoothing.enabled},
                    {"profile", cfg.smoothing.profile},
                    {"karcher_tol", cfg.smoothing.karcher_tol},
                    {"radial_nodes", cfg.smoothing.radial_nodes},
                    {"angular_nodes", cfg.smoothing.angular_nodes}};
  j["mesh"] = {{"radii", cfg.mesh.radii}, {"h_mesh", cfg.mesh.h_mesh}, {"cap", cfg.mesh.cap}};
  j["solve"] = {{"tol_factor", cfg.solve.tol_factor},
                {"max_sweeps", cfg.solve.max_sweeps},
                {"method", cfg.solve.method}};
  j["checks"] = cfg.checks;
  j["certify"] = {{"pairs", cfg.certify.pairs},
                  {"triples", cfg.certify.triples},
                  {"deriv_probes", cfg.certify.deriv_probes},
                  {"sample_radius", cfg.certify.sample_radius}};
  j["study"] = {{"S", cfg.study.S}};
  j["seed"] = cfg.seed;
  j["output"] = {{"emit_per_vertex", cfg.output.emit_per_vertex},
                 {"emit_artifacts", cfg.output.emit_artifacts}};
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a(canonical_config_json(cfg));
}

}  // namespace hmlab
