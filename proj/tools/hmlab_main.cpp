// Command line front end: config-driven experiment runs plus the individual
// pipeline stages (mesh, gen-map, solve, verify, study).
//
// Exit codes: 0 when all requested checks passed or were not applicable,
// 2 when any check failed, 1 on operational errors.

#include "hmlab/experiment.hpp"
#include "hmlab/version.hpp"

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

struct CommonOpts {
  std::string out_dir;
  std::string cache_dir;
  int threads = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

// Precedence: flags > environment > config file defaults.
hmlab::RunEnv make_env(const CommonOpts& o) {
  hmlab::RunEnv env;
  env.out_dir = !o.out_dir.empty() ? o.out_dir : env_or("HMLAB_OUT", "out");
  env.cache_dir = !o.cache_dir.empty() ? o.cache_dir : env_or("HMLAB_CACHE", "");
  if (o.threads >= 0)
    env.threads = o.threads;
  else
    env.threads = std::atoi(env_or("HMLAB_THREADS", "0").c_str());
  if (o.seed_set)
    env.seed_override = o.seed;
  else if (const char* s = std::getenv("HMLAB_SEED"))
    env.seed_override = std::strtoull(s, nullptr, 10);
  return env;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--out", o.out_dir, "Output directory (env HMLAB_OUT)");
  cmd->add_option("--cache", o.cache_dir, "Mesh cache directory (env HMLAB_CACHE)");
  cmd->add_option("--threads", o.threads, "Worker threads, 0 = auto (env HMLAB_THREADS)");
  cmd->add_flag_callback("--version", [] {
    std::printf("hmlab %s\n", hmlab::kToolVersion);
    std::exit(0);
  });
  auto* seed = cmd->add_option("--seed", o.seed, "Sampling seed (env HMLAB_SEED)");
  seed->each([&o](const std::string&) { o.seed_set = true; });
}

int print_outcome(const hmlab::RunResult& result) {
  for (const auto& rep : result.bundle.reports) {
    for (const auto& c : rep.checks) {
      std::printf("%-28s %-34s %s", rep.name.c_str(), c.context.c_str(),
                  hmlab::to_string(c.status));
      if (c.applicable()) std::printf("  margin=%.3g", c.margin());
      std::printf("\n");
    }
  }
  for (const auto& f : result.written_files) std::printf("wrote %s\n", f.c_str());
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hmlab: harmonic-map Dirichlet solves and comparison-estimate checks on "
               "hyperbolic balls"};
  app.require_subcommand(1);

  std::string config_path, mesh_path, solution_path, mapspec_path;
  std::vector<std::string> check_names;
  double R = 4.0, h_mesh = 0.1;
  std::uint64_t cap = 2'000'000;

  CommonOpts run_o, mesh_o, gen_o, solve_o, verify_o, study_o;

  auto* cmd_run = app.add_subcommand("run", "Run a full experiment from a config file");
  cmd_run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  add_common(cmd_run, run_o);

  auto* cmd_mesh = app.add_subcommand("mesh", "Build and cache a geodesic ball mesh");
  cmd_mesh->add_option("--R", R, "Ball radius")->required();
  cmd_mesh->add_option("--h-mesh", h_mesh, "Target edge length")->required();
  cmd_mesh->add_option("--cap", cap, "Vertex cap");
  add_common(cmd_mesh, mesh_o);

  auto* cmd_gen = app.add_subcommand("gen-map", "Serialize a map spec with its certification");
  cmd_gen->add_option("--config", config_path, "Experiment config (JSON)")->required();
  add_common(cmd_gen, gen_o);

  auto* cmd_solve = app.add_subcommand("solve", "Single Dirichlet solve to a solution dump");
  cmd_solve->add_option("--mesh", mesh_path, "Mesh cache file")->required();
  cmd_solve->add_option("--mapspec", mapspec_path, "Map spec file from gen-map")->required();
  add_common(cmd_solve, solve_o);

  auto* cmd_verify = app.add_subcommand("verify", "Re-run checks on a solved dump");
  cmd_verify->add_option("--mesh", mesh_path, "Mesh cache file")->required();
  cmd_verify->add_option("--solution", solution_path, "Solution dump")->required();
  cmd_verify->add_option("--mapspec", mapspec_path, "Map spec file")->required();
  cmd_verify->add_option("--checks", check_names, "Checks to run (default: all)");
  add_common(cmd_verify, verify_o);

  auto* cmd_study = app.add_subcommand("study", "Convergence schedule over the config radii");
  cmd_study->add_option("--config", config_path, "Experiment config (JSON)")->required();
  add_common(cmd_study, study_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      const auto cfg = hmlab::load_config(config_path);
      return print_outcome(hmlab::run_experiment(cfg, make_env(run_o)));
    }
    if (cmd_mesh->parsed()) {
      const auto env = make_env(mesh_o);
      const std::string dir = env.cache_dir.empty() ? env.out_dir : env.cache_dir;
      const hmlab::BallMesh mesh = hmlab::obtain_mesh(dir, R, h_mesh, cap);
      std::printf("mesh %s\n", hmlab::mesh_cache_path(dir, R, h_mesh).c_str());
      std::printf("vertices %d  edges %zu  triangles %zu  hash 0x%016" PRIx64 "\n",
                  mesh.num_vertices(), mesh.edges.size(), mesh.triangles.size(), mesh.hash());
      return 0;
    }
    if (cmd_gen->parsed()) {
      const auto cfg = hmlab::load_config(config_path);
      const auto env = make_env(gen_o);
      const std::uint64_t seed = env.seed_override.value_or(cfg.seed);
      const hmlab::BuiltMap bm = hmlab::build_working_map(cfg.map, cfg.smoothing);
      const hmlab::MapCertificate cert = hmlab::certify_map(bm.working, cfg.certify, seed);
      std::filesystem::create_directories(env.out_dir);
      const std::string path = env.out_dir + "/mapspec.json";
      hmlab::write_mapspec(cfg.map, cfg.smoothing, cert, path);
      std::printf("map %s\n", bm.working.description.c_str());
      std::printf("certified c=%.6g (envelope c=%.6g additive=%.6g, d1=%.6g d2=%.6g, A=%.6g)\n",
                  cert.certified_c, cert.envelope_c, cert.envelope_additive, cert.deriv1,
                  cert.deriv2, cert.product_A);
      std::printf("wrote %s\n", path.c_str());
      return 0;
    }
    if (cmd_solve->parsed()) {
      const auto env = make_env(solve_o);
      const hmlab::BallMesh mesh = hmlab::load_mesh(mesh_path);
      const hmlab::MapSpecFile spec = hmlab::read_mapspec(mapspec_path);
      std::filesystem::create_directories(env.out_dir);
      hmlab::SolveSpec ss;
      const auto art = hmlab::solve_to_file(mesh, spec, ss, env.threads,
                                            env.out_dir + "/solution.txt");
      std::printf("solved: sweeps=%d newton=%d converged=%d displacement=%.3g\n",
                  art.report.sweeps, art.report.newton_steps, art.report.converged ? 1 : 0,
                  art.report.final_max_displacement);
      std::printf("wrote %s\n", art.solution_path.c_str());
      return art.report.converged ? 0 : 2;
    }
    if (cmd_verify->parsed()) {
      const auto env = make_env(verify_o);
      const auto checks = check_names.empty() ? hmlab::known_check_names() : check_names;
      return print_outcome(
          hmlab::verify_solution(mesh_path, solution_path, mapspec_path, checks, env));
    }
    if (cmd_study->parsed()) {
      auto cfg = hmlab::load_config(config_path);
      cfg.checks = {"study"};
      return print_outcome(hmlab::run_experiment(cfg, make_env(study_o)));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
