#include "hmlab/experiment.hpp"

#include "hmlab/numeric.hpp"
#include "hmlab/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace hmlab {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, v);
  return buf;
}

std::string format_double_compact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Index-partitioned parallel map; every slot is written by exactly one
// worker, so results are identical for any thread count.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  threads = std::min<std::size_t>(std::max(threads, 1), n);
  if (threads <= 1 || n < 256) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

double round_up_to_grid(double v, double grid = 0.05) {
  const double cells = std::ceil((v - 1e-9) / grid);
  return std::max(0.0, cells * grid);
}

}  // namespace

QuasiIsometricMap build_raw_map(const MapSpec& spec) {
  QuasiIsometricMap f;
  if (spec.generator == "isometry") {
    IsometryParams p{2, spec.translation, spec.angles, spec.post_angles};
    f = make_isometry(p);
  } else if (spec.generator == "perturbed_isometry") {
    IsometryParams p{2, spec.translation, spec.angles, spec.post_angles};
    f = make_perturbed_isometry(p, spec.amplitude, spec.frequency);
  } else if (spec.generator == "shear") {
    f = make_horocyclic_shear(spec.lambda);
  } else {
    throw Error("build_raw_map: unknown generator " + spec.generator);
  }
  if (spec.target_dim > f.target_dim) f = compose_with_embedding(f, spec.target_dim);
  return f;
}

BuiltMap build_working_map(const MapSpec& spec, const SmoothingSpec& smoothing) {
  BuiltMap bm;
  bm.raw = build_raw_map(spec);
  if (!smoothing.enabled) {
    bm.working = bm.raw;
    return bm;
  }
  auto alpha = smoothing.profile == "const"
                   ? std::function<double(double)>([](double s) { return s < 1.0 ? 1.0 : 0.0; })
                   : default_bump_alpha();
  BumpProfile bump = normalize_bump(std::move(alpha), 2, smoothing.profile);
  SmoothingQuadrature quad{smoothing.radial_nodes, smoothing.angular_nodes};
  bm.working = smooth(bm.raw, bump, quad, smoothing.karcher_tol);
  bm.smoothed = true;
  return bm;
}

MapCertificate certify_map(const QuasiIsometricMap& map, const CertifySpec& spec,
                           std::uint64_t seed) {
  MapCertificate cert;
  cert.seed = seed;
  PairSampler sampler{seed, map.domain_dim, spec.sample_radius, 1.0};
  const DistortionEstimate env = estimate_qi_constant(map, sampler, spec.pairs);
  cert.envelope_c = env.c_lower;
  cert.envelope_additive = env.A_lower;
  cert.pairs = env.samples;
  const DistortionEstimate prod =
      estimate_product_distortion(map, env.c_lower, sampler, spec.triples);
  cert.product_A = prod.A_lower;
  cert.triples = prod.samples;
  const DerivativeBounds db =
      sample_derivative_bounds(map, seed + 1, spec.deriv_probes, spec.sample_radius);
  cert.deriv1 = db.first;
  cert.deriv2 = db.second;
  cert.deriv_probes = db.samples;
  cert.certified_c =
      1.0 + round_up_to_grid(std::max({cert.envelope_c, cert.deriv1, cert.deriv2, 1.0}) - 1.0);
  return cert;
}

std::string mesh_cache_path(const std::string& cache_dir, double R, double h_mesh) {
  return cache_dir + "/mesh_k2_R" + format_double_compact(R) + "_h" +
         format_double_compact(h_mesh) + ".bin";
}

BallMesh obtain_mesh(const std::string& cache_dir, double R, double h_mesh, std::uint64_t cap) {
  const std::string path = mesh_cache_path(cache_dir, R, h_mesh);
  if (std::filesystem::exists(path)) return load_mesh(path);
  BallMesh mesh = build_polar_mesh(HPoint::origin(2), R, h_mesh, cap);
  std::filesystem::create_directories(cache_dir);
  save_mesh(mesh, path);
  // Use the cached (double-rounded) coordinates from the start, so later
  // loads see bit-identical geometry.
  return load_mesh(path);
}

void write_mapspec(const MapSpec& map, const SmoothingSpec& smoothing, const MapCertificate& cert,
                   const std::string& path) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["map"] = {{"generator", map.generator},   {"translation", map.translation},
              {"angles", map.angles},         {"post_angles", map.post_angles},
              {"lambda", map.lambda},         {"amplitude", map.amplitude},
              {"frequency", map.frequency},   {"target_dim", map.target_dim}};
  j["smoothing"] = {{"enabled", smoothing.enabled},
                    {"profile", smoothing.profile},
                    {"karcher_tol", smoothing.karcher_tol},
                    {"radial_nodes", smoothing.radial_nodes},
                    {"angular_nodes", smoothing.angular_nodes}};
  char buf[40];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  j["certificate"] = {{"envelope_c", num(cert.envelope_c)},
                      {"envelope_additive", num(cert.envelope_additive)},
                      {"product_A", num(cert.product_A)},
                      {"deriv1", num(cert.deriv1)},
                      {"deriv2", num(cert.deriv2)},
                      {"certified_c", num(cert.certified_c)},
                      {"pairs", cert.pairs},
                      {"triples", cert.triples},
                      {"deriv_probes", cert.deriv_probes},
                      {"seed", cert.seed}};
  write_file_atomic(path, j.dump(2) + "\n");
}

MapSpecFile read_mapspec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("read_mapspec: cannot open " + path);
  json j = json::parse(f, nullptr, true);
  MapSpecFile out;
  const json& jm = j.at("map");
  out.map.generator = jm.at("generator").get<std::string>();
  out.map.translation = jm.at("translation").get<double>();
  out.map.angles = jm.at("angles").get<std::vector<double>>();
  out.map.post_angles = jm.at("post_angles").get<std::vector<double>>();
  out.map.lambda = jm.at("lambda").get<double>();
  out.map.amplitude = jm.at("amplitude").get<double>();
  out.map.frequency = jm.at("frequency").get<double>();
  out.map.target_dim = jm.at("target_dim").get<int>();
  const json& js = j.at("smoothing");
  out.smoothing.enabled = js.at("enabled").get<bool>();
  out.smoothing.profile = js.at("profile").get<std::string>();
  out.smoothing.karcher_tol = js.at("karcher_tol").get<double>();
  out.smoothing.radial_nodes = js.at("radial_nodes").get<int>();
  out.smoothing.angular_nodes = js.at("angular_nodes").get<int>();
  const json& jc = j.at("certificate");
  out.certificate.envelope_c = std::stod(jc.at("envelope_c").get<std::string>());
  out.certificate.envelope_additive = std::stod(jc.at("envelope_additive").get<std::string>());
  out.certificate.product_A = std::stod(jc.at("product_A").get<std::string>());
  out.certificate.deriv1 = std::stod(jc.at("deriv1").get<std::string>());
  out.certificate.deriv2 = std::stod(jc.at("deriv2").get<std::string>());
  out.certificate.certified_c = std::stod(jc.at("certified_c").get<std::string>());
  out.certificate.pairs = jc.at("pairs").get<std::uint64_t>();
  out.certificate.triples = jc.at("triples").get<std::uint64_t>();
  out.certificate.deriv_probes = jc.at("deriv_probes").get<std::uint64_t>();
  out.certificate.seed = jc.at("seed").get<std::uint64_t>();
  return out;
}

namespace {

std::vector<HPoint> evaluate_field(const QuasiIsometricMap& f, const BallMesh& mesh, int threads) {
  std::vector<std::optional<HPoint>> tmp(mesh.vertices.size());
  parallel_for(mesh.vertices.size(), threads,
               [&](std::size_t i) { tmp[i] = f(mesh.vertices[i]); });
  std::vector<HPoint> out;
  out.reserve(tmp.size());
  for (auto& t : tmp) out.push_back(std::move(*t));
  return out;
}

std::vector<HPoint> subharmonicity_centers(const DiscreteMap& h,
                                           const std::vector<HPoint>& f_values) {
  const HPoint& f0 = f_values.front();
  const auto frame = tangent_frame(f0);
  std::vector<HPoint> y0s = {h.values.front(), f0};
  y0s.push_back(exp_map(f0, frame[0].scaled(2.0)));
  y0s.push_back(exp_map(f0, frame[1].scaled(-1.5)));
  y0s.push_back(exp_map(f0, frame.back().scaled(3.0)));
  return y0s;
}

}  // namespace

EstimateReport radius_check_report(const BallMesh& mesh, const DiscreteMap& solution,
                                   const QuasiIsometricMap& working_map,
                                   const std::vector<HPoint>& f_values, const MapCertificate& cert,
                                   const std::vector<std::string>& checks) {
  auto wants = [&checks](const char* name) {
    return std::find(checks.begin(), checks.end(), name) != checks.end();
  };
  EstimateReport rep;
  rep.name = "checks[R=" + format_double_compact(mesh.R) + "]";
  rep.scalar("R", mesh.R);
  rep.scalar("h_mesh", mesh.h_mesh);
  rep.scalar("vertices", static_cast<double>(mesh.num_vertices()));
  rep.scalar("certified_c", cert.certified_c);

  // Dirichlet data integrity: boundary vertices must carry the map values.
  double worst_boundary = 0.0;
  std::uint64_t nb = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!mesh.boundary(v)) continue;
    worst_boundary = std::max(
        worst_boundary, dist(solution.values[static_cast<std::size_t>(v)], f_values[static_cast<std::size_t>(v)]));
    ++nb;
  }
  rep.add(BoundCheck::upper("boundary_data_integrity", worst_boundary, 0.0, 1e-9, 0.0, 0.0, nb));

  const SupDistanceRecord rec = sup_distance(mesh, solution, f_values);
  rep.scalar("rho_sup", rec.rho_sup);
  rep.scalar("rho_sup_vertex", static_cast<double>(rec.argmax_vertex));

  if (wants("boundary_estimate")) {
    const VertexFieldCheck bc =
        check_boundary_estimate(mesh, solution, f_values, cert.certified_c, 1.0, 2);
    rep.scalar("boundary_estimate_violations", static_cast<double>(bc.violations));
    rep.add(bc.aggregate);
  }
  if (wants("subharmonicity")) {
    int idx = 0;
    for (const HPoint& y0 : subharmonicity_centers(solution, f_values)) {
      VertexFieldCheck sc = check_subharmonicity(mesh, solution, y0);
      sc.aggregate.context += "[y0=" + std::to_string(idx++) + "]";
      rep.add(sc.aggregate);
    }
  }
  if (wants("cheng")) {
    // Up to 100 probes with B(v,1) inside the mesh, evenly strided.
    std::vector<std::uint32_t> eligible;
    for (int v = 0; v < mesh.num_vertices(); ++v)
      if (dist(mesh.center, mesh.vertices[static_cast<std::size_t>(v)]) + 1.0 <= mesh.R)
        eligible.push_back(static_cast<std::uint32_t>(v));
    const std::size_t want = std::min<std::size_t>(eligible.size(), 100);
    BoundCheck worst;
    bool have = false;
    std::uint64_t violations = 0;
    for (std::size_t i = 0; i < want; ++i) {
      const std::uint32_t v = eligible[i * eligible.size() / want];
      BoundCheck c = check_cheng(mesh, solution, v, 1.0, 1.0, 2);
      if (c.failed()) ++violations;
      if (!have || c.margin() < worst.margin()) {
        worst = c;
        have = true;
      }
    }
    if (have) {
      worst.samples = want;
      rep.scalar("cheng_violations", static_cast<double>(violations));
      rep.add(worst);
    }
  }
  if (wants("window")) {
    const SphereSets sets = polar_window(mesh, solution, rec, cert.certified_c, 2);
    rep.scalar("window_applicable", sets.applicable ? 1.0 : 0.0);
    if (sets.applicable) {
      rep.scalar("window_r", sets.r_R);
      rep.scalar("sigma_U", sets.sigma_U);
      rep.scalar("sigma_V", sets.sigma_V);
      rep.scalar("sigma_W", sets.sigma_W);
      rep.scalar("diam_directions",
                 diameter_of_directions(sets, working_map, rec));
    } else {
      rep.note("window not applicable: " + sets.reason);
    }
    rep.add(check_window_lemmas(mesh, solution, working_map, rec, sets, cert.certified_c, 2));
  }
  if (wants("gauss")) {
    rep.add(check_gauss_inequality(mesh, solution, rec.y));
  }
  return rep;
}

SolveArtifacts solve_to_file(const BallMesh& mesh, const MapSpecFile& spec,
                             const SolveSpec& solve_spec, int threads,
                             const std::string& solution_path) {
  const BuiltMap bm = build_working_map(spec.map, spec.smoothing);
  const std::vector<HPoint> f_values =
      evaluate_field(bm.working, mesh, resolve_threads(threads));
  BoundaryData bd;
  bd.target_dim = bm.working.target_dim;
  bd.values = f_values;
  bd.present.assign(f_values.size(), 0);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.boundary(v)) bd.present[static_cast<std::size_t>(v)] = 1;
  SolveOptions opts;
  opts.tol = solve_spec.tol_factor * mesh.h_mesh;
  opts.max_sweeps = solve_spec.max_sweeps;
  opts.method = solve_spec.method == "gauss_seidel" ? SolveMethod::GaussSeidel
                                                    : SolveMethod::NewtonAccelerated;
  opts.initial_guess = DiscreteMap{f_values, bm.working.target_dim};
  auto [sol, report] = solve_dirichlet(mesh, bd, opts);
  save_solution(sol, mesh, bm.working.description, solution_path);
  return {report, solution_path};
}

RunResult run_experiment(const ExperimentConfig& cfg_in, const RunEnv& env) {
  ExperimentConfig cfg = cfg_in;
  if (env.seed_override) cfg.seed = *env.seed_override;
  const int threads = resolve_threads(env.threads);
  const std::string cache_dir = env.cache_dir.empty() ? env.out_dir : env.cache_dir;
  std::filesystem::create_directories(env.out_dir);

  RunResult result;
  ReportBundle& bundle = result.bundle;
  bundle.tool_version = kToolVersion;
  bundle.config_hash = config_hash(cfg);
  bundle.canonical_config = canonical_config_json(cfg);

  const BuiltMap bm = build_working_map(cfg.map, cfg.smoothing);
  const MapCertificate cert = certify_map(bm.working, cfg.certify, cfg.seed);

  {
    EstimateReport mrep;
    mrep.name = "map_certificate";
    mrep.scalar("envelope_c", cert.envelope_c);
    mrep.scalar("envelope_additive", cert.envelope_additive);
    mrep.scalar("product_A", cert.product_A);
    mrep.scalar("deriv1", cert.deriv1);
    mrep.scalar("deriv2", cert.deriv2);
    mrep.scalar("certified_c", cert.certified_c);
    mrep.scalar("pairs", static_cast<double>(cert.pairs));
    mrep.scalar("triples", static_cast<double>(cert.triples));
    mrep.note("map: " + bm.working.description);
    if (bm.smoothed) {
      // Center-of-mass containment d(f, f~) <= 2c on a deterministic sample.
      double worst = 0.0;
      const int n = 200;
      for (int i = 0; i < n; ++i) {
        Rng rng(cfg.seed + 7, static_cast<std::uint64_t>(i));
        const HPoint x = random_ball_point(rng, 2, cfg.certify.sample_radius);
        worst = std::max(worst, dist(bm.raw(x), bm.working(x)));
      }
      mrep.add(BoundCheck::upper("smoothing_reach", worst, 2.0 * bm.raw.c, 0.0, 0.0, 0.0, n));
    }
    bundle.reports.push_back(std::move(mrep));
  }

  for (double R : cfg.mesh.radii) {
    BallMesh mesh = obtain_mesh(cache_dir, R, cfg.mesh.h_mesh, cfg.mesh.cap);
    bundle.provenance.emplace_back("mesh_R" + format_double_compact(R), hex64(mesh.hash()));
    const std::vector<HPoint> f_values = evaluate_field(bm.working, mesh, threads);

    BoundaryData bd;
    bd.target_dim = bm.working.target_dim;
    bd.values = f_values;
    bd.present.assign(f_values.size(), 0);
    for (int v = 0; v < mesh.num_vertices(); ++v)
      if (mesh.boundary(v)) bd.present[static_cast<std::size_t>(v)] = 1;
    SolveOptions opts;
    opts.tol = cfg.solve.tol_factor * cfg.mesh.h_mesh;
    opts.max_sweeps = cfg.solve.max_sweeps;
    opts.method = cfg.solve.method == "gauss_seidel" ? SolveMethod::GaussSeidel
                                                     : SolveMethod::NewtonAccelerated;
    opts.initial_guess = DiscreteMap{f_values, bm.working.target_dim};
    auto [sol, srep] = solve_dirichlet(mesh, bd, opts);

    EstimateReport solve_rep;
    solve_rep.name = "solve[R=" + format_double_compact(R) + "]";
    solve_rep.scalar("sweeps", srep.sweeps);
    solve_rep.scalar("newton_steps", srep.newton_steps);
    solve_rep.scalar("final_max_displacement", srep.final_max_displacement);
    solve_rep.scalar("energy_final", srep.energy_trace.back());
    solve_rep.scalar("clamped_weights", mesh.clamped_weights);
    double worst_rise = -1e300;
    for (std::size_t i = 1; i < srep.energy_trace.size(); ++i)
      worst_rise = std::max(worst_rise, srep.energy_trace[i] - srep.energy_trace[i - 1]);
    solve_rep.add(BoundCheck::upper("energy_monotone", worst_rise, 0.0,
                                    1e-12 * std::max(1.0, srep.energy_trace.front()), 0.0, 0.0,
                                    srep.energy_trace.size()));
    solve_rep.add(BoundCheck::upper("solver_converged", srep.converged ? 0.0 : 1.0, 0.0, 0.0, 0.0,
                                    0.0, srep.sweeps));
    bundle.reports.push_back(std::move(solve_rep));

    // Checks run on the double-rounded solution, which is exactly what a
    // dump + verify pipeline sees; the two routes must report identically.
    const DiscreteMap rounded = round_to_double(sol);
    bundle.reports.push_back(
        radius_check_report(mesh, rounded, bm.working, f_values, cert, cfg.checks));

    if (cfg.output.emit_artifacts) {
      const std::string sol_path =
          env.out_dir + "/solution_R" + format_double_compact(R) + ".txt";
      save_solution(rounded, mesh, bm.working.description, sol_path);
      result.written_files.push_back(sol_path);
    }
  }

  if (std::find(cfg.checks.begin(), cfg.checks.end(), "study") != cfg.checks.end() &&
      cfg.mesh.radii.size() >= 2) {
    SolveOptions sopts;
    sopts.tol = cfg.solve.tol_factor * cfg.mesh.h_mesh;
    sopts.max_sweeps = cfg.solve.max_sweeps;
    sopts.method = cfg.solve.method == "gauss_seidel" ? SolveMethod::GaussSeidel
                                                      : SolveMethod::NewtonAccelerated;
    const ConvergenceStudy study =
        convergence_study(bm.working, cfg.mesh.radii, cfg.study.S, cfg.mesh.h_mesh, sopts,
                          cfg.mesh.cap);
    EstimateReport srep;
    srep.name = "study";
    for (const auto& row : study.rows) {
      const std::string tag = "R" + format_double_compact(row.R);
      srep.scalar("rho_sup[" + tag + "]", row.rho_sup);
      if (row.sup_diff_prev >= 0.0) srep.scalar("sup_diff[" + tag + "]", row.sup_diff_prev);
    }
    srep.scalar("sup_diffs_monotone", study.sup_diffs_monotone ? 1.0 : 0.0);
    srep.add(study.growth_check);
    if (!study.sup_diffs_monotone)
      srep.note("sup differences between consecutive radii are not monotone");
    // Study table CSV.
    std::string table = "R,rho_sup,sup_diff_prev,sweeps,converged\n";
    char buf[160];
    for (const auto& row : study.rows) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%d\n", row.R, row.rho_sup,
                    row.sup_diff_prev, row.sweeps, row.converged ? 1 : 0);
      table += buf;
    }
    write_file_atomic(env.out_dir + "/study.csv", table);
    result.written_files.push_back(env.out_dir + "/study.csv");
    bundle.reports.push_back(std::move(srep));
  }

  write_file_atomic(env.out_dir + "/report.json", bundle_to_json(bundle));
  write_file_atomic(env.out_dir + "/report.csv", bundle_to_csv(bundle));
  result.written_files.push_back(env.out_dir + "/report.json");
  result.written_files.push_back(env.out_dir + "/report.csv");
  result.exit_code = bundle.exit_code();
  return result;
}

RunResult verify_solution(const std::string& mesh_path, const std::string& solution_path,
                          const std::string& mapspec_path, const std::vector<std::string>& checks,
                          const RunEnv& env) {
  const BallMesh mesh = load_mesh(mesh_path);
  const DiscreteMap sol = load_solution(solution_path, mesh);
  const MapSpecFile spec = read_mapspec(mapspec_path);
  const BuiltMap bm = build_working_map(spec.map, spec.smoothing);
  if (sol.target_dim != bm.working.target_dim)
    throw Error("verify_solution: solution target dimension does not match the map");
  const std::vector<HPoint> f_values =
      evaluate_field(bm.working, mesh, resolve_threads(env.threads));

  RunResult result;
  ReportBundle& bundle = result.bundle;
  bundle.tool_version = kToolVersion;
  bundle.config_hash = 0;
  bundle.canonical_config = "{}";
  bundle.provenance.emplace_back("mesh", hex64(mesh.hash()));

  EstimateReport mrep;
  mrep.name = "map_certificate";
  mrep.scalar("envelope_c", spec.certificate.envelope_c);
  mrep.scalar("envelope_additive", spec.certificate.envelope_additive);
  mrep.scalar("product_A", spec.certificate.product_A);
  mrep.scalar("deriv1", spec.certificate.deriv1);
  mrep.scalar("deriv2", spec.certificate.deriv2);
  mrep.scalar("certified_c", spec.certificate.certified_c);
  mrep.scalar("pairs", static_cast<double>(spec.certificate.pairs));
  mrep.scalar("triples", static_cast<double>(spec.certificate.triples));
  mrep.note("map: " + bm.working.description);
  bundle.reports.push_back(std::move(mrep));

  bundle.reports.push_back(
      radius_check_report(mesh, sol, bm.working, f_values, spec.certificate, checks));

  std::filesystem::create_directories(env.out_dir);
  write_file_atomic(env.out_dir + "/report.json", bundle_to_json(bundle));
  write_file_atomic(env.out_dir + "/report.csv", bundle_to_csv(bundle));
  result.written_files.push_back(env.out_dir + "/report.json");
  result.written_files.push_back(env.out_dir + "/report.csv");
  result.exit_code = bundle.exit_code();
  return result;
}

}  // namespace hmlab
