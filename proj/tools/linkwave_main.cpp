// linkwave: signal-plan simulation and optimization for link-based
// kinematic wave networks. Subcommands: validate, simulate, optimize,
// import, verify, grid. Exit codes: 0 success, 1 usage, 2 validation or
// simulation error, 3 infeasible model, 4 verification failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "linkwave/config.hpp"
#include "linkwave/io.hpp"
#include "linkwave/solver.hpp"

namespace fs = std::filesystem;
using namespace linkwave;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerifyFail = 4;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::vector<std::string> link_ids(const Network& net) {
  std::vector<std::string> ids;
  ids.reserve(net.links.size());
  for (const auto& l : net.links) ids.push_back(l.id);
  return ids;
}

std::vector<std::string> junction_ids(const Network& net) {
  std::vector<std::string> ids;
  ids.reserve(net.junctions.size());
  for (const auto& j : net.junctions) ids.push_back(j.id);
  return ids;
}

bool has_random_inflows(const Network& net) {
  for (const auto& p : net.inflows)
    if (p.randomized) return true;
  return false;
}

ManifestInfo manifest_base(const std::string& command, const ScenarioConfig& cfg) {
  ManifestInfo info;
  info.command = command;
  info.config_path = cfg.path;
  info.config_hash = fnv1a64_hex(cfg.raw_bytes);
  return info;
}

void require_valid(const ScenarioConfig& cfg) {
  const ValidationReport rep = validate_network(cfg.net, cfg.grid);
  if (!rep.ok()) throw ConfigError("invalid scenario:\n" + rep.to_string());
}

int run_validate(const std::string& config_path, const std::string& out_dir) {
  const Timer timer;
  const ScenarioConfig cfg = load_config(config_path);
  const ValidationReport rep = validate_network(cfg.net, cfg.grid);

  std::printf("network: %zu links, %zu junctions, %d steps of %s h\n",
              cfg.net.links.size(), cfg.net.junctions.size(), cfg.grid.n_steps,
              fmt9(cfg.grid.dt_hours).c_str());
  for (const auto& l : cfg.net.links) {
    std::string off = "n/a (invalid)";
    try {
      const Offsets o = offsets(l, cfg.grid);
      off = "forward=" + std::to_string(o.forward) + " backward=" + std::to_string(o.backward);
    } catch (const ConfigError&) {
    }
    std::printf("link %s: capacity %s veh/h, jam storage %s veh, offsets %s\n",
                l.id.c_str(), fmt9(capacity(l.fd)).c_str(),
                fmt9(l.jam_storage_veh()).c_str(), off.c_str());
  }
  if (rep.ok()) std::printf("validation: ok\n");
  else std::printf("validation: %zu issue(s)\n%s", rep.issues.size(), rep.to_string().c_str());

  fs::create_directories(out_dir);
  ManifestInfo info = manifest_base("validate", cfg);
  info.results["ok"] = rep.ok() ? "true" : "false";
  info.results["issues"] = std::to_string(rep.issues.size());
  info.wall_ms = timer.ms();
  write_manifest((fs::path(out_dir) / "manifest.json").string(), info);
  return rep.ok() ? 0 : kExitValidation;
}

int run_simulate(const std::string& config_path, const std::string& plan_path,
                 const std::string& out_dir, std::uint64_t seed) {
  const Timer timer;
  ScenarioConfig cfg = load_config(config_path);
  require_valid(cfg);
  const bool seeded = has_random_inflows(cfg.net);
  materialize_inflows(cfg.net, cfg.grid, seed);

  const auto jids = junction_ids(cfg.net);
  const SignalPlan plan = read_plan_csv(plan_path, jids, cfg.grid.n_steps);
  const Trajectory traj = simulate(cfg.net, cfg.grid, plan);
  const Metrics m = metrics(cfg.net, cfg.grid, traj);

  fs::create_directories(out_dir);
  write_trajectory_csv((fs::path(out_dir) / "trajectory.csv").string(), link_ids(cfg.net),
                       traj);
  write_metrics_json((fs::path(out_dir) / "metrics.json").string(), m);

  ManifestInfo info = manifest_base("simulate", cfg);
  info.parameters["plan_file"] = plan_path;
  if (seeded) info.seed = seed;
  info.results["throughput_veh"] = fmt9(m.throughput_veh);
  info.results["occupancy_integral_veh_h"] = fmt9(m.occupancy_integral_veh_h);
  info.results["total_delay_veh_h"] = fmt9(m.total_delay_veh_h);
  info.wall_ms = timer.ms();
  write_manifest((fs::path(out_dir) / "manifest.json").string(), info);

  std::printf("simulated %d steps: throughput %s veh, delay %s veh*h\n", cfg.grid.n_steps,
              fmt9(m.throughput_veh).c_str(), fmt9(m.total_delay_veh_h).c_str());
  return 0;
}

int write_solution_outputs(const ScenarioConfig& cfg, const MilpModel& model,
                           const MilpSolution& sol, const std::string& out_dir,
                           ManifestInfo& info, const Timer& timer) {
  const SignalPlan plan = extract_signal_plan(model, sol.x);
  const Trajectory traj = extract_flows(model, sol.x);
  write_plan_csv((fs::path(out_dir) / "plan.csv").string(), junction_ids(cfg.net), plan);
  write_trajectory_csv((fs::path(out_dir) / "flows.csv").string(), link_ids(cfg.net), traj);
  info.results["status"] = milp_status_name(sol.status);
  info.results["objective"] = fmt9(sol.objective);
  info.results["best_bound"] = fmt9(sol.best_bound);
  info.results["gap"] = fmt9(sol.gap);
  info.results["nodes"] = std::to_string(sol.nodes);
  info.wall_ms = timer.ms();
  write_manifest((fs::path(out_dir) / "manifest.json").string(), info);
  std::printf("%s: objective %s, bound %s, gap %s (%ld nodes)\n",
              milp_status_name(sol.status), fmt9(sol.objective).c_str(),
              fmt9(sol.best_bound).c_str(), fmt9(sol.gap).c_str(), sol.nodes);
  return 0;
}

int run_optimize(const std::string& config_path, const std::string& out_dir,
                 const std::string& solver, double time_limit, double gap_tol,
                 std::uint64_t seed) {
  const Timer timer;
  ScenarioConfig cfg = load_config(config_path);
  require_valid(cfg);
  const bool seeded = has_random_inflows(cfg.net);
  materialize_inflows(cfg.net, cfg.grid, seed);

  const MilpModel model = build_model(cfg.net, cfg.grid, cfg.options);
  fs::create_directories(out_dir);
  ManifestInfo info = manifest_base("optimize", cfg);
  info.parameters["solver"] = solver;
  if (seeded) info.seed = seed;

  if (solver == "mps-only") {
    const std::string mps_path = (fs::path(out_dir) / "model.mps").string();
    export_mps(model, mps_path);
    info.results["mps_file"] = "model.mps";
    info.results["columns"] = std::to_string(model.cols.size());
    info.results["binaries"] = std::to_string(count_binary_columns(model));
    info.results["rows"] = std::to_string(model.rows.size());
    info.wall_ms = timer.ms();
    write_manifest((fs::path(out_dir) / "manifest.json").string(), info);
    std::printf("wrote %s: %zu columns (%d binary), %zu rows\n", mps_path.c_str(),
                model.cols.size(), count_binary_columns(model), model.rows.size());
    return 0;
  }

  info.parameters["time_limit_s"] = fmt9(time_limit);
  info.parameters["gap_tol"] = fmt9(gap_tol);
  BnbParams params;
  params.time_limit_s = time_limit;
  params.gap_tol = gap_tol;
  const BnbHooks hooks = make_simulation_hooks(model, cfg.net, cfg.grid);
  const MilpSolution sol = branch_and_bound(model, params, &hooks);

  if (sol.status == MilpStatus::Infeasible) {
    info.results["status"] = milp_status_name(sol.status);
    info.results["detail"] = sol.detail;
    info.wall_ms = timer.ms();
    write_manifest((fs::path(out_dir) / "manifest.json").string(), info);
    std::fprintf(stderr, "infeasible model (%s)\n", sol.detail.c_str());
    return kExitInfeasible;
  }
  if (sol.x.empty()) {
    info.results["status"] = milp_status_name(sol.status);
    info.results["detail"] = sol.detail;
    info.wall_ms = timer.ms();
    write_manifest((fs::path(out_dir) / "manifest.json").string(), info);
    std::fprintf(stderr, "no incumbent within limits (%s)\n", sol.detail.c_str());
    return kExitValidation;
  }
  return write_solution_outputs(cfg, model, sol, out_dir, info, timer);
}

int run_import(const std::string& config_path, const std::string& solution_path,
               const std::string& out_dir, std::uint64_t seed) {
  const Timer timer;
  ScenarioConfig cfg = load_config(config_path);
  require_valid(cfg);
  const bool seeded = has_random_inflows(cfg.net);
  materialize_inflows(cfg.net, cfg.grid, seed);

  const MilpModel model = build_model(cfg.net, cfg.grid, cfg.options);
  fs::create_directories(out_dir);
  ManifestInfo info = manifest_base("import", cfg);
  info.parameters["solution_file"] = solution_path;
  if (seeded) info.seed = seed;

  const MilpSolution sol = import_solution(model, solution_path);
  if (sol.status == MilpStatus::Infeasible) {
    info.results["status"] = milp_status_name(sol.status);
    info.wall_ms = timer.ms();
    write_manifest((fs::path(out_dir) / "manifest.json").string(), info);
    std::fprintf(stderr, "imported solution declares the model infeasible\n");
    return kExitInfeasible;
  }
  return write_solution_outputs(cfg, model, sol, out_dir, info, timer);
}

int run_verify(const std::string& config_path, const std::string& plan_path,
               const std::string& flows_path, const std::string& out_dir,
               std::uint64_t seed) {
  const Timer timer;
  ScenarioConfig cfg = load_config(config_path);
  require_valid(cfg);
  const bool seeded = has_random_inflows(cfg.net);
  materialize_inflows(cfg.net, cfg.grid, seed);

  const auto jids = junction_ids(cfg.net);
  const SignalPlan plan = read_plan_csv(plan_path, jids, cfg.grid.n_steps);
  const NamedTrajectory flows = read_trajectory_csv(flows_path);
  if (flows.traj.n_steps != cfg.grid.n_steps)
    throw ConfigError("flows file has " + std::to_string(flows.traj.n_steps) +
                      " steps, expected " + std::to_string(cfg.grid.n_steps));

  const Trajectory resim = simulate(cfg.net, cfg.grid, plan);

  VerifyReport rep;
  std::string worst_cell;
  for (size_t i = 0; i < cfg.net.links.size(); ++i) {
    const std::string& id = cfg.net.links[i].id;
    const auto it = std::find(flows.link_ids.begin(), flows.link_ids.end(), id);
    if (it == flows.link_ids.end())
      throw ConfigError("flows file is missing link " + id);
    const int fi = static_cast<int>(it - flows.link_ids.begin());
    const LinkSeries& a = flows.traj.links[fi];
    const LinkSeries& b = resim.links[i];
    LinkDeviation dev{id, 0};
    for (int s = 0; s < cfg.grid.n_steps; ++s) {
      const double din = std::fabs(a.q_in[s] - b.q_in[s]);
      const double dout = std::fabs(a.q_out[s] - b.q_out[s]);
      if (din > dev.max_abs_dev_veh_h) dev.max_abs_dev_veh_h = din;
      if (dout > dev.max_abs_dev_veh_h) dev.max_abs_dev_veh_h = dout;
      const double cell = std::max(din, dout);
      if (cell > rep.worst_veh_h) {
        rep.worst_veh_h = cell;
        worst_cell = "link " + id + (din >= dout ? " q_bar" : " q_hat") + " step " +
                     std::to_string(s);
      }
    }
    rep.links.push_back(dev);
  }
  rep.pass = rep.worst_veh_h <= kVerifyTolVehPerHour;

  fs::create_directories(out_dir);
  ManifestInfo info = manifest_base("verify", cfg);
  info.parameters["plan_file"] = plan_path;
  info.parameters["flows_file"] = flows_path;
  if (seeded) info.seed = seed;
  info.wall_ms = timer.ms();
  write_verify_json((fs::path(out_dir) / "verify.json").string(), rep, info);

  for (const auto& d : rep.links)
    std::printf("link %s: max |dq| %s veh/h\n", d.link.c_str(),
                fmt9(d.max_abs_dev_veh_h).c_str());
  if (rep.pass) {
    std::printf("PASS (worst |dq| %s veh/h <= %s)\n", fmt9(rep.worst_veh_h).c_str(),
                fmt9(kVerifyTolVehPerHour).c_str());
    return 0;
  }
  std::printf("FAIL: %s deviates by %s veh/h (tolerance %s)\n", worst_cell.c_str(),
              fmt9(rep.worst_veh_h).c_str(), fmt9(kVerifyTolVehPerHour).c_str());
  return kExitVerifyFail;
}

int run_grid(const std::string& config_path, const std::string& flows_path,
             const std::string& link, int nt, int nx, const std::string& out_dir) {
  const Timer timer;
  const ScenarioConfig cfg = load_config(config_path);
  require_valid(cfg);
  if (nt < 2 || nx < 2) throw ConfigError("nt and nx must both be at least 2");

  NamedTrajectory flows = read_trajectory_csv(flows_path);
  if (flows.traj.n_steps != cfg.grid.n_steps)
    throw ConfigError("flows file has " + std::to_string(flows.traj.n_steps) +
                      " steps, expected " + std::to_string(cfg.grid.n_steps));
  flows.traj.dt_hours = cfg.grid.dt_hours;

  const int li = cfg.net.link_index(link);
  if (li < 0) throw ConfigError("unknown link id " + link);
  const LinkSpec& spec = cfg.net.links[li];
  const auto fit = std::find(flows.link_ids.begin(), flows.link_ids.end(), link);
  if (fit == flows.link_ids.end()) throw ConfigError("flows file is missing link " + link);

  const CumulativeCurves curves =
      curves_of(flows.traj, static_cast<int>(fit - flows.link_ids.begin()));
  const double horizon = cfg.grid.horizon_hours();

  std::vector<double> ts(nt), xs(nx), x_star(nt);
  for (int i = 0; i < nt; ++i) ts[i] = horizon * i / (nt - 1);
  for (int j = 0; j < nx; ++j)
    xs[j] = spec.a() + (spec.b() - spec.a()) * j / (nx - 1);
  std::vector<std::vector<double>> n(nt, std::vector<double>(nx));
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < nx; ++j) n[i][j] = moskowitz(curves, spec, ts[i], xs[j]);
    x_star[i] = shock_position(curves, spec, ts[i]);
  }

  fs::create_directories(out_dir);
  write_grid_csv((fs::path(out_dir) / "grid.csv").string(), ts, xs, n);
  write_shock_csv((fs::path(out_dir) / "shock.csv").string(), ts, x_star);
  ManifestInfo info = manifest_base("grid", cfg);
  info.parameters["flows_file"] = flows_path;
  info.parameters["link"] = link;
  info.parameters["nt"] = std::to_string(nt);
  info.parameters["nx"] = std::to_string(nx);
  info.results["grid_file"] = "grid.csv";
  info.results["shock_file"] = "shock.csv";
  info.wall_ms = timer.ms();
  write_manifest((fs::path(out_dir) / "manifest.json").string(), info);
  std::printf("wrote %dx%d surface and shock series for link %s\n", nt, nx, link.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"link-based kinematic wave signal optimization toolkit", "linkwave"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path, plan_path, flows_path, solution_path, link;
  std::string out_dir = ".";
  std::string solver = "embedded";
  double time_limit = 300, gap_tol = kGapTol;
  std::uint64_t seed = 0;
  int nt = 0, nx = 0;
  int rc = 0;

  auto* validate = app.add_subcommand("validate", "check a scenario file and report offsets");
  validate->add_option("config", config_path, "scenario JSON")->required();
  validate->add_option("--out-dir", out_dir, "manifest directory (default .)");
  validate->callback([&] { rc = run_validate(config_path, out_dir); });

  auto* simulate = app.add_subcommand("simulate", "run a signal plan through the simulator");
  simulate->add_option("config", config_path, "scenario JSON")->required();
  simulate->add_option("plan", plan_path, "plan CSV")->required();
  simulate->add_option("out_dir", out_dir, "output directory")->required();
  simulate->add_option("--seed", seed, "seed for randomized inflows");
  simulate->callback([&] { rc = run_simulate(config_path, plan_path, out_dir, seed); });

  auto* optimize = app.add_subcommand("optimize", "build and solve the signal MILP");
  optimize->add_option("config", config_path, "scenario JSON")->required();
  optimize->add_option("out_dir", out_dir, "output directory")->required();
  optimize->add_option("--solver", solver, "embedded | mps-only")
      ->check(CLI::IsMember({"embedded", "mps-only"}));
  optimize->add_option("--time-limit", time_limit, "seconds (default 300)");
  optimize->add_option("--gap-tol", gap_tol, "relative gap target");
  optimize->add_option("--seed", seed, "seed for randomized inflows");
  optimize->callback(
      [&] { rc = run_optimize(config_path, out_dir, solver, time_limit, gap_tol, seed); });

  auto* import_cmd = app.add_subcommand("import", "re-check an external solution file");
  import_cmd->add_option("config", config_path, "scenario JSON")->required();
  import_cmd->add_option("solution", solution_path, "column/value solution file")->required();
  import_cmd->add_option("out_dir", out_dir, "output directory")->required();
  import_cmd->add_option("--seed", seed, "seed for randomized inflows");
  import_cmd->callback([&] { rc = run_import(config_path, solution_path, out_dir, seed); });

  auto* verify = app.add_subcommand("verify", "re-simulate a plan and compare flows");
  verify->add_option("config", config_path, "scenario JSON")->required();
  verify->add_option("plan", plan_path, "plan CSV")->required();
  verify->add_option("flows", flows_path, "flows CSV")->required();
  verify->add_option("--out-dir", out_dir, "report directory (default .)");
  verify->add_option("--seed", seed, "seed for randomized inflows");
  verify->callback(
      [&] { rc = run_verify(config_path, plan_path, flows_path, out_dir, seed); });

  auto* grid = app.add_subcommand("grid", "sample the Moskowitz surface of one link");
  grid->add_option("config", config_path, "scenario JSON")->required();
  grid->add_option("flows", flows_path, "flows CSV")->required();
  grid->add_option("link", link, "link id")->required();
  grid->add_option("nt", nt, "time samples")->required();
  grid->add_option("nx", nx, "space samples")->required();
  grid->add_option("--out-dir", out_dir, "output directory (default .)");
  grid->callback([&] { rc = run_grid(config_path, flows_path, link, nt, nx, out_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const SimulationError& e) {
    std::fprintf(stderr, "simulation error: %s\n", e.what());
    return kExitValidation;
  } catch (const SolveError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return rc;
}
