#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linkwave/kinematics.hpp"

namespace linkwave {

// Versioned CSV formats. Every file starts with a "# linkwave-<kind> v1"
// line so readers can reject the wrong kind early. Numbers are written with
// 9 significant digits.

void write_trajectory_csv(const std::string& path, const std::vector<std::string>& link_ids,
                          const Trajectory& traj);

struct NamedTrajectory {
  std::vector<std::string> link_ids;
  Trajectory traj;
};
NamedTrajectory read_trajectory_csv(const std::string& path);

void write_plan_csv(const std::string& path, const std::vector<std::string>& junction_ids,
                    const SignalPlan& plan);

// Validates coverage: every (junction, step) pair assigned exactly once,
// green_slot in {0, 1}. Conflicting duplicate rows are reported as both
// slots green at that junction/step.
SignalPlan read_plan_csv(const std::string& path, const std::vector<std::string>& junction_ids,
                         int n_steps);

// Moskowitz surface samples (t, x, n) and the shock-position series.
void write_grid_csv(const std::string& path, const std::vector<double>& ts,
                    const std::vector<double>& xs, const std::vector<std::vector<double>>& n);
void write_shock_csv(const std::string& path, const std::vector<double>& ts,
                     const std::vector<double>& x_star);

void write_metrics_json(const std::string& path, const Metrics& m);

// Per-command provenance record. wall_ms is informational and excluded from
// any bit-reproducibility comparison.
struct ManifestInfo {
  std::string command;
  std::string config_path;
  std::string config_hash;
  std::map<std::string, std::string> parameters;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> results;
  double wall_ms = 0;
};
void write_manifest(const std::string& path, const ManifestInfo& info);

struct LinkDeviation {
  std::string link;
  double max_abs_dev_veh_h = 0;  // worst |q| gap across both boundary series
};
struct VerifyReport {
  std::vector<LinkDeviation> links;
  double worst_veh_h = 0;
  bool pass = false;
};
// verify.json doubles as the command's provenance record so a verify run can
// share a directory with the artifacts it is checking.
void write_verify_json(const std::string& path, const VerifyReport& rep,
                       const ManifestInfo& info);

}  // namespace linkwave
