#include "linkwave/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "linkwave/common.hpp"

namespace linkwave {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

// Reads one versioned CSV: checks the "# linkwave-<kind> v1" banner and the
// header row, then hands data lines to the caller.
std::vector<std::vector<std::string>> read_versioned_csv(const std::string& path,
                                                         const std::string& kind,
                                                         const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  const std::string banner = "# linkwave-" + kind + " v1";
  if (line != banner)
    throw ConfigError(path + ": expected banner '" + banner + "', got '" + line + "'");
  if (!std::getline(in, line)) throw ConfigError(path + ": missing header row");
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != header)
    throw ConfigError(path + ": expected header '" + header + "', got '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(split_csv(line));
  }
  return rows;
}

double to_number(const std::string& cell, const std::string& path, size_t row) {
  try {
    size_t end = 0;
    const double v = std::stod(cell, &end);
    if (end != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path + " data row " + std::to_string(row) + ": bad number '" + cell +
                      "'");
  }
}

}  // namespace

void write_trajectory_csv(const std::string& path, const std::vector<std::string>& link_ids,
                          const Trajectory& traj) {
  auto out = open_out(path);
  out << "# linkwave-trajectory v1\n";
  out << "step,link,q_bar,q_hat,r_bar,r_hat,n_up,n_down\n";
  for (int s = 0; s < traj.n_steps; ++s) {
    for (size_t li = 0; li < traj.links.size(); ++li) {
      const auto& ls = traj.links[li];
      // counts are reported at the end of the step interval
      out << s << ',' << link_ids[li] << ',' << fmt9(ls.q_in[s]) << ',' << fmt9(ls.q_out[s])
          << ',' << int(ls.regime_in[s]) << ',' << int(ls.regime_out[s]) << ','
          << fmt9(ls.n_up[s + 1]) << ',' << fmt9(ls.n_down[s + 1]) << '\n';
    }
  }
}

NamedTrajectory read_trajectory_csv(const std::string& path) {
  const auto rows = read_versioned_csv(path, "trajectory",
                                       "step,link,q_bar,q_hat,r_bar,r_hat,n_up,n_down");
  NamedTrajectory nt;
  std::map<std::string, int> index;
  int max_step = -1;
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != 8)
      throw ConfigError(path + " data row " + std::to_string(r) + ": expected 8 columns");
    max_step = std::max(max_step, static_cast<int>(to_number(rows[r][0], path, r)));
    if (!index.count(rows[r][1])) {
      index[rows[r][1]] = static_cast<int>(nt.link_ids.size());
      nt.link_ids.push_back(rows[r][1]);
    }
  }
  const int n_steps = max_step + 1;
  nt.traj.n_steps = n_steps;
  nt.traj.links.resize(nt.link_ids.size());
  for (auto& ls : nt.traj.links) {
    ls.q_in.assign(n_steps, 0);
    ls.q_out.assign(n_steps, 0);
    ls.regime_in.assign(n_steps, 0);
    ls.regime_out.assign(n_steps, 0);
    ls.supply_cap.assign(n_steps, 0);
    ls.demand_cap.assign(n_steps, 0);
    ls.n_up.assign(n_steps + 1, 0);
    ls.n_down.assign(n_steps + 1, 0);
  }
  std::vector<std::vector<bool>> seen(nt.link_ids.size(), std::vector<bool>(n_steps, false));
  for (size_t r = 0; r < rows.size(); ++r) {
    const int s = static_cast<int>(to_number(rows[r][0], path, r));
    if (s < 0 || s >= n_steps)
      throw ConfigError(path + " data row " + std::to_string(r) + ": step out of range");
    const int li = index[rows[r][1]];
    if (seen[li][s])
      throw ConfigError(path + ": duplicate row for link " + rows[r][1] + " step " +
                        std::to_string(s));
    seen[li][s] = true;
    auto& ls = nt.traj.links[li];
    ls.q_in[s] = to_number(rows[r][2], path, r);
    ls.q_out[s] = to_number(rows[r][3], path, r);
    ls.regime_in[s] = to_number(rows[r][4], path, r) > 0.5 ? 1 : 0;
    ls.regime_out[s] = to_number(rows[r][5], path, r) > 0.5 ? 1 : 0;
    ls.n_up[s + 1] = to_number(rows[r][6], path, r);
    ls.n_down[s + 1] = to_number(rows[r][7], path, r);
  }
  for (size_t li = 0; li < nt.link_ids.size(); ++li)
    for (int s = 0; s < n_steps; ++s)
      if (!seen[li][s])
        throw ConfigError(path + ": link " + nt.link_ids[li] + " step " + std::to_string(s) +
                          " is missing");
  return nt;
}

void write_plan_csv(const std::string& path, const std::vector<std::string>& junction_ids,
                    const SignalPlan& plan) {
  auto out = open_out(path);
  out << "# linkwave-plan v1\n";
  out << "step,junction,green_slot\n";
  if (plan.green_slot.empty()) return;
  const int n_steps = static_cast<int>(plan.green_slot[0].size());
  for (int s = 0; s < n_steps; ++s)
    for (size_t j = 0; j < junction_ids.size(); ++j)
      out << s << ',' << junction_ids[j] << ',' << int(plan.green_slot[j][s]) << '\n';
}

SignalPlan read_plan_csv(const std::string& path, const std::vector<std::string>& junction_ids,
                         int n_steps) {
  // Hand-authored plans are accepted too: the banner is optional and the
  // header may list the junction column first.
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header_seen = false;
  int step_col = 0, junction_col = 1;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line == "step,junction,green_slot") {
        step_col = 0;
        junction_col = 1;
      } else if (line == "junction,step,green_slot") {
        junction_col = 0;
        step_col = 1;
      } else {
        throw ConfigError(path + ": expected plan header, got '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    rows.push_back(split_csv(line));
  }
  if (!header_seen) throw ConfigError(path + ": missing header row");
  std::map<std::string, int> index;
  for (size_t j = 0; j < junction_ids.size(); ++j) index[junction_ids[j]] = static_cast<int>(j);
  SignalPlan plan;
  plan.green_slot.assign(junction_ids.size(), std::vector<std::uint8_t>(n_steps, 0));
  std::vector<std::vector<int>> assigned(junction_ids.size(), std::vector<int>(n_steps, -1));
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != 3)
      throw ConfigError(path + " data row " + std::to_string(r) + ": expected 3 columns");
    const int s = static_cast<int>(to_number(rows[r][step_col], path, r));
    if (s < 0 || s >= n_steps)
      throw ConfigError(path + " data row " + std::to_string(r) + ": step " +
                        std::to_string(s) + " outside 0.." + std::to_string(n_steps - 1));
    const auto it = index.find(rows[r][junction_col]);
    if (it == index.end())
      throw ConfigError(path + " data row " + std::to_string(r) + ": unknown junction " +
                        rows[r][junction_col]);
    const double raw = to_number(rows[r][2], path, r);
    if (raw != 0.0 && raw != 1.0)
      throw ConfigError(path + " data row " + std::to_string(r) +
                        ": green_slot must be 0 or 1");
    const int slot = static_cast<int>(raw);
    const int j = it->second;
    if (assigned[j][s] >= 0 && assigned[j][s] != slot)
      throw ConfigError(path + ": junction " + rows[r][junction_col] + " step " +
                        std::to_string(s) + ": both slots marked green");
    if (assigned[j][s] == slot)
      throw ConfigError(path + ": junction " + rows[r][junction_col] + " step " +
                        std::to_string(s) + ": duplicate assignment");
    assigned[j][s] = slot;
    plan.green_slot[j][s] = static_cast<std::uint8_t>(slot);
  }
  for (size_t j = 0; j < junction_ids.size(); ++j)
    for (int s = 0; s < n_steps; ++s)
      if (assigned[j][s] < 0)
        throw ConfigError(path + ": junction " + junction_ids[j] + " step " +
                          std::to_string(s) + ": no green slot assigned");
  return plan;
}

void write_grid_csv(const std::string& path, const std::vector<double>& ts,
                    const std::vector<double>& xs, const std::vector<std::vector<double>>& n) {
  auto out = open_out(path);
  out << "t,x,n # linkwave-grid v1\n";
  for (size_t i = 0; i < ts.size(); ++i)
    for (size_t k = 0; k < xs.size(); ++k)
      out << fmt9(ts[i]) << ',' << fmt9(xs[k]) << ',' << fmt9(n[i][k]) << '\n';
}

void write_shock_csv(const std::string& path, const std::vector<double>& ts,
                     const std::vector<double>& x_star) {
  auto out = open_out(path);
  out << "t,x_star # linkwave-shock v1\n";
  for (size_t i = 0; i < ts.size(); ++i)
    out << fmt9(ts[i]) << ',' << fmt9(x_star[i]) << '\n';
}

void write_metrics_json(const std::string& path, const Metrics& m) {
  json doc;
  doc["throughput_veh"] = m.throughput_veh;
  doc["occupancy_integral_veh_h"] = m.occupancy_integral_veh_h;
  doc["free_flow_baseline_veh_h"] = m.free_flow_baseline_veh_h;
  doc["total_delay_veh_h"] = m.total_delay_veh_h;
  open_out(path) << doc.dump(2) << '\n';
}

void write_manifest(const std::string& path, const ManifestInfo& info) {
  json doc;
  doc["tool"] = "linkwave";
  doc["tool_version"] = kToolVersion;
  doc["command"] = info.command;
  doc["config_path"] = info.config_path;
  doc["config_hash"] = info.config_hash;
  doc["parameters"] = info.parameters;
  if (info.seed) doc["seed"] = *info.seed;
  doc["results"] = info.results;
  doc["wall_ms"] = info.wall_ms;  // informational only, not reproducible
  open_out(path) << doc.dump(2) << '\n';
}

void write_verify_json(const std::string& path, const VerifyReport& rep,
                       const ManifestInfo& info) {
  json doc;
  doc["tool"] = "linkwave";
  doc["tool_version"] = kToolVersion;
  doc["command"] = info.command;
  doc["config_path"] = info.config_path;
  doc["config_hash"] = info.config_hash;
  doc["parameters"] = info.parameters;
  if (info.seed) doc["seed"] = *info.seed;
  doc["pass"] = rep.pass;
  doc["worst_veh_h"] = rep.worst_veh_h;
  doc["tolerance_veh_h"] = kVerifyTolVehPerHour;
  doc["links"] = json::array();
  for (const auto& l : rep.links)
    doc["links"].push_back({{"link", l.link}, {"max_abs_dev_veh_h", l.max_abs_dev_veh_h}});
  doc["wall_ms"] = info.wall_ms;
  open_out(path) << doc.dump(2) << '\n';
}

}  // namespace linkwave
