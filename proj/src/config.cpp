#include "linkwave/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "linkwave/common.hpp"

namespace linkwave {

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError(ctx + ": missing numeric field '" + key + "'");
  return j[key].get<double>();
}

std::string require_string(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_string())
    throw ConfigError(ctx + ": missing string field '" + key + "'");
  return j[key].get<std::string>();
}

LinkRole parse_role(const std::string& s, const std::string& ctx) {
  if (s == "source") return LinkRole::Source;
  if (s == "internal") return LinkRole::Internal;
  if (s == "sink") return LinkRole::Sink;
  throw ConfigError(ctx + ": role must be source, internal or sink, got '" + s + "'");
}

const char* role_name(LinkRole r) {
  switch (r) {
    case LinkRole::Source: return "source";
    case LinkRole::Internal: return "internal";
    case LinkRole::Sink: return "sink";
  }
  return "?";
}

// One column per source link, one row per step, header line = link ids.
std::vector<double> column_from_csv(const std::string& csv_path, const std::string& link_id,
                                    int n_steps) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open inflow csv " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(csv_path + ": empty inflow csv");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      out.push_back(cell);
    }
    return out;
  };
  const auto header = split(line);
  int col = -1;
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == link_id) col = static_cast<int>(i);
  if (col < 0) throw ConfigError(csv_path + ": no column titled " + link_id);
  std::vector<double> values;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (col >= static_cast<int>(cells.size()))
      throw ConfigError(csv_path + " row " + std::to_string(row) + ": too few columns");
    try {
      values.push_back(std::stod(cells[col]));
    } catch (const std::exception&) {
      throw ConfigError(csv_path + " row " + std::to_string(row) + ": bad number '" +
                        cells[col] + "'");
    }
    ++row;
  }
  if (static_cast<int>(values.size()) != n_steps)
    throw ConfigError(csv_path + ": column " + link_id + " has " +
                      std::to_string(values.size()) + " rows, expected " +
                      std::to_string(n_steps));
  return values;
}

ObjectiveKind parse_objective(const std::string& s) {
  if (s == "time_weighted_throughput") return ObjectiveKind::TimeWeightedThroughput;
  if (s == "throughput") return ObjectiveKind::Throughput;
  if (s == "soft_bounded_shock") return ObjectiveKind::SoftBoundedShock;
  throw ConfigError("options.objective: unknown objective '" + s + "'");
}

const char* objective_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::TimeWeightedThroughput: return "time_weighted_throughput";
    case ObjectiveKind::Throughput: return "throughput";
    case ObjectiveKind::SoftBoundedShock: return "soft_bounded_shock";
  }
  return "?";
}

}  // namespace

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << bytes;
}

ScenarioConfig parse_config(const std::string& text, const std::string& path) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": not valid JSON: " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "linkwave-network-v1")
    throw ConfigError(path + ": expected a JSON object with format linkwave-network-v1");

  ScenarioConfig cfg;
  cfg.path = path;
  cfg.raw_bytes = text;
  const auto dir = std::filesystem::path(path).parent_path();

  if (!doc.contains("grid") || !doc["grid"].is_object())
    throw ConfigError(path + ": missing grid section");
  cfg.grid.dt_hours = require_number(doc["grid"], "dt_hours", "grid");
  cfg.grid.n_steps = static_cast<int>(require_number(doc["grid"], "n_steps", "grid"));

  if (!doc.contains("links") || !doc["links"].is_array())
    throw ConfigError(path + ": missing links section");
  for (const auto& lj : doc["links"]) {
    LinkSpec l;
    l.id = require_string(lj, "id", "links[]");
    const std::string ctx = "link " + l.id;
    l.length_miles = require_number(lj, "length_miles", ctx);
    l.fd.free_speed_mph = require_number(lj, "k_mph", ctx);
    l.fd.wave_speed_mph = require_number(lj, "w_mph", ctx);
    l.fd.jam_density_vpm = require_number(lj, "rho_jam_vpm", ctx);
    l.role = parse_role(require_string(lj, "role", ctx), ctx);
    cfg.net.links.push_back(std::move(l));
  }

  if (doc.contains("junctions")) {
    if (!doc["junctions"].is_array()) throw ConfigError(path + ": junctions must be an array");
    for (const auto& jj : doc["junctions"]) {
      JunctionSpec j;
      j.id = require_string(jj, "id", "junctions[]");
      const std::string ctx = "junction " + j.id;
      for (const char* key : {"incoming", "outgoing"}) {
        if (!jj.contains(key) || !jj[key].is_array() || jj[key].size() != 2)
          throw ConfigError(ctx + ": '" + key + "' must list exactly 2 link ids");
      }
      for (int s = 0; s < 2; ++s) {
        j.incoming[s] = jj["incoming"][s].get<std::string>();
        j.outgoing[s] = jj["outgoing"][s].get<std::string>();
      }
      if (jj.contains("alpha")) {
        const auto& a = jj["alpha"];
        if (!a.is_array() || a.size() != 2 || !a[0].is_array() || a[0].size() != 2 ||
            !a[1].is_array() || a[1].size() != 2)
          throw ConfigError(ctx + ": alpha must be a 2x2 matrix");
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) j.alpha[r][c] = a[r][c].get<double>();
      }
      cfg.net.junctions.push_back(std::move(j));
    }
  }

  if (doc.contains("inflows")) {
    if (!doc["inflows"].is_array()) throw ConfigError(path + ": inflows must be an array");
    for (const auto& fj : doc["inflows"]) {
      InflowProfile p;
      p.link = require_string(fj, "link", "inflows[]");
      const std::string ctx = "inflow " + p.link;
      const int sources = fj.contains("values") + fj.contains("csv") + fj.contains("random");
      if (sources != 1)
        throw ConfigError(ctx + ": give exactly one of values, csv or random");
      if (fj.contains("values")) {
        if (!fj["values"].is_array()) throw ConfigError(ctx + ": values must be an array");
        for (const auto& v : fj["values"]) p.values.push_back(v.get<double>());
      } else if (fj.contains("csv")) {
        const auto csv = (dir / fj["csv"].get<std::string>()).string();
        p.values = column_from_csv(csv, p.link, cfg.grid.n_steps);
      } else {
        const auto& r = fj["random"];
        p.randomized = true;
        p.random_low = require_number(r, "low", ctx + ".random");
        p.random_high = require_number(r, "high", ctx + ".random");
      }
      cfg.net.inflows.push_back(std::move(p));
    }
  }

  if (doc.contains("options")) {
    const auto& oj = doc["options"];
    if (!oj.is_object()) throw ConfigError(path + ": options must be an object");
    if (oj.contains("objective"))
      cfg.options.objective = parse_objective(oj["objective"].get<std::string>());
    if (oj.contains("eps_veh")) cfg.options.eps_veh = oj["eps_veh"].get<double>();
    if (oj.contains("min_green_steps"))
      cfg.options.min_green_steps = oj["min_green_steps"].get<int>();
    if (oj.contains("bounded_shock")) {
      for (const auto& bj : oj["bounded_shock"]) {
        BoundedShockSpec spec;
        spec.link = require_string(bj, "link", "options.bounded_shock[]");
        spec.c_miles = require_number(bj, "c_miles", "options.bounded_shock[]");
        cfg.options.bounded_shock.push_back(spec);
      }
    }
    if (oj.contains("big_m")) {
      for (const auto& [key, value] : oj["big_m"].items()) {
        if (key != "regime" && key != "flow" && key != "min")
          throw ConfigError("options.big_m: unknown family '" + key + "'");
        cfg.options.big_m_overrides[key] = value.get<double>();
      }
    }
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  return parse_config(read_file_bytes(path), path);
}

std::string config_to_json(const Network& net, const TimeGrid& grid, const MilpOptions& opt) {
  json doc;
  doc["format"] = "linkwave-network-v1";
  doc["grid"] = {{"dt_hours", grid.dt_hours}, {"n_steps", grid.n_steps}};
  doc["links"] = json::array();
  for (const auto& l : net.links) {
    doc["links"].push_back({{"id", l.id},
                            {"length_miles", l.length_miles},
                            {"k_mph", l.fd.free_speed_mph},
                            {"w_mph", l.fd.wave_speed_mph},
                            {"rho_jam_vpm", l.fd.jam_density_vpm},
                            {"role", role_name(l.role)}});
  }
  doc["junctions"] = json::array();
  for (const auto& j : net.junctions) {
    doc["junctions"].push_back(
        {{"id", j.id},
         {"incoming", {j.incoming[0], j.incoming[1]}},
         {"outgoing", {j.outgoing[0], j.outgoing[1]}},
         {"alpha", {{j.alpha[0][0], j.alpha[0][1]}, {j.alpha[1][0], j.alpha[1][1]}}}});
  }
  doc["inflows"] = json::array();
  for (const auto& p : net.inflows) {
    json fj{{"link", p.link}};
    if (p.randomized && p.values.empty())
      fj["random"] = {{"low", p.random_low}, {"high", p.random_high}};
    else
      fj["values"] = p.values;
    doc["inflows"].push_back(fj);
  }
  json oj;
  oj["objective"] = objective_name(opt.objective);
  if (opt.eps_veh != 1e-4) oj["eps_veh"] = opt.eps_veh;
  if (opt.min_green_steps > 0) oj["min_green_steps"] = opt.min_green_steps;
  if (!opt.bounded_shock.empty()) {
    oj["bounded_shock"] = json::array();
    for (const auto& s : opt.bounded_shock)
      oj["bounded_shock"].push_back({{"link", s.link}, {"c_miles", s.c_miles}});
  }
  if (!opt.big_m_overrides.empty()) {
    json bm;
    for (const auto& [k, v] : opt.big_m_overrides) bm[k] = v;
    oj["big_m"] = bm;
  }
  doc["options"] = oj;
  return doc.dump(2) + "\n";
}

}  // namespace linkwave
