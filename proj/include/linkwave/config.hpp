#pragma once

#include <string>

#include "linkwave/milp.hpp"
#include "linkwave/network.hpp"

namespace linkwave {

// One loaded scenario file: network + grid + solve options, plus the exact
// bytes read (hashed into run manifests for reproducibility).
struct ScenarioConfig {
  Network net;
  TimeGrid grid;
  MilpOptions options;
  std::string path;
  std::string raw_bytes;
};

// Parses a linkwave-network-v1 JSON document. `path` is used for error
// messages and for resolving relative CSV references.
ScenarioConfig parse_config(const std::string& text, const std::string& path);
ScenarioConfig load_config(const std::string& path);

// Serializes a network/grid/options triple back to the same JSON dialect
// (used by the scenario generator and CLI round-trip tests). Randomized
// inflow profiles are written as their random specification, materialized
// ones as explicit values.
std::string config_to_json(const Network& net, const TimeGrid& grid, const MilpOptions& opt);

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace linkwave
