#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace linkwave {

inline constexpr const char* kToolVersion = "1.0.0";

// Tolerances used across the toolkit. Values are part of the observable
// behaviour (tests pin them), so they live here rather than in each module.
inline constexpr double kTieEps = 1e-9;      // vehicles; regime tie comparisons
inline constexpr double kMilpEps = 1e-4;     // vehicles; strict-inequality offset in MILP rows
inline constexpr double kFeasTol = 1e-7;     // LP feasibility tolerance
inline constexpr double kIntTol = 1e-6;      // integrality tolerance
inline constexpr double kGapTol = 1e-4;      // branch-and-bound relative gap
inline constexpr double kVerifyTolVehPerHour = 1e-5;  // simulate-vs-model flow comparison
inline constexpr double kShockBisectTolMiles = 1e-6;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulationError : std::runtime_error {
  std::string link;
  int step;
  SimulationError(std::string link_id, int step_idx, const std::string& what)
      : std::runtime_error(what), link(std::move(link_id)), step(step_idx) {}
};

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed formatting for every number the toolkit writes: 9 significant digits.
inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Full-precision formatting for machine round trips (MPS, solution files).
inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// FNV-1a 64-bit content fingerprint. Used in run manifests to tie outputs to
// the exact config bytes; it is a fingerprint, not a cryptographic hash.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes);

// Portable deterministic uniform draw on [lo, hi) from a 64-bit generator
// output. std::uniform_real_distribution is not bit-stable across standard
// library implementations, so scaling is done explicitly.
template <typename Rng>
double uniform_draw(Rng& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + unit * (hi - lo);
}

}  // namespace linkwave
