#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "linkwave/kinematics.hpp"
#include "linkwave/network.hpp"

namespace linkwave {

// Column families. RBar/RHat/Xi/Eta/U are the binary kinds; everything else
// is continuous.
enum class Var {
  QBar,     // entrance flow, per link/step
  QHat,     // exit flow, per link/step
  RBar,     // entrance regime bit
  RHat,     // exit regime bit
  QBarMax,  // entrance supply cap, junction-fed links only
  QHatMax,  // exit demand cap
  Zeta,     // linearized min discharge, per junction slot/step
  Beta,     // linearized min of the supply ratios
  Xi,       // selector binary inside Beta
  Eta,      // selector binary inside Zeta
  U,        // signal indicator, per junction slot/step
  ShockSlack  // soft bounded-shock residual, per constrained link/step
};

bool var_is_binary(Var v);

struct VarTag {
  Var kind;
  int entity = -1;  // link index for link kinds, junction index otherwise
  int slot = -1;    // junction slot, -1 for link kinds
  int step = -1;
};

class VarRegistry {
 public:
  int add(const VarTag& tag);             // returns the new column index
  int lookup(const VarTag& tag) const;    // -1 if absent
  const VarTag& tag(int col) const { return tags_[col]; }
  int size() const { return static_cast<int>(tags_.size()); }

 private:
  std::vector<VarTag> tags_;
  std::map<std::tuple<int, int, int, int>, int> index_;
};

enum class RowFamily {
  RegimeUp,     // ranged: eps <= G + M r_bar <= M, G = N_down_lag - N_up + jam storage
  RegimeDown,   // ranged: eps - M <= H - M r_hat <= 0, H = N_up_lag - N_down
  SupplyCap,    // q_bar_max + M r_bar >= C
  SupplyTie,    // |q_bar_max - q_hat_lag| <= M (1 - r_bar), two rows
  DemandCap,    // q_hat_max - M r_hat >= C - M
  DemandTie,    // |q_hat_max - q_bar_lag| <= M r_hat, two rows
  Gate,         // q_hat <= M u
  GateTie,      // q_hat <= zeta and q_hat >= zeta - M (1 - u), two rows
  MinBeta,      // beta pinned to the smaller supply ratio via xi, four rows
  MinZeta,      // zeta pinned to min(demand cap, beta) via eta, four rows
  Turning,      // q_bar_out = sum_i alpha_i q_hat_i
  Exclusive,    // u_0 + u_1 = 1
  SinkTie,      // terminal links discharge their demand cap
  TransitLower, // N_down(t) <= N_up(t - L/k): no faster-than-free-flow exit
  StorageCap,   // N_up(t) <= N_down(t - L/w) + jam storage: no overfill
  BoundedShock, // hard mid-link storage bound
  MinGreen      // optional minimum green running time
};

const char* row_family_name(RowFamily f);

struct MilpRow {
  std::string name;
  RowFamily family;
  double lo;  // -inf allowed
  double hi;  // +inf allowed
  std::vector<std::pair<int, double>> terms;  // (column, coefficient)
  // big-M audit metadata. deact_lo/deact_hi name the binary value at which
  // that side is meant to be slack for every physical assignment (-1: side
  // carries no padding).
  int big_m_col = -1;
  double big_m_value = 0;
  int deact_lo = -1;
  int deact_hi = -1;
};

struct MilpColumn {
  double lo = 0;
  double hi = 0;
  bool binary = false;
  double objective = 0;  // sense is always maximize
};

enum class ObjectiveKind { TimeWeightedThroughput, Throughput, SoftBoundedShock };

struct BoundedShockSpec {
  std::string link;
  double c_miles = 0;
};

struct MilpOptions {
  ObjectiveKind objective = ObjectiveKind::TimeWeightedThroughput;
  std::vector<BoundedShockSpec> bounded_shock;
  double eps_veh = 1e-4;
  int min_green_steps = 0;  // 0 disables the running-time rows
  // optional per-family big-M overrides, keys: "regime", "flow", "min"
  std::map<std::string, double> big_m_overrides;
};

// Per-link metadata the model carries so later passes need no network access.
struct ModelLinkInfo {
  std::string id;
  int forward_offset = 0;
  int backward_offset = 0;
  double cap = 0;
  double jam_storage = 0;
  double length = 0;
  double free_speed = 0;
  double wave_speed = 0;
  double jam_density = 0;
  bool terminal = false;
  bool source = false;
};

struct ModelJunctionInfo {
  std::string id;
  std::array<int, 2> in_links{-1, -1};
  std::array<int, 2> out_links{-1, -1};
  std::array<std::array<double, 2>, 2> alpha{{{0, 0}, {0, 0}}};
};

struct MilpModel {
  std::vector<MilpColumn> cols;
  std::vector<MilpRow> rows;
  VarRegistry registry;
  std::vector<ModelLinkInfo> links;
  std::vector<ModelJunctionInfo> junctions;
  int n_steps = 0;
  double dt_hours = 0;
  double eps_veh = 1e-4;
  MilpOptions options;

  int col(Var kind, int entity, int step, int slot = -1) const {
    return registry.lookup({kind, entity, slot, step});
  }
  std::string col_name(int col) const;
  int col_by_name(const std::string& name) const;  // -1 if unknown
};

// Deterministic translation of a validated network + grid into the mixed
// binary model: identical inputs yield identical column/row order.
MilpModel build_model(const Network& net, const TimeGrid& grid, const MilpOptions& opt);

// Appends the hard mid-link storage rows for one link at interior position c
// (miles from the entrance). The implied partial offsets (c-a)/(k dt) and
// (b-c)/(w dt) must be positive integers. Public so bounds can be added to an
// already-built model.
void add_bounded_shock(MilpModel& model, const std::string& link_id, double c_miles);

SignalPlan extract_signal_plan(const MilpModel& model, const std::vector<double>& x,
                               double int_tol = 1e-6);
Trajectory extract_flows(const MilpModel& model, const std::vector<double>& x);

// Row activity and feasibility checking (shared by the solver's re-checks).
double row_activity(const MilpRow& row, const std::vector<double>& x);
struct RowViolation {
  int row = -1;
  double amount = 0;
};
// Worst violated row, or nullopt if every row holds within tol.
std::optional<RowViolation> check_rows(const MilpModel& model, const std::vector<double>& x,
                                       double tol);

// Structural audits used by tests.
std::map<RowFamily, int> count_rows_by_family(const MilpModel& model);
std::map<RowFamily, int> expected_row_counts(const Network& net, const TimeGrid& grid,
                                             const MilpOptions& opt);
int count_binary_columns(const MilpModel& model);

// Post-solve audits: exact-min attainment at green slots, and no row pinned
// against its big-M padding while the controlling binary is active.
bool audit_exact_min(const MilpModel& model, const std::vector<double>& x, double tol,
                     std::string* detail = nullptr);
bool audit_big_m(const MilpModel& model, const std::vector<double>& x,
                 std::string* detail = nullptr);

// Full column assignment reproducing a simulated trajectory under `plan`;
// used for warm incumbents and solver/simulator equivalence checks.
std::vector<double> assignment_from_trajectory(const MilpModel& model, const Trajectory& traj,
                                               const SignalPlan& plan);

// Objective value of a trajectory under the model's objective weights.
double objective_of(const MilpModel& model, const Trajectory& traj, const SignalPlan& plan);

}  // namespace linkwave
