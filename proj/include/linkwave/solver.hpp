#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "linkwave/common.hpp"
#include "linkwave/kinematics.hpp"
#include "linkwave/milp.hpp"

namespace linkwave {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0;
  std::vector<double> x;  // structural column values
  int iterations = 0;
  std::string detail;     // infeasible: names of rows/columns still violated
};

// A simplex basis: one basic column per row (structural or slack, slacks are
// column n + row), plus the bound side of every nonbasic column.
enum class ColStatus : std::uint8_t { AtLower, AtUpper, Basic };

struct Basis {
  std::vector<int> basic;            // size m, row -> extended column
  std::vector<ColStatus> status;     // size n + m
};

// Bounded-variable primal simplex over the model's rows. The working basis
// inverse is kept dense (desk-scale instances) with rank-one pivot updates
// and periodic LU refactorization. Deterministic: Dantzig pricing with a
// Bland fallback after a degeneracy streak, lowest-index tie-breaks.
class BoundedSimplex {
 public:
  explicit BoundedSimplex(const MilpModel& model);
  ~BoundedSimplex();
  BoundedSimplex(const BoundedSimplex&) = delete;
  BoundedSimplex& operator=(const BoundedSimplex&) = delete;

  // Installs a basis saved by save_basis (refactorizes). Without this, solve
  // continues from the current working basis (initially all-slack).
  void load_basis(const Basis& basis);
  Basis save_basis() const;

  // Solves max c'x s.t. row bounds, lo <= x <= hi (structural bounds given
  // per call so branch fixings are cheap). Binary columns are relaxed.
  LpResult solve(const std::vector<double>& lo, const std::vector<double>& hi);

  int rows() const;
  int structural_columns() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience root relaxation.
LpResult solve_lp(const MilpModel& model);

struct BnbParams {
  double time_limit_s = 300;
  double int_tol = kIntTol;
  double gap_tol = kGapTol;
  double feas_tol = kFeasTol;
  long max_nodes = -1;  // < 0: unlimited
};

enum class MilpStatus { Optimal, Feasible, Infeasible, TimeLimit };

const char* milp_status_name(MilpStatus s);

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  std::vector<double> x;   // incumbent assignment (empty if none)
  double objective = 0;    // incumbent objective
  double best_bound = 0;
  double gap = 0;          // (best_bound - objective) / max(1, |objective|)
  long nodes = 0;
  double wall_s = 0;
  std::string detail;      // e.g. infeasibility certificate row name
};

// Node hook: may propose a full assignment for the node described by the
// bound vectors (lp_x is the node LP optimum when available, null at
// signal-complete nodes solved without an LP). The solver re-checks any
// proposal against rows, bounds and integrality before accepting it.
using CandidateHook = std::function<std::optional<std::vector<double>>(
    const std::vector<double>& lo, const std::vector<double>& hi,
    const std::vector<double>* lp_x)>;

struct BnbHooks {
  CandidateHook candidate;
  // True when the candidate for a node with every signal column fixed is the
  // unique feasible point of that subtree, so the node can be closed with
  // the candidate's exact value (or proven infeasible if it violates a row).
  bool candidate_is_exact_when_signals_fixed = false;
};

// Best-bound branch and bound over the model's binary columns, branching on
// signal columns first (most fractional, lowest index on ties), with
// plunging on the LP-suggested child to reuse the warm working basis.
MilpSolution branch_and_bound(const MilpModel& model, const BnbParams& params = {},
                              const BnbHooks* hooks = nullptr);

// Hooks that evaluate candidate signal plans through the forward simulator:
// plans are read from node bounds (free signals take the LP rounding), the
// simulated trajectory is converted back to a full assignment. Under fixed
// signals the network dynamics are deterministic, so the candidate is exact.
BnbHooks make_simulation_hooks(const MilpModel& model, const Network& net,
                               const TimeGrid& grid);

// Free-format MPS export (OBJSENSE MAX, RANGES for two-sided rows, MARKER
// INTORG/INTEND plus BV bounds for binaries). Column names come from the
// model registry (e.g. QHAT_I1_T07).
void export_mps(const MilpModel& model, const std::string& path,
                const std::string& problem_name = "LINKWAVE");

// Reads a "column value" solution file ('#' comments; unknown names are
// errors, missing columns read as 0), re-checks rows, bounds and
// integrality, and returns the assignment with its recomputed objective.
// Directives: "# status optimal|feasible", "# bound <value>".
MilpSolution import_solution(const MilpModel& model, const std::string& path,
                             double feas_tol = kFeasTol);

}  // namespace linkwave
