#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <queue>

#include "linkwave/solver.hpp"

namespace linkwave {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double dot_objective(const MilpModel& model, const std::vector<double>& x) {
  double v = 0;
  for (size_t j = 0; j < model.cols.size(); ++j) v += model.cols[j].objective * x[j];
  return v;
}

struct Node {
  long id = 0;
  int depth = 0;
  std::vector<std::pair<int, double>> fixings;  // (column, value) along the path
  Basis basis;                                  // parent's final basis
  double bound = kInf;
};

struct NodeOrder {
  // priority_queue keeps the "largest"; we want best bound, then deepest,
  // then oldest, so "worse" sorts as smaller
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

class Clock {
 public:
  Clock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};
}  // namespace

const char* milp_status_name(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::Feasible: return "feasible";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::TimeLimit: return "time_limit";
  }
  return "unknown";
}

namespace {

// Re-checks a proposed assignment against the model (bounds, integrality,
// rows); returns its objective if acceptable. Snaps near-integral binaries
// and near-bound values in place first.
std::optional<double> accept_candidate(const MilpModel& model, std::vector<double>& cand,
                                       const BnbParams& params) {
  if (cand.size() != model.cols.size()) return std::nullopt;
  for (size_t j = 0; j < cand.size(); ++j) {
    const auto& c = model.cols[j];
    double v = cand[j];
    if (c.binary) {
      const double r = std::round(v);
      if (std::fabs(v - r) > params.int_tol) return std::nullopt;
      v = r;
    }
    if (v < c.lo - params.feas_tol * (1 + std::fabs(c.lo)) ||
        v > c.hi + params.feas_tol * (1 + std::fabs(c.hi)))
      return std::nullopt;
    cand[j] = std::clamp(v, c.lo, c.hi);
  }
  if (check_rows(model, cand, params.feas_tol)) return std::nullopt;
  return dot_objective(model, cand);
}

}  // namespace

MilpSolution branch_and_bound(const MilpModel& model, const BnbParams& params,
                              const BnbHooks* hooks) {
  const Clock clock;
  const int n = static_cast<int>(model.cols.size());

  std::vector<double> root_lo(n), root_hi(n);
  std::vector<int> u_cols, other_binaries;
  for (int j = 0; j < n; ++j) {
    root_lo[j] = model.cols[j].lo;
    root_hi[j] = model.cols[j].hi;
    if (!model.cols[j].binary) continue;
    if (model.registry.tag(j).kind == Var::U) u_cols.push_back(j);
    else other_binaries.push_back(j);
  }

  BoundedSimplex simplex(model);

  MilpSolution sol;
  double inc_obj = -kInf;
  bool have_incumbent = false;
  long next_id = 0;
  long lp_iterations = 0;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> heap;
  // the root continues from the fresh all-slack basis; heap pops reload theirs
  std::optional<Node> current = Node{next_id++, 0, {}, {}, kInf};

  std::vector<double> lo(n), hi(n);
  bool hit_time = false, hit_nodes = false;
  std::string root_detail;

  const auto try_incumbent = [&](std::vector<double> cand) -> bool {
    auto obj = accept_candidate(model, cand, params);
    if (!obj || *obj <= inc_obj) return false;
    inc_obj = *obj;
    sol.x = std::move(cand);
    have_incumbent = true;
    return true;
  };

  while (true) {
    if (!current) {
      if (heap.empty()) break;
      // make_heap pops the best bound; skip nodes already dominated
      Node top = heap.top();
      heap.pop();
      if (have_incumbent && top.bound <= inc_obj + 1e-9) continue;
      simplex.load_basis(top.basis);
      current = std::move(top);
    }
    Node node = std::move(*current);
    current.reset();

    if (params.time_limit_s > 0 && clock.seconds() > params.time_limit_s) {
      heap.push(std::move(node));  // still open
      hit_time = true;
      break;
    }
    if (params.max_nodes >= 0 && sol.nodes >= params.max_nodes) {
      heap.push(std::move(node));
      hit_nodes = true;
      break;
    }
    ++sol.nodes;

    lo = root_lo;
    hi = root_hi;
    for (const auto& [c, v] : node.fixings) {
      lo[c] = v;
      hi[c] = v;
    }

    if (hooks && hooks->candidate && hooks->candidate_is_exact_when_signals_fixed) {
      bool all_u_fixed = true;
      for (int c : u_cols) {
        if (lo[c] != hi[c]) {
          all_u_fixed = false;
          break;
        }
      }
      if (all_u_fixed) {
        // the subtree holds exactly one candidate point; close the node on it
        auto cand = hooks->candidate(lo, hi, nullptr);
        if (cand) try_incumbent(std::move(*cand));
        continue;
      }
    }

    LpResult lp = simplex.solve(lo, hi);
    lp_iterations += lp.iterations;
    if (lp.status == LpStatus::Infeasible) {
      if (node.depth == 0) root_detail = lp.detail;
      continue;
    }
    if (lp.status == LpStatus::Unbounded)
      throw SolveError("relaxation unbounded; the model is malformed");
    node.bound = lp.objective;
    if (have_incumbent && lp.objective <= inc_obj + 1e-9) continue;

    if (hooks && hooks->candidate) {
      auto cand = hooks->candidate(lo, hi, &lp.x);
      if (cand) try_incumbent(std::move(*cand));
      if (have_incumbent && lp.objective <= inc_obj + 1e-9) continue;
    }

    // pick the most fractional signal column, then any other binary
    int frac_col = -1;
    double frac_dist = kInf;
    const auto consider = [&](int c) {
      const double v = lp.x[c];
      if (std::fabs(v - std::round(v)) <= params.int_tol) return;
      const double d = std::fabs(v - 0.5);
      if (d < frac_dist - 1e-15) {
        frac_dist = d;
        frac_col = c;
      }
    };
    for (int c : u_cols) consider(c);
    if (frac_col < 0)
      for (int c : other_binaries) consider(c);

    if (frac_col < 0) {
      // integral relaxation: the LP point itself is the subtree optimum
      try_incumbent(lp.x);
      continue;
    }

    const double preferred = lp.x[frac_col] >= 0.5 ? 1.0 : 0.0;
    Node sibling;
    sibling.id = next_id++;
    sibling.depth = node.depth + 1;
    sibling.fixings = node.fixings;
    sibling.fixings.emplace_back(frac_col, 1.0 - preferred);
    sibling.basis = simplex.save_basis();
    sibling.bound = lp.objective;
    heap.push(std::move(sibling));

    Node plunge;
    plunge.id = next_id++;
    plunge.depth = node.depth + 1;
    plunge.fixings = std::move(node.fixings);
    plunge.fixings.emplace_back(frac_col, preferred);
    plunge.bound = lp.objective;
    current = std::move(plunge);  // keeps the warm working basis

    if (have_incumbent) {
      double best_bound = inc_obj;
      if (current) best_bound = std::max(best_bound, current->bound);
      if (!heap.empty()) best_bound = std::max(best_bound, heap.top().bound);
      if ((best_bound - inc_obj) / std::max(1.0, std::fabs(inc_obj)) <= params.gap_tol)
        break;  // proven within gap tolerance
    }
  }

  sol.wall_s = clock.seconds();
  double best_bound = have_incumbent ? inc_obj : -kInf;
  if (current) best_bound = std::max(best_bound, current->bound);
  if (!heap.empty()) best_bound = std::max(best_bound, heap.top().bound);

  sol.objective = have_incumbent ? inc_obj : 0;
  sol.best_bound = best_bound;
  sol.gap = have_incumbent
                ? (best_bound - inc_obj) / std::max(1.0, std::fabs(inc_obj))
                : kInf;

  const bool exhausted = !current && heap.empty();
  if (have_incumbent) {
    if (exhausted || sol.gap <= params.gap_tol) {
      sol.status = MilpStatus::Optimal;
    } else if (hit_time) {
      sol.status = MilpStatus::TimeLimit;
    } else {
      sol.status = MilpStatus::Feasible;
    }
  } else {
    sol.status = (hit_time || hit_nodes) ? MilpStatus::TimeLimit : MilpStatus::Infeasible;
    if (sol.status == MilpStatus::Infeasible) sol.detail = root_detail;
  }

  char buf[160];
  std::snprintf(buf, sizeof buf, "nodes=%ld lp_iterations=%ld wall_s=%.3f",
                sol.nodes, lp_iterations, sol.wall_s);
  if (sol.detail.empty()) sol.detail = buf;
  else sol.detail = std::string(buf) + " violated: " + sol.detail;
  return sol;
}

BnbHooks make_simulation_hooks(const MilpModel& model, const Network& net,
                               const TimeGrid& grid) {
  BnbHooks hooks;
  hooks.candidate_is_exact_when_signals_fixed = true;
  hooks.candidate = [&model, &net, &grid](const std::vector<double>& lo,
                                          const std::vector<double>& hi,
                                          const std::vector<double>* lp_x)
      -> std::optional<std::vector<double>> {
    const int nj = static_cast<int>(model.junctions.size());
    SignalPlan plan;
    plan.green_slot.assign(nj, std::vector<std::uint8_t>(model.n_steps, 0));
    for (int j = 0; j < nj; ++j) {
      for (int s = 0; s < model.n_steps; ++s) {
        const int u0 = model.col(Var::U, j, s, 0);
        const int u1 = model.col(Var::U, j, s, 1);
        std::uint8_t green = 0;
        if (lo[u0] == hi[u0]) green = lo[u0] > 0.5 ? 0 : 1;
        else if (lo[u1] == hi[u1]) green = lo[u1] > 0.5 ? 1 : 0;
        else if (lp_x) green = (*lp_x)[u0] >= (*lp_x)[u1] ? 0 : 1;
        plan.green_slot[j][s] = green;
      }
    }
    SimulateOptions opt;
    opt.enforce_source_capacity = false;
    try {
      const Trajectory traj = simulate(net, grid, plan, opt);
      return assignment_from_trajectory(model, traj, plan);
    } catch (const SimulationError&) {
      // the plan jams a source link beyond its storage: that subtree's
      // storage-cap rows are violated, so there is no candidate
      return std::nullopt;
    }
  };
  return hooks;
}

}  // namespace linkwave
