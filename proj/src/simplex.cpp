#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "linkwave/solver.hpp"

namespace linkwave {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDualTol = 1e-9;    // reduced-cost eligibility
constexpr double kPivotTol = 1e-8;   // minimum acceptable pivot magnitude
constexpr double kZeroTol = 1e-11;   // direction entries treated as zero
constexpr int kBlandTrigger = 50;    // degenerate pivots before Bland's rule
constexpr int kRefactorEvery = 700;

double band(double bound) { return kFeasTol * (1.0 + std::fabs(bound)); }
}  // namespace

struct BoundedSimplex::Impl {
  const MilpModel& model;
  int n = 0;     // structural columns
  int m = 0;     // rows
  int next = 0;  // extended columns (n + m)

  // structural columns, sparse by row; slack column n+i is e_i implicitly
  std::vector<std::vector<std::pair<int, double>>> cols;
  std::vector<double> obj;
  std::vector<double> rhs;
  std::vector<double> slack_lo, slack_hi;

  // working basis state
  Eigen::MatrixXd Binv;
  std::vector<int> basic;          // row -> extended column
  std::vector<int> row_of;         // extended column -> row, -1 if nonbasic
  std::vector<ColStatus> status;   // per extended column
  Eigen::VectorXd x;               // per extended column
  Eigen::VectorXd y;               // phase-2 duals
  std::vector<double> lo, hi;      // extended bounds for the current solve
  std::vector<char> banned;        // columns excluded after numerical trouble
  int pivots_since_refactor = 0;
  int iterations = 0;

  explicit Impl(const MilpModel& mdl) : model(mdl) {
    n = static_cast<int>(mdl.cols.size());
    m = static_cast<int>(mdl.rows.size());
    next = n + m;
    cols.resize(n);
    obj.resize(n);
    for (int j = 0; j < n; ++j) obj[j] = mdl.cols[j].objective;
    rhs.resize(m);
    slack_lo.resize(m);
    slack_hi.resize(m);
    for (int i = 0; i < m; ++i) {
      const auto& row = mdl.rows[i];
      for (const auto& [c, v] : row.terms) cols[c].emplace_back(i, v);
      if (std::isfinite(row.hi)) {
        // a'x + s = hi with s in [0, hi - lo]
        rhs[i] = row.hi;
        slack_lo[i] = 0;
        slack_hi[i] = std::isfinite(row.lo) ? row.hi - row.lo : kInf;
      } else {
        // a'x + s = lo with s <= 0
        rhs[i] = row.lo;
        slack_lo[i] = -kInf;
        slack_hi[i] = 0;
      }
    }
    reset_to_slack_basis();
  }

  void reset_to_slack_basis() {
    Binv = Eigen::MatrixXd::Identity(m, m);
    basic.assign(m, -1);
    row_of.assign(next, -1);
    status.assign(next, ColStatus::AtLower);
    for (int i = 0; i < m; ++i) {
      basic[i] = n + i;
      row_of[n + i] = i;
      status[n + i] = ColStatus::Basic;
    }
    x = Eigen::VectorXd::Zero(next);
    y = Eigen::VectorXd::Zero(m);
    pivots_since_refactor = 0;
  }

  double col_lo(int j) const { return j < n ? lo[j] : slack_lo[j - n]; }
  double col_hi(int j) const { return j < n ? hi[j] : slack_hi[j - n]; }

  double dot_col(const Eigen::VectorXd& v, int j) const {
    if (j >= n) return v(j - n);
    double s = 0;
    for (const auto& [r, c] : cols[j]) s += c * v(r);
    return s;
  }

  // alpha = Binv * A_j
  void ftran(int j, Eigen::VectorXd& alpha) const {
    if (j >= n) {
      alpha = Binv.col(j - n);
      return;
    }
    alpha.setZero(m);
    for (const auto& [r, c] : cols[j]) alpha.noalias() += c * Binv.col(r);
  }

  // x_B = Binv (rhs - A_N x_N); nonbasic x entries must already sit on bounds
  void recompute_basics() {
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(rhs.data(), m);
    for (int j = 0; j < next; ++j) {
      if (status[j] == ColStatus::Basic || x(j) == 0.0) continue;
      if (j >= n) {
        r(j - n) -= x(j);
      } else {
        for (const auto& [row, c] : cols[j]) r(row) -= c * x(j);
      }
    }
    const Eigen::VectorXd xb = Binv * r;
    for (int i = 0; i < m; ++i) x(basic[i]) = xb(i);
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      const int j = basic[i];
      if (j >= n) {
        B(j - n, i) = 1.0;
      } else {
        for (const auto& [r, c] : cols[j]) B(r, i) = c;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const auto diag = lu.matrixLU().diagonal();
    const double dmax = diag.cwiseAbs().maxCoeff();
    if (!(dmax > 0) || diag.cwiseAbs().minCoeff() < 1e-13 * dmax)
      throw SolveError("simplex basis is numerically singular");
    Binv = lu.inverse();
    pivots_since_refactor = 0;
    recompute_basics();
  }

  // duals for the true objective (phase 2); only nonzero basic costs matter
  void recompute_duals() {
    y.setZero(m);
    for (int i = 0; i < m; ++i) {
      const int j = basic[i];
      if (j < n && obj[j] != 0.0) y.noalias() += obj[j] * Binv.row(i).transpose();
    }
  }

  // phase-1 duals from the violation signs of the basic variables
  void phase1_duals(double* total_violation) {
    y.setZero(m);
    double total = 0;
    for (int i = 0; i < m; ++i) {
      const int j = basic[i];
      const double v = x(j), l = col_lo(j), h = col_hi(j);
      if (v < l - band(l)) {
        total += l - v;
        y.noalias() += Binv.row(i).transpose();  // weight +1
      } else if (v > h + band(h)) {
        total += v - h;
        y.noalias() -= Binv.row(i).transpose();  // weight -1
      }
    }
    *total_violation = total;
  }

  int price(int phase, bool bland, double* d_out) const {
    int best = -1;
    double best_score = kDualTol;
    double best_d = 0;
    for (int j = 0; j < next; ++j) {
      if (status[j] == ColStatus::Basic || banned[j]) continue;
      if (!(col_hi(j) - col_lo(j) > 0)) continue;  // fixed column
      const double c = (phase == 2 && j < n) ? obj[j] : 0.0;
      const double d = c - dot_col(y, j);
      const bool eligible =
          status[j] == ColStatus::AtLower ? d > kDualTol : d < -kDualTol;
      if (!eligible) continue;
      if (bland) {
        *d_out = d;
        return j;
      }
      if (std::fabs(d) > best_score) {
        best_score = std::fabs(d);
        best = j;
        best_d = d;
      }
    }
    *d_out = best_d;
    return best;
  }

  struct Ratio {
    double delta = kInf;
    int row = -1;       // -1: entering flips to its other bound
    double target = 0;  // bound the leaving basic stops at
  };

  Ratio ratio_test(int enter, double sigma, const Eigen::VectorXd& alpha, bool bland) const {
    Ratio best;
    const double range = col_hi(enter) - col_lo(enter);
    best.delta = range;  // self bound flip
    double best_piv = 0;
    for (int i = 0; i < m; ++i) {
      const double a = alpha(i);
      if (std::fabs(a) <= kZeroTol) continue;
      const int j = basic[i];
      const double v = x(j), l = col_lo(j), h = col_hi(j);
      const double g = -sigma * a;  // basic moves at rate g per unit of delta
      double target;
      if (g < 0) {
        // moving down: an above-upper basic blocks at its upper bound,
        // anything else at its lower bound
        target = (v > h + band(h)) ? h : l;
        if (!std::isfinite(target)) continue;
      } else {
        target = (v < l - band(l)) ? l : h;
        if (!std::isfinite(target)) continue;
      }
      double ratio = (target - v) / g;
      if (ratio < 0) ratio = 0;  // inside the tolerance band
      const bool better =
          ratio < best.delta - 1e-12 ||
          (ratio < best.delta + 1e-12 && best.row >= 0 &&
           (bland ? j < basic[best.row]
                  : (std::fabs(a) > best_piv + 1e-15 ||
                     (std::fabs(a) > best_piv - 1e-15 && j < basic[best.row])))) ||
          (ratio < best.delta + 1e-12 && best.row < 0 && ratio < best.delta);
      if (better) {
        best.delta = ratio;
        best.row = i;
        best.target = target;
        best_piv = std::fabs(a);
      }
    }
    return best;
  }

  void apply_flip(int enter, double sigma, const Eigen::VectorXd& alpha, double range) {
    x(enter) += sigma * range;
    for (int i = 0; i < m; ++i) {
      if (std::fabs(alpha(i)) > kZeroTol) x(basic[i]) -= sigma * range * alpha(i);
    }
    status[enter] =
        status[enter] == ColStatus::AtLower ? ColStatus::AtUpper : ColStatus::AtLower;
  }

  // pivot enter into row r; returns the pre-update Binv row r scaled by 1/pivot
  void apply_pivot(int enter, double sigma, const Eigen::VectorXd& alpha, const Ratio& rt,
                   int phase, double d_enter) {
    const int r = rt.row;
    const int leave = basic[r];
    const double piv = alpha(r);
    x(enter) = (status[enter] == ColStatus::AtLower ? col_lo(enter) : col_hi(enter)) +
               sigma * rt.delta;
    for (int i = 0; i < m; ++i) {
      if (i != r && std::fabs(alpha(i)) > kZeroTol) x(basic[i]) -= sigma * rt.delta * alpha(i);
    }
    x(leave) = rt.target;
    status[leave] = (rt.target == col_lo(leave) && col_lo(leave) != col_hi(leave)) ||
                            !std::isfinite(col_hi(leave))
                        ? ColStatus::AtLower
                        : (rt.target == col_hi(leave) ? ColStatus::AtUpper
                                                      : ColStatus::AtLower);
    row_of[leave] = -1;
    basic[r] = enter;
    row_of[enter] = r;
    status[enter] = ColStatus::Basic;

    const Eigen::RowVectorXd t = Binv.row(r) / piv;
    Eigen::VectorXd a2 = alpha;
    a2(r) = 0;
    Binv.noalias() -= a2 * t;
    Binv.row(r) = t;
    if (phase == 2) y.noalias() += d_enter * t.transpose();
    ++pivots_since_refactor;
  }

  double structural_objective() const {
    double v = 0;
    for (int j = 0; j < n; ++j) v += obj[j] * x(j);
    return v;
  }

  double max_bound_violation() const {
    double worst = 0;
    for (int i = 0; i < m; ++i) {
      const int j = basic[i];
      const double v = x(j), l = col_lo(j), h = col_hi(j);
      worst = std::max(worst, std::max(l - v, v - h));
    }
    return worst;
  }

  // names of the worst few violated rows/columns, for infeasibility reports
  std::string violation_certificate(int max_names) const {
    std::vector<std::pair<double, int>> bad;  // (violation, row)
    for (int i = 0; i < m; ++i) {
      const int j = basic[i];
      const double v = x(j), l = col_lo(j), h = col_hi(j);
      const double below = l - v, above = v - h;
      if (below > band(l)) bad.emplace_back(below, i);
      else if (above > band(h)) bad.emplace_back(above, i);
    }
    std::sort(bad.begin(), bad.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    std::string out;
    for (int k = 0; k < static_cast<int>(bad.size()) && k < max_names; ++k) {
      const int j = basic[bad[k].second];
      if (!out.empty()) out += ", ";
      out += (j >= n) ? model.rows[j - n].name : model.col_name(j);
    }
    return out;
  }
};

BoundedSimplex::BoundedSimplex(const MilpModel& model) : impl_(new Impl(model)) {}
BoundedSimplex::~BoundedSimplex() = default;

int BoundedSimplex::rows() const { return impl_->m; }
int BoundedSimplex::structural_columns() const { return impl_->n; }

void BoundedSimplex::load_basis(const Basis& basis) {
  Impl& s = *impl_;
  if (static_cast<int>(basis.basic.size()) != s.m ||
      static_cast<int>(basis.status.size()) != s.next)
    throw SolveError("basis shape does not match the model");
  s.basic = basis.basic;
  s.status = basis.status;
  s.row_of.assign(s.next, -1);
  for (int i = 0; i < s.m; ++i) {
    const int j = s.basic[i];
    if (j < 0 || j >= s.next || s.status[j] != ColStatus::Basic)
      throw SolveError("inconsistent basis");
    if (s.row_of[j] >= 0) throw SolveError("column basic in two rows");
    s.row_of[j] = i;
  }
  s.x.setZero(s.next);
  s.refactor();  // also recomputes basics once bounds are set in solve()
}

Basis BoundedSimplex::save_basis() const {
  return Basis{impl_->basic, impl_->status};
}

LpResult BoundedSimplex::solve(const std::vector<double>& lo_s,
                               const std::vector<double>& hi_s) {
  Impl& s = *impl_;
  if (static_cast<int>(lo_s.size()) != s.n || static_cast<int>(hi_s.size()) != s.n)
    throw SolveError("bound vectors do not match the model");
  s.lo = lo_s;
  s.hi = hi_s;

  // park nonbasic columns on their current bound sides
  for (int j = 0; j < s.next; ++j) {
    if (s.status[j] == ColStatus::Basic) continue;
    double v = s.status[j] == ColStatus::AtLower ? s.col_lo(j) : s.col_hi(j);
    if (!std::isfinite(v)) {
      // a one-sided column parked on its missing bound: use the finite side
      v = std::isfinite(s.col_lo(j)) ? s.col_lo(j) : s.col_hi(j);
      if (!std::isfinite(v)) throw SolveError("free column without bounds");
      s.status[j] = v == s.col_lo(j) ? ColStatus::AtLower : ColStatus::AtUpper;
    }
    s.x(j) = v;
  }
  s.recompute_basics();

  const long iter_cap = 40L * (s.m + s.n) + 2000;
  int phase = 1;
  bool bland = false;
  int degenerate_streak = 0;
  bool retried_infeasible = false;
  bool retried_optimal = false;
  bool any_banned = false;
  s.iterations = 0;
  s.banned.assign(s.next, 0);
  LpResult res;

  while (true) {
    if (++s.iterations > iter_cap) throw SolveError("simplex iteration limit exceeded");

    double total_violation = 0;
    if (phase == 1) {
      s.phase1_duals(&total_violation);
      if (total_violation <= kFeasTol * (1.0 + s.m)) {
        phase = 2;
        s.recompute_duals();
        continue;
      }
    }

    double d_enter = 0;
    const int enter = s.price(phase, bland, &d_enter);
    if (enter < 0) {
      if (any_banned)
        throw SolveError("simplex stalled on numerically unstable pivots");
      if (phase == 1) {
        if (!retried_infeasible) {
          // guard against drift-induced false negatives
          retried_infeasible = true;
          s.refactor();
          continue;
        }
        res.status = LpStatus::Infeasible;
        res.iterations = s.iterations;
        res.detail = s.violation_certificate(3);
        return res;
      }
      // optimal: clean up and double-check feasibility of the working point
      s.recompute_basics();
      if (s.max_bound_violation() > 10 * kFeasTol * (1.0 + s.m) && !retried_optimal) {
        retried_optimal = true;
        s.refactor();
        phase = 1;
        continue;
      }
      res.status = LpStatus::Optimal;
      res.objective = s.structural_objective();
      res.x.assign(s.x.data(), s.x.data() + s.n);
      res.iterations = s.iterations;
      return res;
    }

    const double sigma = s.status[enter] == ColStatus::AtLower ? 1.0 : -1.0;
    Eigen::VectorXd alpha;
    s.ftran(enter, alpha);
    const Impl::Ratio rt = s.ratio_test(enter, sigma, alpha, bland);

    if (!std::isfinite(rt.delta)) {
      if (phase == 1) {
        // a genuine phase-1 ray is impossible; treat as numerical trouble
        if (s.pivots_since_refactor > 0) {
          s.refactor();
        } else {
          s.banned[enter] = 1;
          any_banned = true;
        }
        continue;
      }
      res.status = LpStatus::Unbounded;
      res.iterations = s.iterations;
      return res;
    }

    if (rt.row < 0) {
      s.apply_flip(enter, sigma, alpha, rt.delta);
      degenerate_streak = 0;
      bland = false;
      if (any_banned) {
        s.banned.assign(s.next, 0);
        any_banned = false;
      }
      continue;
    }

    if (std::fabs(alpha(rt.row)) < kPivotTol) {
      // unreliable pivot: rebuild the inverse and retry, then exclude the column
      if (s.pivots_since_refactor > 0) {
        s.refactor();
        if (phase == 2) s.recompute_duals();
      } else {
        s.banned[enter] = 1;
        any_banned = true;
      }
      continue;
    }

    s.apply_pivot(enter, sigma, alpha, rt, phase, d_enter);
    if (any_banned) {
      s.banned.assign(s.next, 0);
      any_banned = false;
    }
    if (rt.delta <= 1e-10) {
      if (++degenerate_streak > kBlandTrigger) bland = true;
    } else {
      degenerate_streak = 0;
      bland = false;
    }
    if (s.pivots_since_refactor >= kRefactorEvery) {
      s.refactor();
      if (phase == 2) s.recompute_duals();
    }
  }
}

LpResult solve_lp(const MilpModel& model) {
  BoundedSimplex simplex(model);
  std::vector<double> lo(model.cols.size()), hi(model.cols.size());
  for (size_t j = 0; j < model.cols.size(); ++j) {
    lo[j] = model.cols[j].lo;
    hi[j] = model.cols[j].hi;
  }
  return simplex.solve(lo, hi);
}

}  // namespace linkwave
