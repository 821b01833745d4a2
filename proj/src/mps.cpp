#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "linkwave/solver.hpp"

namespace linkwave {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void export_mps(const MilpModel& model, const std::string& path,
                const std::string& problem_name) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");

  const int n = static_cast<int>(model.cols.size());
  const int m = static_cast<int>(model.rows.size());

  out << "* " << problem_name << ": " << n << " columns, " << m << " rows\n";
  out << "NAME          " << problem_name << "\n";
  out << "OBJSENSE\n    MAX\n";

  out << "ROWS\n N  OBJ\n";
  for (const auto& row : model.rows) {
    char type;
    if (row.lo == row.hi) type = 'E';
    else if (std::isfinite(row.hi)) type = 'L';  // RANGES adds the floor back
    else type = 'G';
    out << " " << type << "  " << row.name << "\n";
  }

  // column-major copy of the row terms
  std::vector<std::vector<std::pair<int, double>>> cols(n);
  for (int i = 0; i < m; ++i)
    for (const auto& [c, v] : model.rows[i].terms) cols[c].emplace_back(i, v);

  out << "COLUMNS\n";
  bool in_integer = false;
  int marker = 0;
  for (int j = 0; j < n; ++j) {
    const bool want_integer = model.cols[j].binary;
    if (want_integer != in_integer) {
      out << "    MARK" << marker++ << "     'MARKER'     '"
          << (want_integer ? "INTORG" : "INTEND") << "'\n";
      in_integer = want_integer;
    }
    const std::string name = model.col_name(j);
    bool any = false;
    if (model.cols[j].objective != 0) {
      out << "    " << name << "  OBJ  " << fmt17(model.cols[j].objective) << "\n";
      any = true;
    }
    for (const auto& [i, v] : cols[j]) {
      out << "    " << name << "  " << model.rows[i].name << "  " << fmt17(v) << "\n";
      any = true;
    }
    if (!any) out << "    " << name << "  OBJ  0\n";  // keep the column declared
  }
  if (in_integer) out << "    MARK" << marker++ << "     'MARKER'     'INTEND'\n";

  out << "RHS\n";
  for (const auto& row : model.rows) {
    const double rhs = std::isfinite(row.hi) ? row.hi : row.lo;
    if (rhs != 0) out << "    RHS  " << row.name << "  " << fmt17(rhs) << "\n";
  }

  bool have_ranges = false;
  for (const auto& row : model.rows) {
    if (row.lo == row.hi || !std::isfinite(row.hi) || !std::isfinite(row.lo)) continue;
    if (!have_ranges) {
      out << "RANGES\n";
      have_ranges = true;
    }
    out << "    RNG  " << row.name << "  " << fmt17(row.hi - row.lo) << "\n";
  }

  out << "BOUNDS\n";
  for (int j = 0; j < n; ++j) {
    const auto& c = model.cols[j];
    const std::string name = model.col_name(j);
    if (c.lo == c.hi) {
      out << " FX BND  " << name << "  " << fmt17(c.lo) << "\n";
    } else if (c.binary) {
      out << " BV BND  " << name << "\n";
    } else {
      if (!std::isfinite(c.lo)) out << " MI BND  " << name << "\n";
      else if (c.lo != 0) out << " LO BND  " << name << "  " << fmt17(c.lo) << "\n";
      if (std::isfinite(c.hi)) out << " UP BND  " << name << "  " << fmt17(c.hi) << "\n";
    }
  }
  out << "ENDATA\n";
  if (!out) throw ConfigError("failed writing " + path);
}

MilpSolution import_solution(const MilpModel& model, const std::string& path,
                             double feas_tol) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open solution file " + path);

  const int n = static_cast<int>(model.cols.size());
  std::unordered_map<std::string, int> by_name;
  by_name.reserve(n * 2);
  for (int j = 0; j < n; ++j) by_name.emplace(model.col_name(j), j);

  MilpSolution sol;
  sol.status = MilpStatus::Feasible;
  sol.x.assign(n, 0.0);
  bool have_bound = false;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;  // blank
    if (first[0] == '#') {
      std::string key;
      if (first == "#") ss >> key;
      else key = first.substr(1);
      if (key == "status") {
        std::string v;
        ss >> v;
        if (v == "optimal") sol.status = MilpStatus::Optimal;
        else if (v == "feasible") sol.status = MilpStatus::Feasible;
        else if (v == "infeasible") sol.status = MilpStatus::Infeasible;
        else throw SolveError("solution line " + std::to_string(line_no) +
                              ": unknown status '" + v + "'");
      } else if (key == "bound") {
        if (!(ss >> sol.best_bound))
          throw SolveError("solution line " + std::to_string(line_no) +
                           ": bound needs a numeric value");
        have_bound = true;
      }
      continue;  // other comments are ignored
    }
    const auto it = by_name.find(first);
    if (it == by_name.end())
      throw SolveError("solution line " + std::to_string(line_no) +
                       ": unknown column name '" + first + "'");
    double value = 0;
    if (!(ss >> value))
      throw SolveError("solution line " + std::to_string(line_no) + ": column '" +
                       first + "' needs a numeric value");
    std::string extra;
    if (ss >> extra)
      throw SolveError("solution line " + std::to_string(line_no) +
                       ": unexpected trailing token '" + extra + "'");
    sol.x[it->second] = value;
  }

  if (sol.status == MilpStatus::Infeasible) {
    sol.x.clear();
    sol.detail = "imported status: infeasible";
    return sol;
  }

  // re-check integrality, bounds and rows before trusting the file
  for (int j = 0; j < n; ++j) {
    const auto& c = model.cols[j];
    double v = sol.x[j];
    if (c.binary) {
      const double r = std::round(v);
      if (std::fabs(v - r) > kIntTol)
        throw SolveError("imported solution: column " + model.col_name(j) +
                         " = " + fmt9(v) + " is not integral");
      v = r;
    }
    if (v < c.lo - feas_tol * (1 + std::fabs(c.lo)) ||
        v > c.hi + feas_tol * (1 + std::fabs(c.hi)))
      throw SolveError("imported solution: column " + model.col_name(j) + " = " +
                       fmt9(v) + " is outside [" + fmt9(c.lo) + ", " + fmt9(c.hi) + "]");
    sol.x[j] = std::min(std::max(v, c.lo), c.hi);
  }
  if (const auto viol = check_rows(model, sol.x, feas_tol)) {
    const auto& row = model.rows[viol->row];
    throw SolveError("imported solution violates row " + row.name + " by " +
                     fmt9(viol->amount));
  }

  double obj = 0;
  for (int j = 0; j < n; ++j) obj += model.cols[j].objective * sol.x[j];
  sol.objective = obj;
  if (!have_bound) sol.best_bound = obj;
  sol.gap = (sol.best_bound - obj) / std::max(1.0, std::fabs(obj));
  if (sol.gap < 0) sol.gap = 0;
  sol.detail = "imported from " + path;
  return sol;
}

}  // namespace linkwave
