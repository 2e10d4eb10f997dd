#pragma once

// Exact optimization for tiny instances, and a bridge to external MILP
// solvers through LP-format export and solution import.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "roster/core.hpp"
#include "roster/io.hpp"
#include "roster/model.hpp"

namespace roster {

struct EmployeePattern {
  std::vector<Shift> row;
  long long pref_cost = 0;
};

struct OracleResult {
  Schedule schedule;
  long long min_soft = 0;
  long long node_count = 0;
  bool proven = false;
};

inline constexpr int kMaxPatternDays = 12;  // 4^12 = 2^24 candidate rows
inline constexpr int kMaxExactEmployees = 8;

/// All rows satisfying C2-C5 for one employee, in lexicographic code order.
inline std::vector<EmployeePattern> enumerate_patterns(const Instance& inst, int employee) {
  if (inst.num_days > kMaxPatternDays)
    throw CapacityError("pattern enumeration limited to " + std::to_string(kMaxPatternDays) + " days");
  if (employee < 0 || employee >= inst.num_employees) throw InvalidInput("employee index out of range");

  const int D = inst.num_days;
  const int h = inst.hours_per_shift;
  std::vector<EmployeePattern> out;
  std::vector<Shift> row(D, Shift::Rest);

  // State carried from day to day: previous code, worked streak ending at the
  // previous day, length of the current rest block if it follows a worked
  // day (-1 while no day has been worked yet), and hours so far.
  struct State {
    Shift last;
    int streak;
    int rest;
    int hours;
  };

  auto extend = [&](auto&& self, int d, State st) -> void {
    if (d == D) {
      EmployeePattern p{row, 0};
      for (int k = 0; k < D; ++k)
        if (is_work(row[k])) p.pref_cost += inst.pref_off(employee, k);
      out.push_back(std::move(p));
      return;
    }
    const int remaining_after = D - d - 1;
    for (int c = 0; c < kNumCodes; ++c) {
      const Shift s = static_cast<Shift>(c);
      State next = st;
      if (is_work(s)) {
        if (d > 0 && st.last == Shift::Night && s == Shift::Morning) continue;
        if (st.streak + 1 > inst.max_consecutive) continue;
        if (st.rest >= 1 && st.rest < inst.min_rest) continue;
        if (st.hours + h > inst.max_hours) continue;
        next = {s, st.streak + 1, 0, st.hours + h};
      } else {
        next = {s, 0, st.rest < 0 ? -1 : st.rest + 1, st.hours};
      }
      if (next.hours + h * remaining_after < inst.min_hours) continue;
      row[d] = s;
      self(self, d + 1, next);
    }
    row[d] = Shift::Rest;
  };
  extend(extend, 0, State{Shift::Rest, 0, -1, 0});
  return out;
}

/// Depth-first branch and bound over one pattern per employee.
inline OracleResult solve_exact(const Instance& inst,
                                long long node_budget = std::numeric_limits<long long>::max()) {
  inst.validate();
  if (inst.num_employees > kMaxExactEmployees)
    throw CapacityError("exact search limited to " + std::to_string(kMaxExactEmployees) + " employees");

  const int E = inst.num_employees;
  const int D = inst.num_days;
  const int S = inst.num_shifts;

  std::vector<std::vector<EmployeePattern>> patterns(E);
  for (int e = 0; e < E; ++e) {
    patterns[e] = enumerate_patterns(inst, e);
    if (patterns[e].empty())
      throw InfeasibleInstance("employee " + std::to_string(e) + " has no feasible row");
    std::stable_sort(patterns[e].begin(), patterns[e].end(),
                     [](const EmployeePattern& a, const EmployeePattern& b) { return a.pref_cost < b.pref_cost; });
  }

  // Minimum pref cost over the employees not yet assigned.
  std::vector<long long> suffix_min_pref(E + 1, 0);
  for (int e = E - 1; e >= 0; --e) suffix_min_pref[e] = suffix_min_pref[e + 1] + patterns[e].front().pref_cost;

  Matrix<int> assigned(D, S, 0);
  std::vector<int> choice(E, 0);
  std::vector<int> best_choice;
  long long best = std::numeric_limits<long long>::max();
  long long nodes = 0;
  bool exhausted = false;

  auto coverage_cost = [&] {
    long long c = 0;
    for (int d = 0; d < D; ++d)
      for (int s = 0; s < S; ++s) {
        const int u = inst.coverage(d, s);
        const int a = assigned(d, s);
        c += static_cast<long long>(std::max(0, u - a)) * inst.understaff_weight +
             static_cast<long long>(std::max(0, a - u)) * inst.overstaff_weight;
      }
    return c;
  };
  // Admissible bound on the final coverage cost with `remaining` employees
  // still to place: each of them covers at most one slot per day and works
  // between min_days and max_days days; existing overstaffing never shrinks.
  const int min_days = (inst.min_hours + inst.hours_per_shift - 1) / inst.hours_per_shift;
  const int max_days = std::min(D, inst.max_hours / inst.hours_per_shift);
  auto coverage_bound = [&](int remaining) {
    long long day_under = 0;
    long long total_deficit = 0;
    long long over = 0;
    for (int d = 0; d < D; ++d) {
      long long deficit = 0;
      for (int s = 0; s < S; ++s) {
        const int gap = inst.coverage(d, s) - assigned(d, s);
        if (gap > 0)
          deficit += gap;
        else
          over += -gap;
      }
      day_under += std::max<long long>(0, deficit - remaining);
      total_deficit += deficit;
    }
    const long long horizon_under = std::max<long long>(0, total_deficit - static_cast<long long>(remaining) * max_days);
    over += std::max<long long>(0, static_cast<long long>(remaining) * min_days - total_deficit);
    return std::max(day_under, horizon_under) * inst.understaff_weight + over * inst.overstaff_weight;
  };
  auto apply = [&](const EmployeePattern& p, int delta) {
    for (int d = 0; d < D; ++d)
      if (is_work(p.row[d])) assigned(d, code(p.row[d]) - 1) += delta;
  };

  auto search = [&](auto&& self, int e, long long pref) -> void {
    if (exhausted) return;
    if (++nodes > node_budget) {
      exhausted = true;
      return;
    }
    if (e == E) {
      const long long total = pref + coverage_cost();
      if (total < best) {
        best = total;
        best_choice = choice;
      }
      return;
    }
    if (pref + suffix_min_pref[e] + coverage_bound(E - e) >= best) return;
    for (int k = 0; k < static_cast<int>(patterns[e].size()); ++k) {
      const EmployeePattern& p = patterns[e][k];
      if (pref + p.pref_cost + suffix_min_pref[e + 1] >= best) break;  // sorted by pref_cost
      choice[e] = k;
      apply(p, +1);
      self(self, e + 1, pref + p.pref_cost);
      apply(p, -1);
      if (exhausted) return;
    }
  };
  search(search, 0, 0);

  if (best_choice.empty()) throw CapacityError("node budget exhausted before any complete assignment");

  OracleResult res;
  res.schedule = Schedule(E, D);
  for (int e = 0; e < E; ++e) {
    const auto& row = patterns[e][best_choice[e]].row;
    for (int d = 0; d < D; ++d) res.schedule(e, d) = row[d];
  }
  res.min_soft = best;
  res.node_count = std::min(nodes, node_budget);
  res.proven = !exhausted;
  return res;
}

// ---------------------------------------------------------------------------
// LP export
// ---------------------------------------------------------------------------

namespace detail {

inline std::string xvar(int e, int d, int s) {
  return "x_" + std::to_string(e + 1) + "_" + std::to_string(d + 1) + "_" + std::to_string(s + 1);
}

inline std::string dsvar(const char* p, int d, int s) {
  return std::string(p) + "_" + std::to_string(d + 1) + "_" + std::to_string(s + 1);
}

/// Accumulates `coef var` terms and wraps long expressions over lines.
class LinearExpr {
 public:
  void add(long long coef, const std::string& var) {
    if (coef == 0) return;
    std::string t;
    if (terms_ == 0)
      t = coef < 0 ? "- " : "";
    else
      t = coef < 0 ? " - " : " + ";
    const long long mag = coef < 0 ? -coef : coef;
    if (mag != 1) t += std::to_string(mag) + " ";
    t += var;
    if (line_len_ + t.size() > 200) {
      text_ += "\n   ";
      line_len_ = 3;
    }
    text_ += t;
    line_len_ += t.size();
    ++terms_;
  }
  bool empty() const { return terms_ == 0; }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
  std::size_t line_len_ = 0;
  int terms_ = 0;
};

}  // namespace detail

/// The full integer program as LP-format text.
inline std::string lp_text(const Instance& inst) {
  inst.validate();
  using detail::xvar;
  const int E = inst.num_employees;
  const int D = inst.num_days;
  const int S = inst.num_shifts;
  std::ostringstream out;

  out << "\\ Staff rostering model: " << E << " employees, " << D << " days\n";
  out << "Minimize\n";
  {
    detail::LinearExpr obj;
    for (int d = 0; d < D; ++d)
      for (int s = 0; s < S; ++s) obj.add(inst.understaff_weight, detail::dsvar("y", d, s));
    for (int d = 0; d < D; ++d)
      for (int s = 0; s < S; ++s) obj.add(inst.overstaff_weight, detail::dsvar("z", d, s));
    for (int e = 0; e < E; ++e)
      for (int d = 0; d < D; ++d)
        for (int s = 0; s < S; ++s) obj.add(inst.pref_off(e, d), xvar(e, d, s));
    out << " obj: " << (obj.empty() ? std::string("0 y_1_1") : obj.str()) << "\n";
  }

  out << "Subject To\n";
  auto row = [&](const std::string& name, const detail::LinearExpr& lhs, const char* sense, long long rhs) {
    out << " " << name << ": " << lhs.str() << " " << sense << " " << rhs << "\n";
  };
  auto tag = [](std::initializer_list<int> ids) {
    std::string s;
    for (int i : ids) s += "_" + std::to_string(i);
    return s;
  };

  for (int e = 0; e < E; ++e)
    for (int d = 0; d < D; ++d) {
      detail::LinearExpr x;
      for (int s = 0; s < S; ++s) x.add(1, xvar(e, d, s));
      row("c1" + tag({e + 1, d + 1}), x, "<=", 1);
    }
  for (int e = 0; e < E; ++e)
    for (int d = 0; d + 1 < D; ++d) {
      detail::LinearExpr x;
      x.add(1, xvar(e, d, code(Shift::Night) - 1));
      x.add(1, xvar(e, d + 1, code(Shift::Morning) - 1));
      row("c2" + tag({e + 1, d + 1}), x, "<=", 1);
    }
  for (int e = 0; e < E; ++e) {
    detail::LinearExpr x;
    for (int d = 0; d < D; ++d)
      for (int s = 0; s < S; ++s) x.add(inst.hours_per_shift, xvar(e, d, s));
    row("c3min" + tag({e + 1}), x, ">=", inst.min_hours);
    row("c3max" + tag({e + 1}), x, "<=", inst.max_hours);
  }
  for (int e = 0; e < E; ++e)
    for (int t = 0; t + inst.max_consecutive < D; ++t) {
      detail::LinearExpr x;
      for (int d = t; d <= t + inst.max_consecutive; ++d)
        for (int s = 0; s < S; ++s) x.add(1, xvar(e, d, s));
      row("c4" + tag({e + 1, t + 1}), x, "<=", inst.max_consecutive);
    }
  // (1 - w_d) + sum_{j=d+1}^{d+t} w_j + (1 - w_{d+t+1}) >= 1
  for (int e = 0; e < E; ++e)
    for (int t = 1; t < inst.min_rest; ++t)
      for (int d = 0; d + t + 1 < D; ++d) {
        detail::LinearExpr x;
        for (int s = 0; s < S; ++s) x.add(-1, xvar(e, d, s));
        for (int j = d + 1; j <= d + t; ++j)
          for (int s = 0; s < S; ++s) x.add(1, xvar(e, j, s));
        for (int s = 0; s < S; ++s) x.add(-1, xvar(e, d + t + 1, s));
        row("c5" + tag({e + 1, t, d + 1}), x, ">=", -1);
      }
  for (int d = 0; d < D; ++d)
    for (int s = 0; s < S; ++s) {
      detail::LinearExpr under;
      under.add(1, detail::dsvar("y", d, s));
      for (int e = 0; e < E; ++e) under.add(1, xvar(e, d, s));
      row("under" + tag({d + 1, s + 1}), under, ">=", inst.coverage(d, s));
      detail::LinearExpr over;
      over.add(1, detail::dsvar("z", d, s));
      for (int e = 0; e < E; ++e) over.add(-1, xvar(e, d, s));
      row("over" + tag({d + 1, s + 1}), over, ">=", -static_cast<long long>(inst.coverage(d, s)));
    }

  out << "Bounds\n";
  for (int d = 0; d < D; ++d)
    for (int s = 0; s < S; ++s) out << " " << detail::dsvar("y", d, s) << " >= 0\n";
  for (int d = 0; d < D; ++d)
    for (int s = 0; s < S; ++s) out << " " << detail::dsvar("z", d, s) << " >= 0\n";

  out << "Binaries\n";
  for (int e = 0; e < E; ++e)
    for (int d = 0; d < D; ++d)
      for (int s = 0; s < S; ++s) out << " " << xvar(e, d, s) << "\n";
  out << "End\n";
  return out.str();
}

inline void export_lp(const Instance& inst, const std::filesystem::path& path) { write_text(path, lp_text(inst)); }

// ---------------------------------------------------------------------------
// Solution import
// ---------------------------------------------------------------------------

struct ImportedSolution {
  Schedule schedule;
  long long min_soft = 0;
};

/// Parses `name value` lines (as written by common MILP solvers) and returns
/// the schedule encoded by the x_e_d_s variables. Lines starting with '#' and
/// variables other than x_* are ignored.
inline ImportedSolution import_solution_text(const Instance& inst, const std::string& text) {
  inst.validate();
  const int E = inst.num_employees;
  const int D = inst.num_days;
  Schedule sched(E, D, Shift::Rest);
  Matrix<int> set_count(E, D, 0);

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name) || name[0] == '#') continue;
    if (name.rfind("x_", 0) != 0) continue;
    double value = 0;
    if (!(ls >> value)) throw InvalidSolution("line " + std::to_string(line_no) + ": missing value for " + name);
    int e = 0, d = 0, s = 0;
    char tail = 0;
    if (std::sscanf(name.c_str(), "x_%d_%d_%d%c", &e, &d, &s, &tail) != 3)
      throw InvalidSolution("line " + std::to_string(line_no) + ": malformed variable name " + name);
    if (e < 1 || e > E || d < 1 || d > D || s < 1 || s > inst.num_shifts)
      throw InvalidSolution("line " + std::to_string(line_no) + ": index out of range in " + name);
    if (value < 0.5) continue;
    if (++set_count(e - 1, d - 1) > 1)
      throw InvalidSolution("C1 violated: employee " + std::to_string(e) + " has two shifts on day " +
                            std::to_string(d));
    sched(e - 1, d - 1) = static_cast<Shift>(s);
  }

  const PenaltyReport r = evaluate(sched, inst);
  if (r.hard_total > 0) {
    std::string msg = "infeasible solution:";
    if (r.c2_count) msg += " C2 violated " + std::to_string(r.c2_count) + "x;";
    if (r.c3_count) msg += " C3 violated " + std::to_string(r.c3_count) + "x;";
    if (r.c4_count) msg += " C4 violated " + std::to_string(r.c4_count) + "x;";
    if (r.c5_count) msg += " C5 violated " + std::to_string(r.c5_count) + "x;";
    msg.pop_back();
    throw InvalidSolution(msg);
  }
  return {std::move(sched), r.soft_unnormalized};
}

inline ImportedSolution import_solution(const Instance& inst, const std::filesystem::path& path) {
  return import_solution_text(inst, read_text(path));
}

}  // namespace roster
