#pragma once

// Constraint and objective evaluation for the rostering model.
//
// Hard constraints (each violated instantiation costs 1):
//   C1  at most one shift per employee and day   (structural, never violated)
//   C2  no morning shift directly after a night shift
//   C3  worked hours within [min_hours, max_hours]          (once per employee)
//   C4  no window of max_consecutive+1 days fully worked    (once per window)
//   C5  no interior rest block shorter than min_rest        (once per block)
// Soft objective: weighted under/overstaffing per (day, shift) plus one unit
// per worked day an employee asked to have off.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "roster/core.hpp"

namespace roster {

struct CoverageGap {
  int under = 0;  // y_ds
  int over = 0;   // z_ds
  friend bool operator==(const CoverageGap&, const CoverageGap&) = default;
};

struct PenaltyReport {
  int c2_count = 0;
  int c3_count = 0;
  int c4_count = 0;
  int c5_count = 0;
  int hard_total = 0;
  long long soft_unnormalized = 0;
  double soft_normalized = 0.0;
  Matrix<CoverageGap> per_day_shift_coverage;  // days x shifts
  std::vector<int> per_employee_pref;

  bool feasible() const noexcept { return hard_total == 0; }
  friend bool operator==(const PenaltyReport&, const PenaltyReport&) = default;
};

/// Hard-constraint counts of a single employee's row.
struct RowViolations {
  int c2 = 0;
  int c3 = 0;
  int c4 = 0;
  int c5 = 0;
  int total() const noexcept { return c2 + c3 + c4 + c5; }
};

inline RowViolations row_violations(std::span<const Shift> row, const Instance& inst) {
  RowViolations v;
  const int days = static_cast<int>(row.size());

  int worked = 0;
  for (int d = 0; d < days; ++d) {
    worked += is_work(row[d]);
    if (d + 1 < days && row[d] == Shift::Night && row[d + 1] == Shift::Morning) ++v.c2;
  }
  const int hours = worked * inst.hours_per_shift;
  if (hours < inst.min_hours || hours > inst.max_hours) v.c3 = 1;

  // Sliding count of worked days over windows of length max_consecutive + 1.
  const int win = inst.max_consecutive + 1;
  if (win <= days) {
    int in_window = 0;
    for (int d = 0; d < days; ++d) {
      in_window += is_work(row[d]);
      if (d >= win) in_window -= is_work(row[d - win]);
      if (d >= win - 1 && in_window == win) ++v.c4;
    }
  }

  // Interior rest blocks: work, t rests, work with t < min_rest.
  int prev_work = -1;
  for (int d = 0; d < days; ++d) {
    if (!is_work(row[d])) continue;
    if (prev_work >= 0) {
      const int gap = d - prev_work - 1;
      if (gap >= 1 && gap < inst.min_rest) ++v.c5;
    }
    prev_work = d;
  }
  return v;
}

inline bool row_feasible(std::span<const Shift> row, const Instance& inst) {
  return row_violations(row, inst).total() == 0;
}

/// 1 + the largest raw value the coverage term of (d, s) can take.
inline double coverage_denominator(const Instance& inst, int d, int s) {
  const long long u = inst.coverage(d, s);
  const long long under_max = u * inst.understaff_weight;
  const long long over_max = std::max<long long>(0, inst.num_employees - u) * inst.overstaff_weight;
  return 1.0 + static_cast<double>(std::max(under_max, over_max));
}

inline double pref_denominator(const Instance& inst) { return 1.0 + inst.num_days; }

inline long long coverage_raw(const Instance& inst, const CoverageGap& g) {
  return static_cast<long long>(g.under) * inst.understaff_weight +
         static_cast<long long>(g.over) * inst.overstaff_weight;
}

inline double normalized_soft(const PenaltyReport& report, const Instance& inst) {
  double total = 0.0;
  for (int d = 0; d < inst.num_days; ++d)
    for (int s = 0; s < inst.num_shifts; ++s)
      total += static_cast<double>(coverage_raw(inst, report.per_day_shift_coverage(d, s))) /
               coverage_denominator(inst, d, s);
  for (int p : report.per_employee_pref) total += p / pref_denominator(inst);
  return total;
}

inline PenaltyReport evaluate(const Schedule& schedule, const Instance& inst) {
  inst.check_schedule(schedule);
  PenaltyReport r;
  r.per_day_shift_coverage = Matrix<CoverageGap>(inst.num_days, inst.num_shifts);
  r.per_employee_pref.assign(inst.num_employees, 0);

  Matrix<int> assigned(inst.num_days, inst.num_shifts, 0);
  for (int e = 0; e < inst.num_employees; ++e) {
    auto row = schedule.row(e);
    const RowViolations v = row_violations(row, inst);
    r.c2_count += v.c2;
    r.c3_count += v.c3;
    r.c4_count += v.c4;
    r.c5_count += v.c5;
    for (int d = 0; d < inst.num_days; ++d) {
      if (!is_work(row[d])) continue;
      ++assigned(d, code(row[d]) - 1);
      r.per_employee_pref[e] += inst.pref_off(e, d);
    }
  }
  r.hard_total = r.c2_count + r.c3_count + r.c4_count + r.c5_count;

  long long soft = 0;
  for (int d = 0; d < inst.num_days; ++d) {
    for (int s = 0; s < inst.num_shifts; ++s) {
      const int u = inst.coverage(d, s);
      const int a = assigned(d, s);
      CoverageGap& g = r.per_day_shift_coverage(d, s);
      g.under = std::max(0, u - a);
      g.over = std::max(0, a - u);
      soft += coverage_raw(inst, g);
    }
  }
  for (int p : r.per_employee_pref) soft += p;
  r.soft_unnormalized = soft;
  r.soft_normalized = normalized_soft(r, inst);
  return r;
}

/// Upper-bound constant the fitness is measured against.
constexpr long long max_fitness(long long employees, long long days, long long num_shifts) noexcept {
  return employees * days * (num_shifts + 1) + num_shifts * days + employees;
}

inline double fitness_from_report(const PenaltyReport& r, const Instance& inst) {
  return static_cast<double>(max_fitness(inst.num_employees, inst.num_days, inst.num_shifts)) -
         (static_cast<double>(r.hard_total) + r.soft_normalized);
}

inline double fitness(const Schedule& schedule, const Instance& inst) {
  return fitness_from_report(evaluate(schedule, inst), inst);
}

inline bool is_optimal_report(const PenaltyReport& r, const Instance& inst) {
  if (!inst.reference_min_soft)
    throw ConfigurationError("optimality check needs reference_min_soft on the instance");
  return r.hard_total == 0 && r.soft_unnormalized == *inst.reference_min_soft;
}

inline bool is_optimal(const Schedule& schedule, const Instance& inst) {
  if (!inst.reference_min_soft)
    throw ConfigurationError("optimality check needs reference_min_soft on the instance");
  return is_optimal_report(evaluate(schedule, inst), inst);
}

/// Per-cell share of the penalties. Hard violations add 1.0 to every cell
/// taking part in them; C3 spreads a single unit over the offending cells.
/// Understaffing is left unattributed.
inline Matrix<double> cell_penalty_scores(const Schedule& schedule, const Instance& inst) {
  inst.check_schedule(schedule);
  const int E = inst.num_employees;
  const int D = inst.num_days;
  Matrix<double> score(E, D, 0.0);

  Matrix<int> assigned(D, inst.num_shifts, 0);
  for (int e = 0; e < E; ++e)
    for (int d = 0; d < D; ++d)
      if (is_work(schedule(e, d))) ++assigned(d, code(schedule(e, d)) - 1);

  const int win = inst.max_consecutive + 1;
  for (int e = 0; e < E; ++e) {
    auto row = schedule.row(e);
    int worked = 0;
    for (int d = 0; d < D; ++d) worked += is_work(row[d]);

    for (int d = 0; d + 1 < D; ++d) {
      if (row[d] == Shift::Night && row[d + 1] == Shift::Morning) {
        score(e, d) += 1.0;
        score(e, d + 1) += 1.0;
      }
    }

    const int hours = worked * inst.hours_per_shift;
    if (hours > inst.max_hours && worked > 0) {
      for (int d = 0; d < D; ++d)
        if (is_work(row[d])) score(e, d) += 1.0 / worked;
    } else if (hours < inst.min_hours && worked < D) {
      for (int d = 0; d < D; ++d)
        if (!is_work(row[d])) score(e, d) += 1.0 / (D - worked);
    }

    for (int t = 0; t + win <= D; ++t) {
      bool all = true;
      for (int d = t; d < t + win && all; ++d) all = is_work(row[d]);
      if (all)
        for (int d = t; d < t + win; ++d) score(e, d) += 1.0;
    }

    int prev_work = -1;
    for (int d = 0; d < D; ++d) {
      if (!is_work(row[d])) continue;
      if (prev_work >= 0) {
        const int gap = d - prev_work - 1;
        if (gap >= 1 && gap < inst.min_rest)
          for (int k = prev_work; k <= d; ++k) score(e, k) += 1.0;
      }
      prev_work = d;
    }

    for (int d = 0; d < D; ++d)
      if (is_work(row[d]) && inst.pref_off(e, d)) score(e, d) += 1.0 / pref_denominator(inst);
  }

  for (int e = 0; e < E; ++e) {
    for (int d = 0; d < D; ++d) {
      if (!is_work(schedule(e, d))) continue;
      const int s = code(schedule(e, d)) - 1;
      const int over = assigned(d, s) - inst.coverage(d, s);
      if (over <= 0) continue;
      const double term = static_cast<double>(over) * inst.overstaff_weight /
                          coverage_denominator(inst, d, s);
      score(e, d) += term / assigned(d, s);
    }
  }
  return score;
}

}  // namespace roster
