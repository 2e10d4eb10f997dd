#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lp_oracle.hpp"
#include "oracles.hpp"
#include "roster/roster.hpp"

using namespace roster;

namespace {

std::vector<std::vector<int>> as_rows(const std::vector<EmployeePattern>& ps) {
  std::vector<std::vector<int>> out;
  for (const auto& p : ps) {
    std::vector<int> r;
    for (Shift s : p.row) r.push_back(code(s));
    out.push_back(r);
  }
  return out;
}

// Random instance whose cross product stays small enough to enumerate.
Instance small_instance(std::mt19937_64& g, int max_e, int max_d, double max_product) {
  for (;;) {
    Instance in = oracle::random_instance(g, max_e, max_d, 2);
    const auto rows = oracle::brute_rows(in);
    double product = 1;
    for (int e = 0; e < in.num_employees; ++e) product *= static_cast<double>(rows.size());
    if (!rows.empty() && product <= max_product) return in;
  }
}

}  // namespace

TEST(Patterns, MatchBruteForceFilter) {
  std::mt19937_64 g(21);
  for (int k = 0; k < 300; ++k) {
    const Instance in = oracle::random_instance(g, 2, 6);
    auto lib = as_rows(enumerate_patterns(in, 0));
    auto ref = oracle::brute_rows(in);
    std::sort(ref.begin(), ref.end());
    ASSERT_TRUE(std::is_sorted(lib.begin(), lib.end()));
    ASSERT_EQ(lib, ref);
    for (const auto& p : enumerate_patterns(in, in.num_employees - 1)) {
      long long c = 0;
      for (int d = 0; d < in.num_days; ++d) c += is_work(p.row[d]) * in.pref_off(in.num_employees - 1, d);
      ASSERT_EQ(p.pref_cost, c);
    }
  }
}

TEST(Patterns, CapacityLimits) {
  Instance in = gen_instance(2, 13, 0);
  EXPECT_THROW(enumerate_patterns(in, 0), CapacityError);
  Instance wide = gen_instance(9, 3, 0);
  EXPECT_THROW(solve_exact(wide), CapacityError);
}

TEST(SolveExact, MatchesCrossProductEnumeration) {
  std::mt19937_64 g(22);
  for (int k = 0; k < 30; ++k) {
    const Instance in = small_instance(g, 3, 5, 2e6);
    const OracleResult r = solve_exact(in);
    ASSERT_TRUE(r.proven);
    EXPECT_EQ(r.min_soft, oracle::brute_min_soft(in)) << "case " << k;
    const PenaltyReport rep = evaluate(r.schedule, in);
    EXPECT_EQ(rep.hard_total, 0);
    EXPECT_EQ(rep.soft_unnormalized, r.min_soft);
  }
}

TEST(SolveExact, InfeasibleInstanceIsReported) {
  Instance in = gen_instance(2, 3, 0);
  in.min_hours = 24;
  in.max_hours = 24;
  in.max_consecutive = 2;  // three worked days in a row are forbidden
  EXPECT_THROW(solve_exact(in), InfeasibleInstance);
}

TEST(SolveExact, BudgetExhaustionIsNotProven) {
  const Instance in = gen_instance(4, 5, 0);
  const OracleResult r = solve_exact(in, 10);
  EXPECT_FALSE(r.proven);
}

TEST(SolveExact, ReferenceInstance4x5) {
  const Instance in = gen_instance(4, 5, 0);
  EXPECT_EQ(in.min_hours, 22);
  EXPECT_EQ(in.max_hours, 34);
  const OracleResult r = solve_exact(in);
  ASSERT_TRUE(r.proven);
  EXPECT_EQ(r.min_soft, 103);
}

TEST(LpExport, StructureAndNames) {
  const Instance in = gen_instance(2, 3, 1);
  const std::string lp = lp_text(in);
  for (const char* s : {"Minimize", "Subject To", "Bounds", "Binaries", "End", " c1_1_1:", " c2_2_2:", " c3min_1:",
                        " c3max_2:", " under_3_3:", " over_1_2:", " x_2_3_3\n"})
    EXPECT_NE(lp.find(s), std::string::npos) << s;
  for (std::size_t a = 0, b; a < lp.size(); a = b + 1) {
    b = lp.find('\n', a);
    EXPECT_LE(b - a, 260u);
  }
  const lp_oracle::Model m = lp_oracle::parse(lp);
  EXPECT_EQ(m.names.size(), 2u * 3 * 3 + 2 * 3 * 3);
  // c1 + c2 + c3 (2 per employee) + c5 (t=1, d=1) + coverage (2 per (d,s)); no c4 with c_max=5 > D-1.
  EXPECT_EQ(m.rows.size(), 6u + 4u + 4u + 2u + 18u);
}

TEST(LpRoundTrip, BruteForceLpOptimumMatchesExact) {
  std::mt19937_64 g(23);
  for (int k = 0; k < 6; ++k) {
    Instance in = oracle::random_instance(g, 2, 4, 2);
    if (oracle::brute_rows(in).empty()) {
      --k;
      continue;
    }
    const OracleResult exact = solve_exact(in);
    const lp_oracle::Model m = lp_oracle::parse(lp_text(in));
    const lp_oracle::Solution sol = lp_oracle::solve(m);
    ASSERT_TRUE(sol.feasible);
    EXPECT_DOUBLE_EQ(sol.objective, static_cast<double>(exact.min_soft));
    const ImportedSolution imp = import_solution_text(in, lp_oracle::solution_text(m, sol));
    EXPECT_EQ(imp.min_soft, exact.min_soft);
  }
}

TEST(ImportSolution, RejectsClashesAndInfeasibility) {
  Instance in = gen_instance(1, 3, 0);
  in.min_hours = 0;
  in.max_hours = 24;
  in.min_rest = 1;
  EXPECT_THROW(import_solution_text(in, "x_1_1_1 1\nx_1_1_2 1\n"), InvalidSolution);
  try {
    import_solution_text(in, "# comment\nx_1_1_3 1\nx_1_2_1 1\ny_1_1 0\n");
    FAIL() << "expected InvalidSolution";
  } catch (const InvalidSolution& e) {
    EXPECT_NE(std::string(e.what()).find("C2"), std::string::npos);
  }
  EXPECT_THROW(import_solution_text(in, "x_1_9_1 1\n"), InvalidSolution);
  EXPECT_THROW(import_solution_text(in, "x_1_1 1\n"), InvalidSolution);
  const ImportedSolution ok = import_solution_text(in, "x_1_1_1 0.9999\nx_1_2_2 1e-9\n");
  EXPECT_EQ(ok.schedule(0, 0), Shift::Morning);
  EXPECT_EQ(ok.schedule(0, 1), Shift::Rest);
  EXPECT_EQ(ok.min_soft, evaluate(ok.schedule, in).soft_unnormalized);
}
