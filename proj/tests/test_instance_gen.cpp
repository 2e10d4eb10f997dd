#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include <unistd.h>

#include "roster/roster.hpp"

using namespace roster;
namespace fs = std::filesystem;

namespace {

/// Feasible 100x7 roster: each row works five days in one shift type with a
/// single two-day rest block, rotated across employees.
Schedule rotating_roster(const Instance& in) {
  const int base[7] = {1, 1, 1, 1, 0, 0, 1};
  Schedule s(in.num_employees, 7);
  for (int e = 0; e < in.num_employees; ++e)
    for (int d = 0; d < 7; ++d)
      s(e, d) = base[(d + e) % 7] ? static_cast<Shift>(1 + e % 3) : Shift::Rest;
  return s;
}

SolvedInstance solved(const std::string& id, std::uint64_t seed) {
  SolvedInstance si{id, gen_instance(4, 5, seed), {}};
  const OracleResult r = solve_exact(si.instance);
  si.instance.reference_min_soft = r.min_soft;
  si.optimal = r.schedule;
  return si;
}

}  // namespace

TEST(GenInstance, ReferenceParameters) {
  const Instance in = gen_instance(100, 7, 3);
  EXPECT_EQ(in.min_hours, 32);
  EXPECT_EQ(in.max_hours, 48);
  EXPECT_EQ(in.max_consecutive, 5);
  EXPECT_EQ(in.min_rest, 2);
  EXPECT_EQ(in.understaff_weight, 100);
  EXPECT_EQ(in.overstaff_weight, 1);
  EXPECT_EQ(in.hours_per_shift, 8);
  for (int v : in.coverage.flat()) EXPECT_EQ(v, 33);
  int ones = 0;
  for (int v : in.pref_off.flat()) {
    EXPECT_TRUE(v == 0 || v == 1);
    ones += v;
  }
  EXPECT_GT(ones, 280);  // 700 fair coins: mean 350, sd ~13
  EXPECT_LT(ones, 420);
  EXPECT_EQ(gen_instance(100, 7, 3).pref_off, in.pref_off);
  EXPECT_NE(gen_instance(100, 7, 4).pref_off, in.pref_off);
  EXPECT_THROW(gen_instance(0, 7, 0), InvalidInput);
}

TEST(Perturb, DistinctFeasibleVariantsOnReferenceScale) {
  const Instance in = gen_instance(100, 7, 0);
  const Schedule base = rotating_roster(in);
  ASSERT_EQ(evaluate(base, in).hard_total, 0);
  const auto out = perturb_feasible(base, in, 250, 1);
  ASSERT_EQ(out.size(), 250u);
  std::set<std::vector<Shift>> seen;
  for (const Schedule& s : out) {
    EXPECT_EQ(evaluate(s, in).hard_total, 0);
    EXPECT_NE(s, base);
    const std::size_t h = hamming(s, base);
    EXPECT_GE(h, 1u);
    EXPECT_LE(h, 21u);
    seen.insert({s.flat().begin(), s.flat().end()});
  }
  EXPECT_EQ(seen.size(), 250u);
  EXPECT_EQ(perturb_feasible(base, in, 5, 9), perturb_feasible(base, in, 5, 9));
}

TEST(Perturb, ExhaustionAndPreconditions) {
  // One employee, one day, hours pinned: only the three working codes are feasible.
  Instance in = gen_instance(1, 1, 0);
  in.min_hours = 8;
  in.max_hours = 8;
  const Schedule base(1, 1, Shift::Morning);
  EXPECT_EQ(perturb_feasible(base, in, 2, 0).size(), 2u);
  EXPECT_THROW(perturb_feasible(base, in, 3, 0), GenerationExhausted);
  EXPECT_THROW(perturb_feasible(Schedule(1, 1, Shift::Rest), in, 1, 0), InvalidInput);
  EXPECT_THROW(perturb_feasible(base, in, 0, 0), InvalidInput);
}

TEST(MakeUnfeasible, BreaksFeasibility) {
  const Instance in = gen_instance(100, 7, 0);
  const Schedule base = rotating_roster(in);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = make_unfeasible_counted(base, in, seed);
    EXPECT_GT(evaluate(r.schedule, in).hard_total, 0);
    EXPECT_GE(r.mutations, 1);
    EXPECT_LE(hamming(r.schedule, base), static_cast<std::size_t>(r.mutations));
  }
  Schedule bad = base;
  bad(0, 0) = Shift::Night;
  bad(0, 1) = Shift::Morning;
  EXPECT_THROW(make_unfeasible(bad, in, 0), InvalidInput);
}

TEST(Dataset, CountsKindsAndSplits) {
  const std::vector<SolvedInstance> insts{solved("a", 1), solved("b", 2)};
  const Dataset ds = build_dataset(insts, 10, 7, SplitSpec{0.5, 0.25, 0.25});
  EXPECT_EQ(ds.train.size(), 20u);
  EXPECT_EQ(ds.valid.size(), 10u);
  EXPECT_EQ(ds.test.size(), 10u);
  int u2f = 0, f2o = 0;
  for (const auto* part : {&ds.train, &ds.valid, &ds.test})
    for (const DatasetRecord& r : *part) {
      const Instance& in = r.instance_id == "a" ? insts[0].instance : insts[1].instance;
      if (r.kind == PairKind::UnfeasibleToFeasible) {
        ++u2f;
        EXPECT_GT(evaluate(r.input, in).hard_total, 0);
        EXPECT_EQ(evaluate(r.target, in).hard_total, 0);
      } else {
        ++f2o;
        EXPECT_EQ(evaluate(r.input, in).hard_total, 0);
        EXPECT_TRUE(is_optimal(r.target, in));
      }
    }
  EXPECT_EQ(u2f, 20);
  EXPECT_EQ(f2o, 20);
  const Dataset again = build_dataset(insts, 10, 7, SplitSpec{0.5, 0.25, 0.25});
  ASSERT_EQ(again.train.size(), ds.train.size());
  for (std::size_t k = 0; k < ds.train.size(); ++k) EXPECT_EQ(record_to_json_line(again.train[k]), record_to_json_line(ds.train[k]));
  EXPECT_THROW(build_dataset(insts, 1, 0, SplitSpec{0.5, 0.5, 0.5}), InvalidInput);
  SolvedInstance wrong = insts[0];
  wrong.instance.reference_min_soft = *wrong.instance.reference_min_soft + 1;
  EXPECT_THROW(build_dataset({wrong}, 1, 0), InvalidInput);
}

TEST(Dataset, WrittenFiles) {
  const fs::path dir = fs::temp_directory_path() / ("roster_ds_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const std::vector<SolvedInstance> insts{solved("a", 3)};
  const SplitSpec split{0.8, 0.1, 0.1};
  const Dataset ds = build_dataset(insts, 5, 1, split);
  write_dataset(ds, dir, {{"a", "/x/a.json"}}, split, 5, 1);
  const json manifest = read_json(dir / "manifest.json");
  EXPECT_EQ(manifest["splits"]["train"]["records"], 8);
  EXPECT_EQ(manifest["splits"]["valid"]["records"], 1);
  EXPECT_EQ(manifest["splits"]["test"]["records"], 1);
  EXPECT_EQ(manifest["per_optimal"], 5);
  const std::string train = read_text(dir / "train.jsonl");
  EXPECT_EQ(std::count(train.begin(), train.end(), '\n'), 8);
  const json first = json::parse(train.substr(0, train.find('\n')));
  EXPECT_EQ(first["instance_id"], "a");
  EXPECT_EQ(first["input"].size(), 4u);
  EXPECT_EQ(first["target"][0].size(), 5u);
  fs::remove_all(dir);
}
