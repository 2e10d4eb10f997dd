#pragma once

// Random instance generation and construction of (input, target) schedule
// pairs for training an improvement model.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "roster/core.hpp"
#include "roster/io.hpp"
#include "roster/model.hpp"
#include "roster/random.hpp"

namespace roster {

/// Instance with the reference parameters (b_min=32, b_max=48, c_max=5,
/// o_min=2, v_min=100, v_max=1 at 7 days). Hour bounds scale with the
/// horizon for other lengths; coverage is floor(E / |S|) everywhere and
/// day-off requests are fair coin flips.
inline Instance gen_instance(int employees, int days, std::uint64_t seed) {
  if (employees < 1 || days < 1) throw InvalidInput("gen_instance needs employees >= 1 and days >= 1");
  Instance inst;
  inst.num_employees = employees;
  inst.num_days = days;
  inst.num_shifts = kNumShifts;
  inst.hours_per_shift = 8;
  inst.min_hours = 32 * days / 7;
  inst.max_hours = std::min(48 * days / 7, 8 * days);
  inst.max_consecutive = 5;
  inst.min_rest = 2;
  inst.understaff_weight = 100;
  inst.overstaff_weight = 1;
  inst.coverage = Matrix<int>(days, kNumShifts, employees / kNumShifts);
  inst.pref_off = Matrix<int>(employees, days, 0);
  Rng rng(seed);
  for (int e = 0; e < employees; ++e)
    for (int d = 0; d < days; ++d) inst.pref_off(e, d) = static_cast<int>(uniform_int(rng, 0, 1));
  inst.validate();
  return inst;
}

namespace detail {

inline Shift different_code(Rng& rng, Shift current) {
  return static_cast<Shift>((code(current) + 1 + uniform_index(rng, kNumCodes - 1)) % kNumCodes);
}

}  // namespace detail

/// `count` distinct feasible variants of a feasible schedule, each obtained by
/// 1..3*D feasibility-preserving random cell changes.
inline std::vector<Schedule> perturb_feasible(const Schedule& optimal, const Instance& inst, int count,
                                              std::uint64_t seed) {
  inst.check_schedule(optimal);
  if (count < 1) throw InvalidInput("perturb_feasible needs count >= 1");
  if (evaluate(optimal, inst).hard_total != 0) throw InvalidInput("perturb_feasible needs a feasible schedule");

  const int E = inst.num_employees;
  const int D = inst.num_days;
  const long long max_attempts = 1000LL * count;
  const long long max_draws = 100LL * E * D + 1000;

  Rng rng(seed);
  std::unordered_set<Schedule, ScheduleHash> seen{optimal};
  std::vector<Schedule> out;
  out.reserve(count);

  for (long long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    const int changes = static_cast<int>(uniform_int(rng, 1, 3LL * D));
    Schedule s = optimal;
    int accepted = 0;
    for (long long draw = 0; draw < max_draws && accepted < changes; ++draw) {
      const int e = uniform_index(rng, E);
      const int d = uniform_index(rng, D);
      const Shift old = s(e, d);
      s(e, d) = detail::different_code(rng, old);
      if (row_feasible(s.row(e), inst))
        ++accepted;
      else
        s(e, d) = old;
    }
    if (accepted < changes) continue;
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  if (static_cast<int>(out.size()) < count)
    throw GenerationExhausted("perturb_feasible produced " + std::to_string(out.size()) + " of " +
                              std::to_string(count) + " distinct feasible variants");
  return out;
}

struct UnfeasibleResult {
  Schedule schedule;
  int mutations = 0;
};

inline UnfeasibleResult make_unfeasible_counted(const Schedule& feasible, const Instance& inst,
                                                std::uint64_t seed) {
  inst.check_schedule(feasible);
  if (evaluate(feasible, inst).hard_total != 0) throw InvalidInput("make_unfeasible needs a feasible schedule");
  Rng rng(seed);
  Schedule s = feasible;
  for (int m = 1; m <= 100; ++m) {
    const int e = uniform_index(rng, inst.num_employees);
    const int d = uniform_index(rng, inst.num_days);
    s(e, d) = detail::different_code(rng, s(e, d));
    if (evaluate(s, inst).hard_total > 0) return {std::move(s), m};
  }
  throw GenerationExhausted("schedule still feasible after 100 random mutations");
}

inline Schedule make_unfeasible(const Schedule& feasible, const Instance& inst, std::uint64_t seed) {
  return make_unfeasible_counted(feasible, inst, seed).schedule;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

enum class PairKind { UnfeasibleToFeasible, FeasibleToOptimal };

inline const char* to_string(PairKind k) {
  return k == PairKind::UnfeasibleToFeasible ? "unfeasible_to_feasible" : "feasible_to_optimal";
}

struct DatasetRecord {
  std::string instance_id;
  Schedule input;
  Schedule target;
  PairKind kind = PairKind::UnfeasibleToFeasible;
};

struct SplitSpec {
  double train_frac = 0.8;
  double valid_frac = 0.1;
  double test_frac = 0.1;

  void validate() const {
    if (train_frac < 0 || valid_frac < 0 || test_frac < 0)
      throw InvalidInput("split fractions must be nonnegative");
    if (std::abs(train_frac + valid_frac + test_frac - 1.0) > 1e-9)
      throw InvalidInput("split fractions must sum to 1");
  }
};

struct SolvedInstance {
  std::string id;
  Instance instance;
  Schedule optimal;
};

struct Dataset {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> valid;
  std::vector<DatasetRecord> test;
};

inline Dataset build_dataset(const std::vector<SolvedInstance>& instances, int per_optimal, std::uint64_t seed,
                             const SplitSpec& split = {}) {
  split.validate();
  std::vector<DatasetRecord> all;
  all.reserve(instances.size() * 2 * static_cast<std::size_t>(per_optimal));

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const SolvedInstance& si = instances[i];
    if (!is_optimal(si.optimal, si.instance))
      throw InvalidInput("instance " + si.id + ": schedule is not optimal for its reference_min_soft");
    const std::uint64_t inst_seed = splitmix64(seed ^ splitmix64(i + 1));
    const std::vector<Schedule> feasibles = perturb_feasible(si.optimal, si.instance, per_optimal, inst_seed);
    for (std::size_t j = 0; j < feasibles.size(); ++j) {
      Schedule unf = make_unfeasible(feasibles[j], si.instance, splitmix64(inst_seed + j + 1));
      all.push_back({si.id, std::move(unf), feasibles[j], PairKind::UnfeasibleToFeasible});
      all.push_back({si.id, feasibles[j], si.optimal, PairKind::FeasibleToOptimal});
    }
  }

  Rng rng(seed);
  shuffle(rng, all);
  const std::size_t n = all.size();
  const auto n_train = static_cast<std::size_t>(std::floor(split.train_frac * n + 0.5));
  const auto n_valid = std::min(n - n_train, static_cast<std::size_t>(std::floor(split.valid_frac * n + 0.5)));

  Dataset ds;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dst = k < n_train ? ds.train : (k < n_train + n_valid ? ds.valid : ds.test);
    dst.push_back(std::move(all[k]));
  }
  return ds;
}

inline std::string record_to_json_line(const DatasetRecord& r) {
  nlohmann::ordered_json j;
  j["instance_id"] = r.instance_id;
  j["kind"] = to_string(r.kind);
  j["input"] = schedule_to_json(r.input);
  j["target"] = schedule_to_json(r.target);
  return j.dump();
}

/// Writes train/valid/test JSON-lines files and manifest.json into `dir`.
/// `instance_files` maps instance ids to the files they were read from.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir,
                          const std::vector<std::pair<std::string, std::string>>& instance_files,
                          const SplitSpec& split, int per_optimal, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "roster-dataset/1";
  manifest["seed"] = seed;
  manifest["per_optimal"] = per_optimal;
  manifest["fractions"] = {split.train_frac, split.valid_frac, split.test_frac};
  nlohmann::ordered_json inst = nlohmann::ordered_json::array();
  for (const auto& [id, file] : instance_files) inst.push_back({{"instance_id", id}, {"file", file}});
  manifest["instances"] = inst;

  nlohmann::ordered_json splits = nlohmann::ordered_json::object();
  auto emit = [&](const char* name, const std::vector<DatasetRecord>& recs) {
    std::string text;
    std::vector<std::string> ids;
    for (const auto& r : recs) {
      text += record_to_json_line(r);
      text += '\n';
      if (std::find(ids.begin(), ids.end(), r.instance_id) == ids.end()) ids.push_back(r.instance_id);
    }
    std::sort(ids.begin(), ids.end());
    const std::string file = std::string(name) + ".jsonl";
    write_text(dir / file, text);
    splits[name] = {{"file", file}, {"records", recs.size()}, {"instance_ids", ids}};
  };
  emit("train", ds.train);
  emit("valid", ds.valid);
  emit("test", ds.test);
  manifest["splits"] = splits;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace roster
