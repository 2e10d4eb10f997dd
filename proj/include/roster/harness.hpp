#pragma once

// Experiment harness: batches of GA runs over (variant, instance, run) grids,
// per-generation aggregation with confidence intervals, best-window summary
// statistics and pairwise Welch comparisons.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "roster/core.hpp"
#include "roster/ga.hpp"
#include "roster/improve.hpp"
#include "roster/io.hpp"
#include "roster/random.hpp"
#include "roster/stats.hpp"

namespace roster {

namespace fs = std::filesystem;

/// Record at the generation with the highest max_fitness among the last
/// `window` records (earliest on ties).
inline GenerationRecord aggregate_best_window(const std::vector<GenerationRecord>& trace, std::size_t window = 1000) {
  if (trace.empty()) throw InvalidInput("aggregate_best_window needs a nonempty trace");
  const std::size_t start = trace.size() - std::min(window, trace.size());
  std::size_t best = start;
  for (std::size_t k = start + 1; k < trace.size(); ++k)
    if (trace[k].max_fitness > trace[best].max_fitness) best = k;
  return trace[best];
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

inline GaConfig ga_config_from_json(const json& j, GaConfig cfg = {}) {
  if (!j.is_object()) throw ConfigurationError("GA config must be a JSON object");
  try {
    if (j.contains("pop_size")) cfg.pop_size = j["pop_size"].get<int>();
    if (j.contains("stop_cond_version")) {
      const int v = j["stop_cond_version"].get<int>();
      if (v != 1 && v != 2) throw ConfigurationError("stop_cond_version must be 1 or 2");
      cfg.stop_cond_version = static_cast<StopVersion>(v);
    }
    if (j.contains("nb_max_epochs")) cfg.nb_max_epochs = j["nb_max_epochs"].get<int>();
    if (j.contains("max_patience")) cfg.max_patience = j["max_patience"].get<int>();
    if (j.contains("probab_crossover")) cfg.probab_crossover = j["probab_crossover"].get<double>();
    if (j.contains("probab_mutation")) cfg.probab_mutation = j["probab_mutation"].get<double>();
    if (j.contains("min_prob_greedy")) cfg.min_prob_greedy = j["min_prob_greedy"].get<double>();
    if (j.contains("use_improver")) cfg.use_improver = j["use_improver"].get<bool>();
    if (j.contains("crossover_mix")) cfg.crossover_mix = j["crossover_mix"].get<std::array<double, 2>>();
    if (j.contains("mutation_mix")) cfg.mutation_mix = j["mutation_mix"].get<std::array<double, 3>>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_wall_seconds") && !j["max_wall_seconds"].is_null())
      cfg.max_wall_seconds = j["max_wall_seconds"].get<double>();
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("GA config: ") + e.what());
  }
  return cfg;
}

inline json ga_config_to_json(const GaConfig& cfg) {
  json j;
  j["pop_size"] = cfg.pop_size;
  j["stop_cond_version"] = static_cast<int>(cfg.stop_cond_version);
  j["nb_max_epochs"] = cfg.nb_max_epochs;
  j["max_patience"] = cfg.max_patience;
  j["probab_crossover"] = cfg.probab_crossover;
  j["probab_mutation"] = cfg.probab_mutation;
  j["min_prob_greedy"] = cfg.min_prob_greedy;
  j["use_improver"] = cfg.use_improver;
  j["crossover_mix"] = cfg.crossover_mix;
  j["mutation_mix"] = cfg.mutation_mix;
  j["seed"] = cfg.seed;
  j["max_wall_seconds"] = cfg.max_wall_seconds ? json(*cfg.max_wall_seconds) : json(nullptr);
  return j;
}

struct VariantSpec {
  std::string name;
  GaConfig ga;
  std::string improver = "none";      // none | repair | neural
  std::optional<std::string> timeboxed_from;  // variant whose run times cap this one
};

struct ExperimentConfig {
  std::vector<fs::path> instances;
  int runs_per_instance = 10;
  std::uint64_t base_seed = 0;
  std::size_t window = 1000;
  std::vector<VariantSpec> variants;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string neural_endpoint;
  int neural_timeout_ms = 30000;

  const VariantSpec* find(const std::string& name) const {
    for (const auto& v : variants)
      if (v.name == name) return &v;
    return nullptr;
  }

  void validate() const {
    if (instances.empty()) throw ConfigurationError("experiment needs at least one instance");
    if (runs_per_instance < 1) throw ConfigurationError("runs_per_instance must be positive");
    if (variants.empty()) throw ConfigurationError("experiment needs at least one variant");
    for (std::size_t a = 0; a < variants.size(); ++a)
      for (std::size_t b = a + 1; b < variants.size(); ++b)
        if (variants[a].name == variants[b].name) throw ConfigurationError("duplicate variant " + variants[a].name);
    for (const auto& v : variants) {
      v.ga.validate();
      if (v.timeboxed_from) {
        const VariantSpec* src = find(*v.timeboxed_from);
        if (!src) throw ConfigurationError("variant " + v.name + ": no matching run source " + *v.timeboxed_from);
        if (src->timeboxed_from) throw ConfigurationError("variant " + v.name + ": source is itself timeboxed");
      }
      if (v.improver == "neural" && neural_endpoint.empty())
        throw ConfigurationError("variant " + v.name + " uses the neural operator but no neural_endpoint is set");
    }
    for (const auto& [a, b] : pairs)
      if (!find(a) || !find(b)) throw ConfigurationError("pair " + a + ":" + b + " names an unknown variant");
  }
};

/// Parses exp.json; relative instance paths resolve against `base_dir`.
inline ExperimentConfig experiment_config_from_json(const json& j, const fs::path& base_dir = {}) {
  ExperimentConfig cfg;
  try {
    for (const auto& p : j.at("instances")) {
      fs::path f = p.get<std::string>();
      cfg.instances.push_back(f.is_relative() && !base_dir.empty() ? base_dir / f : f);
    }
    cfg.runs_per_instance = j.value("runs_per_instance", 10);
    cfg.base_seed = j.value("base_seed", std::uint64_t{0});
    cfg.window = j.value("window", std::size_t{1000});
    cfg.neural_endpoint = j.value("neural_endpoint", std::string{});
    cfg.neural_timeout_ms = j.value("neural_timeout_ms", 30000);
    const GaConfig defaults = j.contains("ga") ? ga_config_from_json(j["ga"]) : GaConfig{};
    for (const auto& v : j.at("variants")) {
      VariantSpec spec;
      spec.name = v.at("name").get<std::string>();
      spec.ga = v.contains("ga") ? ga_config_from_json(v["ga"], defaults) : defaults;
      spec.improver = v.value("improver", std::string("none"));
      spec.ga.use_improver = spec.improver != "none";
      if (v.contains("timeboxed_from")) spec.timeboxed_from = v["timeboxed_from"].get<std::string>();
      cfg.variants.push_back(std::move(spec));
    }
    if (j.contains("pairs"))
      for (const auto& p : j["pairs"]) cfg.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline std::vector<std::pair<std::string, std::string>> parse_pairs(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    if (!item.empty()) {
      const auto colon = item.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
        throw ConfigurationError("pairs must look like a:b,c:d");
      out.emplace_back(item.substr(0, colon), item.substr(colon + 1));
    }
    pos = comma + 1;
  }
  return out;
}

inline std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& variant, const std::string& instance,
                               int run) {
  return base_seed ^ fnv1a(variant + "|" + instance + "|" + std::to_string(run));
}

inline std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') ? c : '_';
  return out;
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

struct RunRecord {
  std::string variant;
  std::string instance;
  int run = 0;
  std::uint64_t seed = 0;
  std::string trace_file;  // relative to the runs directory
  int stop_epoch = 0;
  double total_seconds = 0.0;
  bool reached_optimal = false;
  double best_fitness = 0.0;
};

inline json run_record_to_json(const RunRecord& r) {
  return {{"variant", r.variant},     {"instance", r.instance},          {"run", r.run},
          {"seed", r.seed},           {"trace_file", r.trace_file},      {"stop_epoch", r.stop_epoch},
          {"total_seconds", r.total_seconds}, {"reached_optimal", r.reached_optimal}, {"best_fitness", r.best_fitness}};
}

inline RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.variant = j.at("variant").get<std::string>();
  r.instance = j.at("instance").get<std::string>();
  r.run = j.at("run").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.trace_file = j.at("trace_file").get<std::string>();
  r.stop_epoch = j.at("stop_epoch").get<int>();
  r.total_seconds = j.at("total_seconds").get<double>();
  r.reached_optimal = j.at("reached_optimal").get<bool>();
  r.best_fitness = j.at("best_fitness").get<double>();
  return r;
}

/// Summary metric: label, whether it is wall-clock based, and how to read it.
struct SummaryMetric {
  const char* label;
  bool wall_clock;
  std::optional<double> (*extract)(const GenerationRecord&, const RunRecord&);
};

inline const std::vector<SummaryMetric>& summary_metrics() {
  static const std::vector<SummaryMetric> m{
      {"Fitness mean", false, [](const GenerationRecord& g, const RunRecord&) { return std::optional(g.mean_fitness); }},
      {"Fitness max", false, [](const GenerationRecord& g, const RunRecord&) { return std::optional(g.max_fitness); }},
      {"Soft penalty min", false, [](const GenerationRecord& g, const RunRecord&) { return g.min_soft_feasible; }},
      {"Soft penalty mean", false, [](const GenerationRecord& g, const RunRecord&) { return g.mean_soft_feasible; }},
      {"Hard penalty min", false,
       [](const GenerationRecord& g, const RunRecord&) { return std::optional<double>(g.min_hard); }},
      {"Hard penalty mean", false, [](const GenerationRecord& g, const RunRecord&) { return std::optional(g.mean_hard); }},
      {"Feasible schedules", false,
       [](const GenerationRecord& g, const RunRecord&) { return std::optional<double>(g.num_feasible); }},
      {"Optimal schedules", false,
       [](const GenerationRecord& g, const RunRecord&) {
         return g.num_optimal ? std::optional<double>(*g.num_optimal) : std::nullopt;
       }},
      {"Crowding distance mean", false, [](const GenerationRecord& g, const RunRecord&) { return g.mean_crowding; }},
      {"Crowding distance max", false, [](const GenerationRecord& g, const RunRecord&) { return g.max_crowding; }},
      {"Total time 1 run", true,
       [](const GenerationRecord&, const RunRecord& r) { return std::optional(r.total_seconds); }},
      {"Stop generation", false,
       [](const GenerationRecord&, const RunRecord& r) { return std::optional<double>(r.stop_epoch); }},
  };
  return m;
}

/// Per-generation metrics carried into the aggregate CSV (wall time excluded).
struct TraceMetric {
  const char* name;
  std::optional<double> (*extract)(const GenerationRecord&);
};

inline const std::vector<TraceMetric>& trace_metrics() {
  static const std::vector<TraceMetric> m{
      {"mean_fitness", [](const GenerationRecord& g) { return std::optional(g.mean_fitness); }},
      {"max_fitness", [](const GenerationRecord& g) { return std::optional(g.max_fitness); }},
      {"min_soft_feasible", [](const GenerationRecord& g) { return g.min_soft_feasible; }},
      {"mean_soft_feasible", [](const GenerationRecord& g) { return g.mean_soft_feasible; }},
      {"min_hard", [](const GenerationRecord& g) { return std::optional<double>(g.min_hard); }},
      {"mean_hard", [](const GenerationRecord& g) { return std::optional(g.mean_hard); }},
      {"num_feasible", [](const GenerationRecord& g) { return std::optional<double>(g.num_feasible); }},
      {"num_optimal",
       [](const GenerationRecord& g) { return g.num_optimal ? std::optional<double>(*g.num_optimal) : std::nullopt; }},
      {"mean_crowding", [](const GenerationRecord& g) { return g.mean_crowding; }},
      {"max_crowding", [](const GenerationRecord& g) { return g.max_crowding; }},
  };
  return m;
}

struct LoadedRun {
  RunRecord meta;
  std::vector<GenerationRecord> trace;
};

inline std::vector<std::string> variant_order(const std::vector<LoadedRun>& runs) {
  std::vector<std::string> out;
  for (const auto& r : runs)
    if (std::find(out.begin(), out.end(), r.meta.variant) == out.end()) out.push_back(r.meta.variant);
  return out;
}

inline std::string csv_num(std::optional<double> v) { return v ? detail::fmt_double(*v) : std::string{}; }

/// One row per generation index; for every variant and metric: mean and the
/// 95% interval over runs that reached that generation and report the metric.
inline std::string aggregate_csv(const std::vector<LoadedRun>& runs, double alpha = 0.05) {
  const std::vector<std::string> variants = variant_order(runs);
  std::size_t max_len = 0;
  for (const auto& r : runs) max_len = std::max(max_len, r.trace.size());

  std::string out = "generation";
  for (const auto& v : variants)
    for (const auto& m : trace_metrics())
      for (const char* stat : {"mean", "ci_low", "ci_high"}) out += "," + v + ":" + m.name + ":" + stat;
  out += '\n';

  for (std::size_t g = 0; g < max_len; ++g) {
    out += std::to_string(g);
    for (const auto& v : variants) {
      for (const auto& m : trace_metrics()) {
        std::vector<double> vals;
        for (const auto& r : runs)
          if (r.meta.variant == v && g < r.trace.size())
            if (auto x = m.extract(r.trace[g])) vals.push_back(*x);
        std::optional<double> mean, lo, hi;
        if (!vals.empty()) mean = stats::mean(vals);
        if (vals.size() >= 2) std::tie(lo, hi) = stats::confidence_interval(vals, alpha);
        out += "," + csv_num(mean) + "," + csv_num(lo) + "," + csv_num(hi);
      }
    }
    out += '\n';
  }
  return out;
}

struct SummaryReport {
  json summary;
  std::string csv;
};

inline SummaryReport summarize(const std::vector<LoadedRun>& runs,
                               const std::vector<std::pair<std::string, std::string>>& pairs, std::size_t window) {
  const std::vector<std::string> variants = variant_order(runs);
  for (const auto& [a, b] : pairs)
    if (std::find(variants.begin(), variants.end(), a) == variants.end() ||
        std::find(variants.begin(), variants.end(), b) == variants.end())
      throw ConfigurationError("pair " + a + ":" + b + " names a variant without runs");

  std::map<std::string, std::vector<GenerationRecord>> best;  // per variant, per run
  std::map<std::string, std::vector<const RunRecord*>> metas;
  for (const auto& r : runs) {
    best[r.meta.variant].push_back(aggregate_best_window(r.trace, window));
    metas[r.meta.variant].push_back(&r.meta);
  }

  json rows = json::array();
  std::string csv = "metric,wall_clock";
  for (const auto& v : variants) csv += "," + v + ":n," + v + ":mean," + v + ":std";
  for (const auto& [a, b] : pairs) csv += "," + a + " vs " + b + ":p," + a + " vs " + b + ":significant";
  csv += '\n';

  for (const SummaryMetric& m : summary_metrics()) {
    json row;
    row["metric"] = m.label;
    row["wall_clock"] = m.wall_clock;
    std::map<std::string, std::vector<double>> values;
    json per_variant = json::object();
    csv += std::string(m.label) + "," + (m.wall_clock ? "true" : "false");
    for (const auto& v : variants) {
      auto& vals = values[v];
      for (std::size_t k = 0; k < best[v].size(); ++k)
        if (auto x = m.extract(best[v][k], *metas[v][k])) vals.push_back(*x);
      std::optional<double> mean, sd;
      if (!vals.empty()) mean = stats::mean(vals);
      if (vals.size() >= 2) sd = stats::sample_stddev(vals);
      per_variant[v] = {{"n", vals.size()},
                        {"mean", mean ? json(*mean) : json(nullptr)},
                        {"std", sd ? json(*sd) : json(nullptr)}};
      csv += "," + std::to_string(vals.size()) + "," + csv_num(mean) + "," + csv_num(sd);
    }
    row["variants"] = per_variant;

    json comparisons = json::array();
    for (const auto& [a, b] : pairs) {
      json c{{"a", a}, {"b", b}};
      std::optional<double> p;
      try {
        const auto w = stats::welch_t_test(values[a], values[b]);
        c["t"] = w.t;
        c["dof"] = w.dof;
        p = w.p_two_sided;
      } catch (const DegenerateSample& e) {
        c["note"] = e.what();
      }
      c["p"] = p ? json(*p) : json(nullptr);
      c["significant"] = p && *p < 0.05;
      csv += "," + csv_num(p) + "," + (p && *p < 0.05 ? "true" : "false");
      comparisons.push_back(std::move(c));
    }
    row["comparisons"] = comparisons;
    rows.push_back(std::move(row));
    csv += '\n';
  }

  json summary;
  summary["window"] = window;
  summary["variants"] = variants;
  summary["rows"] = rows;
  return {summary, csv};
}

inline std::vector<LoadedRun> load_runs(const fs::path& runs_dir) {
  const json index = read_json(runs_dir / "runs.json");
  std::vector<LoadedRun> out;
  for (const auto& j : index.at("runs")) {
    LoadedRun r;
    r.meta = run_record_from_json(j);
    r.trace = parse_trace_csv(read_text(runs_dir / r.meta.trace_file));
    out.push_back(std::move(r));
  }
  return out;
}

struct ReportFiles {
  fs::path aggregate_csv;
  fs::path summary_json;
  fs::path summary_csv;
};

inline ReportFiles write_report(const std::vector<LoadedRun>& runs,
                                const std::vector<std::pair<std::string, std::string>>& pairs, std::size_t window,
                                const fs::path& out_dir) {
  ReportFiles f{out_dir / "aggregate.csv", out_dir / "summary.json", out_dir / "summary.csv"};
  write_text(f.aggregate_csv, aggregate_csv(runs));
  const SummaryReport s = summarize(runs, pairs, window);
  write_text(f.summary_json, s.summary.dump(2) + "\n");
  write_text(f.summary_csv, s.csv);
  return f;
}

inline ReportFiles report(const fs::path& runs_dir, const std::vector<std::pair<std::string, std::string>>& pairs,
                          const fs::path& out_dir, std::size_t window = 1000) {
  return write_report(load_runs(runs_dir), pairs, window, out_dir);
}

// ---------------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------------

/// Runs every (variant, instance, run) cell on up to `workers` threads,
/// timeboxed variants after their sources, then writes traces, runs.json and
/// the report into `out_dir`.
inline ReportFiles run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, int workers = 1) {
  cfg.validate();
  workers = std::max(1, workers);

  struct NamedInstance {
    std::string id;
    Instance inst;
  };
  std::vector<NamedInstance> instances;
  for (const auto& p : cfg.instances) {
    NamedInstance ni{p.stem().string(), load_instance(p)};
    for (const auto& other : instances)
      if (other.id == ni.id) throw ConfigurationError("duplicate instance name " + ni.id);
    instances.push_back(std::move(ni));
  }
  for (const auto& v : cfg.variants)
    if (v.ga.stop_cond_version == StopVersion::V1)
      for (const auto& ni : instances)
        if (!ni.inst.reference_min_soft)
          throw ConfigurationError("variant " + v.name + " stops on optimality but instance " + ni.id +
                                   " has no reference_min_soft");

  struct Cell {
    std::size_t variant;
    std::size_t instance;
    int run;
    RunRecord record;
  };
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < cfg.variants.size(); ++v)
    for (std::size_t i = 0; i < instances.size(); ++i)
      for (int k = 0; k < cfg.runs_per_instance; ++k) cells.push_back({v, i, k, {}});

  std::map<std::tuple<std::string, std::string, int>, double> run_seconds;
  std::mutex mu;
  std::vector<std::string> errors;

  auto exec = [&](Cell& c) {
    const VariantSpec& v = cfg.variants[c.variant];
    const NamedInstance& ni = instances[c.instance];
    GaConfig ga = v.ga;
    ga.seed = cell_seed(cfg.base_seed, v.name, ni.id, c.run);
    if (v.timeboxed_from) {
      std::lock_guard lock(mu);
      const auto it = run_seconds.find({*v.timeboxed_from, ni.id, c.run});
      if (it == run_seconds.end())
        throw ConfigurationError("no matching " + *v.timeboxed_from + " run for " + ni.id + " run " +
                                 std::to_string(c.run));
      ga.max_wall_seconds = it->second;
    }
    auto op = make_operator(v.improver, cfg.neural_endpoint, std::chrono::milliseconds(cfg.neural_timeout_ms));
    const RunTrace trace = run(ni.inst, ga, op.get());

    RunRecord& r = c.record;
    r.variant = v.name;
    r.instance = ni.id;
    r.run = c.run;
    r.seed = ga.seed;
    r.trace_file = "traces/" + safe_name(v.name) + "/" + safe_name(ni.id) + "__run" + std::to_string(c.run) + ".csv";
    r.stop_epoch = trace.stop_epoch;
    r.total_seconds = trace.total_seconds;
    r.reached_optimal = trace.reached_optimal;
    r.best_fitness = trace.best_fitness;
    write_text(out_dir / r.trace_file, trace_csv(trace.records));
    std::lock_guard lock(mu);
    run_seconds[{v.name, ni.id, c.run}] = trace.total_seconds;
  };

  auto run_phase = [&](bool timeboxed) {
    std::vector<Cell*> todo;
    for (auto& c : cells)
      if (cfg.variants[c.variant].timeboxed_from.has_value() == timeboxed) todo.push_back(&c);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < todo.size(); k = next++) {
        try {
          exec(*todo[k]);
        } catch (const std::exception& e) {
          std::lock_guard lock(mu);
          errors.push_back(e.what());
        }
      }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(workers, static_cast<int>(todo.size()));
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (!errors.empty()) {
      for (const auto& e : errors)
        if (e.find("no matching") != std::string::npos) throw ConfigurationError(e);
      throw Error("experiment cell failed: " + errors.front());
    }
  };
  run_phase(false);
  run_phase(true);

  json index;
  index["runs"] = json::array();
  std::vector<LoadedRun> loaded;
  for (const auto& c : cells) {
    index["runs"].push_back(run_record_to_json(c.record));
    loaded.push_back({c.record, parse_trace_csv(read_text(out_dir / c.record.trace_file))});
  }
  write_text(out_dir / "runs.json", index.dump(2) + "\n");
  return write_report(loaded, cfg.pairs, cfg.window, out_dir);
}

}  // namespace roster
