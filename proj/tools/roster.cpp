// roster: command-line front end for instance generation, exact solving,
// LP export/import, GA runs and experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roster/roster.hpp"

namespace fs = std::filesystem;
using namespace roster;

namespace {

SplitSpec parse_split(const std::string& text) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    v.push_back(std::stod(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (v.size() != 3) throw ConfigurationError("--split needs three comma-separated fractions");
  SplitSpec s{v[0], v[1], v[2]};
  s.validate();
  return s;
}

json report_to_json(const PenaltyReport& r) {
  return {{"c2_count", r.c2_count},
          {"c3_count", r.c3_count},
          {"c4_count", r.c4_count},
          {"c5_count", r.c5_count},
          {"hard_total", r.hard_total},
          {"soft_unnormalized", r.soft_unnormalized},
          {"soft_normalized", r.soft_normalized}};
}

/// Instance files in `dir` (excluding *.schedule.json), sorted by name.
std::vector<fs::path> instance_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (!entry.is_regular_file() || p.extension() != ".json") continue;
    const std::string name = p.filename().string();
    if (name.size() > 14 && name.ends_with(".schedule.json")) continue;
    if (name == "manifest.json") continue;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staff rostering: GA with pluggable improvement operators"};
  app.require_subcommand(1);

  // gen-instance
  int gi_employees = 100, gi_days = 7;
  std::uint64_t gi_seed = 0;
  std::string gi_out;
  bool gi_solve = false;
  auto* gen_instance_cmd = app.add_subcommand("gen-instance", "Generate a random instance");
  gen_instance_cmd->add_option("--employees", gi_employees, "Number of employees")->check(CLI::PositiveNumber);
  gen_instance_cmd->add_option("--days", gi_days, "Number of days")->check(CLI::PositiveNumber);
  gen_instance_cmd->add_option("--seed", gi_seed, "Random seed");
  gen_instance_cmd->add_option("--out", gi_out, "Output instance JSON")->required();
  gen_instance_cmd->add_flag("--solve", gi_solve,
                             "Solve exactly (tiny instances), store reference_min_soft and write <stem>.schedule.json");

  // gen-dataset
  std::string gd_dir, gd_out, gd_split = "0.8,0.1,0.1";
  int gd_per_optimal = 250;
  std::uint64_t gd_seed = 0;
  auto* gen_dataset_cmd = app.add_subcommand("gen-dataset", "Build (input, target) schedule-pair datasets");
  gen_dataset_cmd->add_option("--instances-dir", gd_dir, "Directory of instance JSON files")->required();
  gen_dataset_cmd->add_option("--per-optimal", gd_per_optimal, "Feasible perturbations per optimum")
      ->check(CLI::PositiveNumber);
  gen_dataset_cmd->add_option("--seed", gd_seed, "Random seed");
  gen_dataset_cmd->add_option("--split", gd_split, "train,valid,test fractions");
  gen_dataset_cmd->add_option("--out-dir", gd_out, "Output directory")->required();

  // solve-exact
  std::string se_instance, se_out;
  long long se_budget = std::numeric_limits<long long>::max();
  bool se_write_ref = false;
  auto* solve_cmd = app.add_subcommand("solve-exact", "Exact branch and bound for tiny instances");
  solve_cmd->add_option("--instance", se_instance, "Instance JSON")->required();
  solve_cmd->add_option("--out", se_out, "Output schedule JSON")->required();
  solve_cmd->add_option("--budget", se_budget, "Node limit");
  solve_cmd->add_flag("--write-reference", se_write_ref, "Store the proven optimum in the instance file");

  // export-lp
  std::string lp_instance, lp_out;
  auto* export_cmd = app.add_subcommand("export-lp", "Write the integer program in LP format");
  export_cmd->add_option("--instance", lp_instance, "Instance JSON")->required();
  export_cmd->add_option("--out", lp_out, "Output .lp file")->required();

  // import-solution
  std::string is_instance, is_solution, is_out_schedule, is_out_instance;
  auto* import_cmd = app.add_subcommand("import-solution", "Read an external solver's solution file");
  import_cmd->add_option("--instance", is_instance, "Instance JSON")->required();
  import_cmd->add_option("--solution", is_solution, "Solution file (name value lines)")->required();
  import_cmd->add_option("--out-schedule", is_out_schedule, "Write the schedule JSON here");
  import_cmd->add_option("--out-instance", is_out_instance, "Write the instance with reference_min_soft here");

  // evaluate
  std::string ev_instance, ev_schedule;
  auto* eval_cmd = app.add_subcommand("evaluate", "Penalty report of a schedule");
  eval_cmd->add_option("--instance", ev_instance, "Instance JSON")->required();
  eval_cmd->add_option("--schedule", ev_schedule, "Schedule JSON")->required();

  // build-graph
  std::string bg_instance, bg_schedule, bg_out;
  auto* graph_cmd = app.add_subcommand("build-graph", "Graph payload of a schedule (protocol v1 JSON)");
  graph_cmd->add_option("--instance", bg_instance, "Instance JSON")->required();
  graph_cmd->add_option("--schedule", bg_schedule, "Schedule JSON")->required();
  graph_cmd->add_option("--out", bg_out, "Output file (stdout when omitted)");

  // run-ga
  std::string rg_instance, rg_config, rg_improver = "none", rg_endpoint, rg_trace, rg_summary;
  std::uint64_t rg_seed = 0;
  double rg_wall = -1;
  int rg_pop = 0, rg_epochs = 0, rg_patience = 0, rg_stop = 0, rg_timeout_ms = 30000;
  auto* run_cmd = app.add_subcommand("run-ga", "Run the genetic algorithm on one instance");
  run_cmd->add_option("--instance", rg_instance, "Instance JSON")->required();
  run_cmd->add_option("--config", rg_config, "GA config JSON");
  run_cmd->add_option("--use-improver", rg_improver, "none|repair|neural")
      ->check(CLI::IsMember({"none", "repair", "neural"}));
  run_cmd->add_option("--neural-endpoint", rg_endpoint, "host:port or exec:<command>");
  run_cmd->add_option("--neural-timeout-ms", rg_timeout_ms, "Per-request timeout");
  run_cmd->add_option("--seed", rg_seed, "Random seed");
  run_cmd->add_option("--trace-out", rg_trace, "Per-generation trace CSV");
  run_cmd->add_option("--summary-out", rg_summary, "Run summary JSON");
  run_cmd->add_option("--max-wall-seconds", rg_wall, "Wall-clock cap");
  run_cmd->add_option("--pop-size", rg_pop, "Override pop_size");
  run_cmd->add_option("--max-epochs", rg_epochs, "Override nb_max_epochs");
  run_cmd->add_option("--max-patience", rg_patience, "Override max_patience");
  run_cmd->add_option("--stop-version", rg_stop, "Override stop_cond_version (1 or 2)");

  // experiment
  std::string ex_config, ex_out;
  int ex_workers = 1;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a grid of GA runs and write the report");
  exp_cmd->add_option("--config", ex_config, "Experiment JSON")->required();
  exp_cmd->add_option("--workers", ex_workers, "Parallel runs")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--out", ex_out, "Output directory")->required();

  // report
  std::string rp_runs, rp_pairs, rp_out;
  std::size_t rp_window = 1000;
  auto* report_cmd = app.add_subcommand("report", "Rebuild aggregate and summary from run traces");
  report_cmd->add_option("--runs", rp_runs, "Directory written by experiment")->required();
  report_cmd->add_option("--pairs", rp_pairs, "Comparisons, e.g. v1:v1+op,v2:v2+op");
  report_cmd->add_option("--out", rp_out, "Output directory")->required();
  report_cmd->add_option("--window", rp_window, "Best-fitness window");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_instance_cmd) {
      Instance inst = gen_instance(gi_employees, gi_days, gi_seed);
      if (gi_solve) {
        const OracleResult r = solve_exact(inst);
        if (!r.proven) throw Error("exact search did not finish");
        inst.reference_min_soft = r.min_soft;
        fs::path sched = fs::path(gi_out).replace_extension(".schedule.json");
        save_schedule(r.schedule, sched);
      }
      save_instance(inst, gi_out);
    } else if (*gen_dataset_cmd) {
      const SplitSpec split = parse_split(gd_split);
      std::vector<SolvedInstance> solved;
      std::vector<std::pair<std::string, std::string>> files;
      for (const fs::path& p : instance_files(gd_dir)) {
        SolvedInstance si{p.stem().string(), load_instance(p), {}};
        const fs::path sched = fs::path(p).replace_extension(".schedule.json");
        if (fs::exists(sched) && si.instance.reference_min_soft) {
          si.optimal = load_schedule(sched);
        } else {
          const OracleResult r = solve_exact(si.instance);
          if (!r.proven) throw Error(p.string() + ": exact search did not finish");
          si.instance.reference_min_soft = r.min_soft;
          si.optimal = r.schedule;
        }
        files.emplace_back(si.id, fs::absolute(p).string());
        solved.push_back(std::move(si));
      }
      if (solved.empty()) throw ConfigurationError("no instance files in " + gd_dir);
      const Dataset ds = build_dataset(solved, gd_per_optimal, gd_seed, split);
      write_dataset(ds, gd_out, files, split, gd_per_optimal, gd_seed);
      std::printf("train %zu valid %zu test %zu records\n", ds.train.size(), ds.valid.size(), ds.test.size());
    } else if (*solve_cmd) {
      Instance inst = load_instance(se_instance);
      const OracleResult r = solve_exact(inst, se_budget);
      save_schedule(r.schedule, se_out);
      if (se_write_ref && r.proven) {
        inst.reference_min_soft = r.min_soft;
        save_instance(inst, se_instance);
      }
      std::cout << json{{"min_soft", r.min_soft}, {"proven", r.proven}, {"node_count", r.node_count}}.dump() << "\n";
    } else if (*export_cmd) {
      export_lp(load_instance(lp_instance), lp_out);
    } else if (*import_cmd) {
      Instance inst = load_instance(is_instance);
      const ImportedSolution s = import_solution(inst, is_solution);
      if (!is_out_schedule.empty()) save_schedule(s.schedule, is_out_schedule);
      if (!is_out_instance.empty()) {
        inst.reference_min_soft = s.min_soft;
        save_instance(inst, is_out_instance);
      }
      std::cout << json{{"min_soft", s.min_soft}}.dump() << "\n";
    } else if (*eval_cmd) {
      const Instance inst = load_instance(ev_instance);
      const Schedule s = load_schedule(ev_schedule);
      const PenaltyReport r = evaluate(s, inst);
      json out = report_to_json(r);
      out["fitness"] = fitness_from_report(r, inst);
      out["max_fitness"] = max_fitness(inst.num_employees, inst.num_days, inst.num_shifts);
      if (inst.reference_min_soft) out["optimal"] = is_optimal_report(r, inst);
      std::cout << out.dump(2) << "\n";
    } else if (*graph_cmd) {
      const Instance inst = load_instance(bg_instance);
      const std::string text = graph_to_json(build_graph(load_schedule(bg_schedule), inst)).dump() + "\n";
      if (bg_out.empty())
        std::cout << text;
      else
        write_text(bg_out, text);
    } else if (*run_cmd) {
      const Instance inst = load_instance(rg_instance);
      GaConfig cfg = rg_config.empty() ? GaConfig{} : ga_config_from_json(read_json(rg_config));
      cfg.seed = rg_seed;
      if (rg_pop) cfg.pop_size = rg_pop;
      if (rg_epochs) cfg.nb_max_epochs = rg_epochs;
      if (rg_patience) cfg.max_patience = rg_patience;
      if (rg_stop) cfg.stop_cond_version = static_cast<StopVersion>(rg_stop);
      if (rg_wall >= 0) cfg.max_wall_seconds = rg_wall;
      if (!inst.reference_min_soft && cfg.stop_cond_version == StopVersion::V1 && rg_stop == 0) {
        std::cerr << "instance has no reference_min_soft; using stop condition v2\n";
        cfg.stop_cond_version = StopVersion::V2;
      }
      cfg.use_improver = rg_improver != "none";
      auto op = make_operator(rg_improver, rg_endpoint, std::chrono::milliseconds(rg_timeout_ms));
      const RunTrace trace = run(inst, cfg, op.get());
      if (!rg_trace.empty()) write_text(rg_trace, trace_csv(trace.records));
      json summary{{"stop_epoch", trace.stop_epoch},
                   {"reached_optimal", trace.reached_optimal},
                   {"best_fitness", trace.best_fitness},
                   {"best_report", report_to_json(evaluate(trace.best_schedule, inst))},
                   {"best_schedule", schedule_to_json(trace.best_schedule)},
                   {"total_seconds", trace.total_seconds},
                   {"improver", rg_improver},
                   {"config", ga_config_to_json(cfg)}};
      if (!rg_summary.empty()) write_text(rg_summary, summary.dump(2) + "\n");
      std::printf("stop_epoch %d best_fitness %.6f reached_optimal %s seconds %.3f\n", trace.stop_epoch,
                  trace.best_fitness, trace.reached_optimal ? "yes" : "no", trace.total_seconds);
    } else if (*exp_cmd) {
      const ExperimentConfig cfg =
          experiment_config_from_json(read_json(ex_config), fs::path(ex_config).parent_path());
      const ReportFiles f = run_experiment(cfg, ex_out, ex_workers);
      std::printf("wrote %s\n", f.summary_json.string().c_str());
    } else if (*report_cmd) {
      const ReportFiles f = report(rp_runs, parse_pairs(rp_pairs), rp_out, rp_window);
      std::printf("wrote %s\n", f.summary_json.string().c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
