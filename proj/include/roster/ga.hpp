#pragma once

// Multi-modal genetic algorithm with probabilistic crowding.
//
// One generation:
//   crossover_all -> mutation_all -> [improvement operator] ->
//   crowding distances -> parent/offspring assignment -> prob_greedy update ->
//   selection -> fitness refresh -> patience update -> metrics

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roster/core.hpp"
#include "roster/improve.hpp"
#include "roster/model.hpp"
#include "roster/random.hpp"

namespace roster {

enum class StopVersion { V1 = 1, V2 = 2 };

struct GaConfig {
  int pop_size = 200;
  StopVersion stop_cond_version = StopVersion::V1;
  int nb_max_epochs = 50000;
  int max_patience = 3000;
  double probab_crossover = 0.5;
  double probab_mutation = 1.0;
  double min_prob_greedy = 0.4;
  bool use_improver = false;
  std::array<double, 2> crossover_mix{0.5, 0.5};        // one_line, one_line_partially
  std::array<double, 3> mutation_mix{0.2, 0.2, 0.6};    // swap, change, penalty
  std::uint64_t seed = 0;
  std::optional<double> max_wall_seconds;

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigurationError("invalid GA config: " + m); };
    if (pop_size < 2 || pop_size % 2 != 0) fail("pop_size must be a positive even number");
    if (nb_max_epochs < 1) fail("nb_max_epochs must be positive");
    if (max_patience < 1) fail("max_patience must be positive");
    auto prob = [&](double p, const char* n) {
      if (!(p >= 0.0 && p <= 1.0)) fail(std::string(n) + " must be in [0, 1]");
    };
    prob(probab_crossover, "probab_crossover");
    prob(probab_mutation, "probab_mutation");
    prob(min_prob_greedy, "min_prob_greedy");
    auto mix = [&](auto const& m, const char* n) {
      double s = 0;
      for (double p : m) {
        if (p < 0) fail(std::string(n) + " has a negative entry");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) fail(std::string(n) + " must sum to 1");
    };
    mix(crossover_mix, "crossover_mix");
    mix(mutation_mix, "mutation_mix");
    if (max_wall_seconds && !(*max_wall_seconds >= 0)) fail("max_wall_seconds must be nonnegative");
  }
};

struct ChromosomeInfo {
  double fitness = 0.0;
  int hard_total = 0;
  double soft_normalized = 0.0;
  long long soft_unnormalized = 0;
  bool optimal = false;
};

inline ChromosomeInfo chromosome_info(const Schedule& s, const Instance& inst) {
  const PenaltyReport r = evaluate(s, inst);
  ChromosomeInfo c;
  c.fitness = fitness_from_report(r, inst);
  c.hard_total = r.hard_total;
  c.soft_normalized = r.soft_normalized;
  c.soft_unnormalized = r.soft_unnormalized;
  c.optimal = inst.reference_min_soft && is_optimal_report(r, inst);
  return c;
}

inline std::vector<ChromosomeInfo> population_info(const std::vector<Schedule>& pop, const Instance& inst) {
  std::vector<ChromosomeInfo> out;
  out.reserve(pop.size());
  for (const Schedule& s : pop) out.push_back(chromosome_info(s, inst));
  return out;
}

struct PopulationState {
  std::vector<Schedule> chromosomes;
  std::vector<ChromosomeInfo> info;
  double best_fitness_so_far = -std::numeric_limits<double>::infinity();
  int patience = 0;
  double prob_greedy = 0.0;
  int epoch = 0;

  double max_fitness() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& c : info) m = std::max(m, c.fitness);
    return m;
  }
};

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

inline std::vector<Schedule> random_population(const Instance& inst, int pop_size, Rng& rng) {
  std::vector<Schedule> pop;
  pop.reserve(pop_size);
  for (int k = 0; k < pop_size; ++k) {
    Schedule s(inst.num_employees, inst.num_days);
    for (Shift& c : s.flat()) c = static_cast<Shift>(uniform_index(rng, kNumCodes));
    pop.push_back(std::move(s));
  }
  return pop;
}

inline PopulationState get_init_population(const Instance& inst, int pop_size, double min_prob_greedy, Rng& rng) {
  if (pop_size < 2 || pop_size % 2 != 0) throw ConfigurationError("pop_size must be a positive even number");
  PopulationState st;
  st.chromosomes = random_population(inst, pop_size, rng);
  st.info = population_info(st.chromosomes, inst);
  st.best_fitness_so_far = st.max_fitness();
  st.prob_greedy = min_prob_greedy;
  return st;
}

// ---------------------------------------------------------------------------
// Crossover
// ---------------------------------------------------------------------------

/// Exchanges row `i` of p1 with row `j` of p2, segment [a, a+len) of p1's
/// row against [b, b+len) of p2's row.
inline std::pair<Schedule, Schedule> swap_segments(const Schedule& p1, const Schedule& p2, int i, int j, int a, int b,
                                                   int len) {
  Schedule c1 = p1;
  Schedule c2 = p2;
  for (int k = 0; k < len; ++k) {
    c1(i, a + k) = p2(j, b + k);
    c2(j, b + k) = p1(i, a + k);
  }
  return {std::move(c1), std::move(c2)};
}

inline void check_same_shape(const Schedule& a, const Schedule& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("parents differ in shape");
}

inline std::pair<Schedule, Schedule> cx_one_line(const Schedule& p1, const Schedule& p2, Rng& rng) {
  check_same_shape(p1, p2);
  const int i = uniform_index(rng, p1.rows());
  const int j = uniform_index(rng, p2.rows());
  return swap_segments(p1, p2, i, j, 0, 0, p1.cols());
}

inline std::pair<Schedule, Schedule> cx_one_line_partially(const Schedule& p1, const Schedule& p2, Rng& rng) {
  check_same_shape(p1, p2);
  const int D = p1.cols();
  if (D < 1) throw InvalidInput("cx_one_line_partially needs at least one day");
  const int len = static_cast<int>(uniform_int(rng, 1, D));
  const int i = uniform_index(rng, p1.rows());
  const int j = uniform_index(rng, p2.rows());
  const int a = static_cast<int>(uniform_int(rng, 0, D - len));
  const int b = static_cast<int>(uniform_int(rng, 0, D - len));
  return swap_segments(p1, p2, i, j, a, b, len);
}

inline std::vector<Schedule> crossover_all(const std::vector<Schedule>& pop, const GaConfig& cfg, Rng& rng) {
  std::vector<int> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(rng, order);
  std::vector<Schedule> offspring;
  offspring.reserve(pop.size());
  for (std::size_t k = 0; k + 1 < order.size(); k += 2) {
    const Schedule& p1 = pop[order[k]];
    const Schedule& p2 = pop[order[k + 1]];
    if (bernoulli(rng, cfg.probab_crossover)) {
      auto [c1, c2] = draw_from(rng, cfg.crossover_mix) == 0 ? cx_one_line(p1, p2, rng)
                                                              : cx_one_line_partially(p1, p2, rng);
      offspring.push_back(std::move(c1));
      offspring.push_back(std::move(c2));
    } else {
      offspring.push_back(p1);
      offspring.push_back(p2);
    }
  }
  return offspring;
}

// ---------------------------------------------------------------------------
// Mutation
// ---------------------------------------------------------------------------

enum class MutationKind { Swap = 0, Change = 1, Penalty = 2 };

inline Shift random_other_code(Rng& rng, Shift current) {
  return static_cast<Shift>((code(current) + 1 + uniform_index(rng, kNumCodes - 1)) % kNumCodes);
}

inline Schedule mut_swap_shifts(Schedule ch, Rng& rng) {
  const int n = static_cast<int>(ch.size());
  if (n < 2) return ch;
  const int a = uniform_index(rng, n);
  int b = uniform_index(rng, n - 1);
  if (b >= a) ++b;
  auto flat = ch.flat();
  std::swap(flat[a], flat[b]);
  return ch;
}

inline Schedule mut_change_shift(Schedule ch, Rng& rng) {
  auto flat = ch.flat();
  if (flat.empty()) return ch;
  const int a = uniform_index(rng, static_cast<int>(flat.size()));
  flat[a] = random_other_code(rng, flat[a]);
  return ch;
}

/// Re-codes one of the cells carrying the highest penalty score.
inline Schedule mut_change_shift_penalty(Schedule ch, const Instance& inst, Rng& rng) {
  const Matrix<double> score = cell_penalty_scores(ch, inst);
  const auto flat = score.flat();
  if (flat.empty()) return ch;
  const double top = *std::max_element(flat.begin(), flat.end());
  std::vector<int> argmax;
  for (int k = 0; k < static_cast<int>(flat.size()); ++k)
    if (flat[k] == top) argmax.push_back(k);
  const int pick = argmax[uniform_index(rng, static_cast<int>(argmax.size()))];
  auto cells = ch.flat();
  cells[pick] = random_other_code(rng, cells[pick]);
  return ch;
}

inline Schedule mutate(const Schedule& ch, const Instance& inst, const std::array<double, 3>& mix, Rng& rng) {
  switch (static_cast<MutationKind>(draw_from(rng, mix))) {
    case MutationKind::Swap:
      return mut_swap_shifts(ch, rng);
    case MutationKind::Change:
      return mut_change_shift(ch, rng);
    case MutationKind::Penalty:
      return mut_change_shift_penalty(ch, inst, rng);
  }
  return ch;
}

inline void mutation_all(std::vector<Schedule>& offspring, const Instance& inst, const GaConfig& cfg, Rng& rng) {
  for (Schedule& ch : offspring)
    if (bernoulli(rng, cfg.probab_mutation)) ch = mutate(ch, inst, cfg.mutation_mix, rng);
}

// ---------------------------------------------------------------------------
// Crowding and matching
// ---------------------------------------------------------------------------

/// Entry (i, j): Hamming distance between parent i and offspring j.
inline Matrix<int> calc_crowding_distances(const std::vector<Schedule>& parents,
                                           const std::vector<Schedule>& offspring) {
  if (parents.size() != offspring.size()) throw InvalidInput("parents and offspring differ in count");
  const int n = static_cast<int>(parents.size());
  Matrix<int> dist(n, n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      check_same_shape(parents[i], offspring[j]);
      dist(i, j) = static_cast<int>(hamming(parents[i], offspring[j]));
    }
  }
  return dist;
}

namespace detail {

struct Assignment {
  std::vector<int> row_to_col;
  std::vector<long long> u;  // row potentials
  std::vector<long long> v;  // column potentials
};

// Shortest augmenting path Hungarian method, O(n^3).
inline Assignment hungarian(const Matrix<int>& cost) {
  const int n = cost.rows();
  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      long long delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  Assignment a;
  a.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) a.row_to_col[p[j] - 1] = j - 1;
  a.u.assign(u.begin() + 1, u.end());
  a.v.assign(v.begin() + 1, v.end());
  return a;
}

}  // namespace detail

/// Minimum-cost perfect assignment rows -> columns; among all optimal
/// assignments the lexicographically smallest permutation is returned.
inline std::vector<int> find_matchings(const Matrix<int>& dist) {
  if (dist.rows() != dist.cols()) throw InvalidInput("find_matchings needs a square matrix");
  const int n = dist.rows();
  if (n == 0) return {};
  detail::Assignment a = detail::hungarian(dist);

  // Every optimal assignment is a perfect matching on the tight edges of the
  // optimal dual. Walk rows in order and give each the smallest column that
  // still extends to such a matching: column j (held by row r) is reachable
  // when r can pass its column along an alternating cycle back to row i.
  auto tight = [&](int r, int c) { return dist(r, c) - a.u[r] - a.v[c] == 0; };
  std::vector<int> match = a.row_to_col;
  std::vector<int> owner(n);
  for (int r = 0; r < n; ++r) owner[match[r]] = r;

  std::vector<int> parent(n);
  std::vector<char> seen(n);
  for (int i = 0; i < n; ++i) {
    // Rows that can reach i: r -> r' when r is tight with match[r'].
    std::fill(seen.begin(), seen.end(), 0);
    std::fill(parent.begin(), parent.end(), -1);
    std::vector<int> queue{i};
    seen[i] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int target = queue[q];
      for (int r = i + 1; r < n; ++r) {
        if (seen[r] || !tight(r, match[target])) continue;
        seen[r] = 1;
        parent[r] = target;  // r hands over its column and takes match[target]
        queue.push_back(r);
      }
    }
    int best = match[i];
    for (int c = 0; c < best; ++c) {
      const int r = owner[c];
      if (r > i && seen[r] && tight(i, c)) {
        best = c;
        break;
      }
    }
    if (best != match[i]) {
      // Rotate along r0 -> ... -> i: each row takes the column of its parent.
      const int r = owner[best];
      std::vector<int> chain;
      for (int x = r; x != i; x = parent[x]) chain.push_back(x);
      std::vector<int> new_cols(chain.size());
      for (std::size_t k = 0; k < chain.size(); ++k) new_cols[k] = match[parent[chain[k]]];
      for (std::size_t k = 0; k < chain.size(); ++k) match[chain[k]] = new_cols[k];
      match[i] = best;
      for (int x = 0; x < n; ++x) owner[match[x]] = x;
    }
  }
  return match;
}

inline long long assignment_cost(const Matrix<int>& dist, const std::vector<int>& perm) {
  long long c = 0;
  for (int i = 0; i < static_cast<int>(perm.size()); ++i) c += dist(i, perm[i]);
  return c;
}

// ---------------------------------------------------------------------------
// Selection and schedules
// ---------------------------------------------------------------------------

inline double update_prob_greedy(int epoch, const GaConfig& cfg) {
  const double p = cfg.min_prob_greedy +
                   (1.0 - cfg.min_prob_greedy) * static_cast<double>(epoch) / static_cast<double>(cfg.nb_max_epochs);
  return std::min(1.0, p);
}

/// True when the offspring wins its duel against the matched parent.
inline bool offspring_wins(double parent_fitness, double offspring_fitness, double prob_greedy, Rng& rng) {
  if (!(parent_fitness > 0.0) || !(offspring_fitness > 0.0))
    throw ContractViolation("selection requires positive fitness values");
  if (uniform01(rng) < prob_greedy) return offspring_fitness > parent_fitness;
  return uniform01(rng) < offspring_fitness / (offspring_fitness + parent_fitness);
}

struct SelectionResult {
  std::vector<Schedule> population;
  std::vector<ChromosomeInfo> info;
};

/// Parent i duels offspring matching[i].
inline SelectionResult selection(const std::vector<Schedule>& parents, const std::vector<ChromosomeInfo>& parent_info,
                                 const std::vector<Schedule>& offspring,
                                 const std::vector<ChromosomeInfo>& offspring_info, const std::vector<int>& matching,
                                 double prob_greedy, Rng& rng) {
  const std::size_t n = parents.size();
  if (offspring.size() != n || matching.size() != n || parent_info.size() != n || offspring_info.size() != n)
    throw InvalidInput("selection inputs differ in size");
  std::vector<char> used(n, 0);
  for (int m : matching) {
    if (m < 0 || static_cast<std::size_t>(m) >= n || used[m]) throw InvalidInput("matching is not a permutation");
    used[m] = 1;
  }
  SelectionResult out;
  out.population.reserve(n);
  out.info.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int j = matching[i];
    if (offspring_wins(parent_info[i].fitness, offspring_info[j].fitness, prob_greedy, rng)) {
      out.population.push_back(offspring[j]);
      out.info.push_back(offspring_info[j]);
    } else {
      out.population.push_back(parents[i]);
      out.info.push_back(parent_info[i]);
    }
  }
  return out;
}

inline int update_patience(int patience, double best_so_far, double new_best) {
  return new_best > best_so_far ? 0 : patience + 1;
}

inline bool stop_alg(const PopulationState& st, const GaConfig& cfg, const Instance& inst,
                     double elapsed_seconds = 0.0) {
  if (cfg.stop_cond_version == StopVersion::V1 && !inst.reference_min_soft)
    throw ConfigurationError("stop condition v1 needs reference_min_soft on the instance");
  if (st.epoch >= cfg.nb_max_epochs) return true;
  if (cfg.max_wall_seconds && elapsed_seconds > *cfg.max_wall_seconds) return true;
  if (cfg.stop_cond_version == StopVersion::V1)
    return std::any_of(st.info.begin(), st.info.end(), [](const ChromosomeInfo& c) { return c.optimal; });
  return st.patience >= cfg.max_patience;
}

// ---------------------------------------------------------------------------
// Metrics and the main loop
// ---------------------------------------------------------------------------

struct GenerationRecord {
  int epoch = 0;
  double mean_fitness = 0.0;
  double max_fitness = 0.0;
  std::optional<double> min_soft_feasible;
  std::optional<double> mean_soft_feasible;
  int min_hard = 0;
  double mean_hard = 0.0;
  int num_feasible = 0;
  std::optional<int> num_optimal;  // needs reference_min_soft
  std::optional<double> mean_crowding;
  std::optional<double> max_crowding;
  double elapsed_seconds = 0.0;
};

inline constexpr std::array<const char*, 12> kTraceColumns{
    "epoch",      "mean_fitness", "max_fitness",  "min_soft_feasible", "mean_soft_feasible", "min_hard",
    "mean_hard",  "num_feasible", "num_optimal",  "mean_crowding",     "max_crowding",       "elapsed_seconds"};

inline GenerationRecord make_record(const PopulationState& st, const Instance& inst,
                                    const std::vector<int>* crowding, double elapsed) {
  GenerationRecord r;
  r.epoch = st.epoch;
  const double n = static_cast<double>(st.info.size());
  double fit_sum = 0.0, hard_sum = 0.0, soft_sum = 0.0;
  double soft_min = std::numeric_limits<double>::infinity();
  int hard_min = std::numeric_limits<int>::max();
  int optimal = 0;
  r.max_fitness = -std::numeric_limits<double>::infinity();
  for (const ChromosomeInfo& c : st.info) {
    fit_sum += c.fitness;
    r.max_fitness = std::max(r.max_fitness, c.fitness);
    hard_sum += c.hard_total;
    hard_min = std::min(hard_min, c.hard_total);
    if (c.hard_total == 0) {
      ++r.num_feasible;
      soft_sum += static_cast<double>(c.soft_unnormalized);
      soft_min = std::min(soft_min, static_cast<double>(c.soft_unnormalized));
    }
    optimal += c.optimal;
  }
  r.mean_fitness = fit_sum / n;
  r.mean_hard = hard_sum / n;
  r.min_hard = hard_min;
  if (r.num_feasible > 0) {
    r.min_soft_feasible = soft_min;
    r.mean_soft_feasible = soft_sum / r.num_feasible;
  }
  if (inst.reference_min_soft) r.num_optimal = optimal;
  if (crowding && !crowding->empty()) {
    double s = 0.0;
    int m = 0;
    for (int d : *crowding) {
      s += d;
      m = std::max(m, d);
    }
    r.mean_crowding = s / static_cast<double>(crowding->size());
    r.max_crowding = m;
  }
  r.elapsed_seconds = elapsed;
  return r;
}

struct RunTrace {
  std::vector<GenerationRecord> records;
  std::vector<Schedule> final_population;
  Schedule best_schedule;
  double best_fitness = 0.0;
  bool reached_optimal = false;
  int stop_epoch = 0;
  double total_seconds = 0.0;
};

inline RunTrace run(const Instance& inst, const GaConfig& cfg, ImprovementOperator* improver = nullptr) {
  cfg.validate();
  inst.validate();
  if (cfg.stop_cond_version == StopVersion::V1 && !inst.reference_min_soft)
    throw ConfigurationError("stop condition v1 needs reference_min_soft on the instance");
  if (cfg.use_improver && !improver) throw ConfigurationError("use_improver set but no operator supplied");

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  Rng rng(cfg.seed);
  PopulationState st = get_init_population(inst, cfg.pop_size, cfg.min_prob_greedy, rng);

  RunTrace trace;
  auto track_best = [&] {
    for (std::size_t k = 0; k < st.info.size(); ++k) {
      if (trace.best_schedule.size() == 0 || st.info[k].fitness > trace.best_fitness) {
        trace.best_fitness = st.info[k].fitness;
        trace.best_schedule = st.chromosomes[k];
      }
    }
  };
  track_best();
  trace.records.push_back(make_record(st, inst, nullptr, elapsed()));

  // The wall-clock cap is checked against the projected end of the next
  // generation so that a capped run does not overrun its budget.
  std::vector<int> matched_distance(cfg.pop_size);
  double last_generation_seconds = 0.0;
  double generation_start = elapsed();
  while (!stop_alg(st, cfg, inst, generation_start + last_generation_seconds)) {
    std::vector<Schedule> offspring = crossover_all(st.chromosomes, cfg, rng);
    mutation_all(offspring, inst, cfg, rng);
    if (cfg.use_improver) {
      try {
        offspring = improver->improve(offspring, inst);
      } catch (const OperatorFailure& e) {
        throw OperatorFailure(e.what(), st.epoch);
      } catch (const std::exception& e) {
        throw OperatorFailure(std::string("improvement operator failed: ") + e.what(), st.epoch);
      }
      if (offspring.size() != st.chromosomes.size())
        throw OperatorFailure("improvement operator changed the batch size", st.epoch);
      for (const Schedule& s : offspring)
        if (s.rows() != inst.num_employees || s.cols() != inst.num_days)
          throw OperatorFailure("improvement operator returned a schedule of the wrong shape", st.epoch);
    }
    const std::vector<ChromosomeInfo> offspring_info = population_info(offspring, inst);
    const Matrix<int> distances = calc_crowding_distances(st.chromosomes, offspring);
    const std::vector<int> matches = find_matchings(distances);
    for (int i = 0; i < cfg.pop_size; ++i) matched_distance[i] = distances(i, matches[i]);
    st.prob_greedy = update_prob_greedy(st.epoch, cfg);
    SelectionResult sel = selection(st.chromosomes, st.info, offspring, offspring_info, matches, st.prob_greedy, rng);
    st.chromosomes = std::move(sel.population);
    st.info = std::move(sel.info);
    const double best_now = st.max_fitness();
    st.patience = update_patience(st.patience, st.best_fitness_so_far, best_now);
    st.best_fitness_so_far = std::max(st.best_fitness_so_far, best_now);
    ++st.epoch;
    track_best();
    const double now = elapsed();
    trace.records.push_back(make_record(st, inst, &matched_distance, now));
    last_generation_seconds = now - generation_start;
    generation_start = now;
  }

  trace.stop_epoch = st.epoch;
  trace.reached_optimal =
      std::any_of(st.info.begin(), st.info.end(), [](const ChromosomeInfo& c) { return c.optimal; });
  trace.final_population = std::move(st.chromosomes);
  trace.total_seconds = elapsed();
  return trace;
}

// ---------------------------------------------------------------------------
// Trace CSV
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
template <class T>
std::string fmt_opt(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>)
    return fmt_double(*v);
  else
    return std::to_string(*v);
}
}  // namespace detail

inline std::string trace_csv_row(const GenerationRecord& r, bool with_elapsed = true) {
  std::string s = std::to_string(r.epoch) + "," + detail::fmt_double(r.mean_fitness) + "," +
                  detail::fmt_double(r.max_fitness) + "," + detail::fmt_opt(r.min_soft_feasible) + "," +
                  detail::fmt_opt(r.mean_soft_feasible) + "," + std::to_string(r.min_hard) + "," +
                  detail::fmt_double(r.mean_hard) + "," + std::to_string(r.num_feasible) + "," +
                  detail::fmt_opt(r.num_optimal) + "," + detail::fmt_opt(r.mean_crowding) + "," +
                  detail::fmt_opt(r.max_crowding);
  if (with_elapsed) s += "," + detail::fmt_double(r.elapsed_seconds);
  return s;
}

inline std::string trace_csv(const std::vector<GenerationRecord>& records, bool with_elapsed = true) {
  std::string out;
  for (std::size_t k = 0; k < kTraceColumns.size() - (with_elapsed ? 0 : 1); ++k) {
    if (k) out += ',';
    out += kTraceColumns[k];
  }
  out += '\n';
  for (const auto& r : records) {
    out += trace_csv_row(r, with_elapsed);
    out += '\n';
  }
  return out;
}

inline std::vector<GenerationRecord> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty trace CSV");
  std::vector<GenerationRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != kTraceColumns.size())
      throw InvalidInput("trace CSV line " + std::to_string(line_no) + ": expected " +
                         std::to_string(kTraceColumns.size()) + " fields");
    auto opt_d = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<double>(std::stod(s)); };
    GenerationRecord r;
    r.epoch = std::stoi(f[0]);
    r.mean_fitness = std::stod(f[1]);
    r.max_fitness = std::stod(f[2]);
    r.min_soft_feasible = opt_d(f[3]);
    r.mean_soft_feasible = opt_d(f[4]);
    r.min_hard = std::stoi(f[5]);
    r.mean_hard = std::stod(f[6]);
    r.num_feasible = std::stoi(f[7]);
    if (!f[8].empty()) r.num_optimal = std::stoi(f[8]);
    r.mean_crowding = opt_d(f[9]);
    r.max_crowding = opt_d(f[10]);
    r.elapsed_seconds = std::stod(f[11]);
    out.push_back(r);
  }
  return out;
}

}  // namespace roster
